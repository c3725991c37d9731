int main(int argc, char **argv) {
    char *code = argv[1];
    PyRun_SimpleString(code);
    return 0;
}
