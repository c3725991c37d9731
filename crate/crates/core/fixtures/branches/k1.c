int main(int argc, char **argv) {
    char *code = "print('one')";
    PyRun_SimpleString(code);
    return 0;
}
