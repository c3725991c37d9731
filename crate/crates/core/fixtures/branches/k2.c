int main(int argc, char **argv) {
    char *code;
    if (argc > 1) {
        code = "print('verbose')";
    } else {
        code = "print('quiet')";
    }
    PyRun_SimpleString(code);
    return 0;
}
