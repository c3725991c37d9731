int main(int argc, char **argv) {
    char *code;
    if (argc == 1) {
        code = "import os";
    } else if (argc == 2) {
        code = "import sys";
    } else {
        code = "import json";
    }
    PyRun_SimpleString(code);
    return 0;
}
