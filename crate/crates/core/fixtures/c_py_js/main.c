#include <stdio.h>
#include <Python.h>

void init_log(const char *path) {
    FILE *log = fopen(path, "w");
    fprintf(log, "start\n");
}

int compute(int a, int b) {
    return scale(a) + b;
}

int scale(int x) {
    return x * 2;
}

int main(int argc, char **argv) {
    init_log("run.log");
    int total = compute(3, 4);
    printf("%d\n", total);
    Py_Initialize();
    FILE *fp = fopen("S.py", "r");
    PyRun_SimpleFile(fp, "S.py");
    Py_Finalize();
    return 0;
}
