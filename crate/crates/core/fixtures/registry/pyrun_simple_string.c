int main() {
    PyRun_SimpleString("print('hello from C')");
    return 0;
}
