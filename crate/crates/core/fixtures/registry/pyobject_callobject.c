int main() {
    PyObject *pModule = PyImport_ImportModule("mathlib");
    PyObject *pFunc = PyObject_GetAttrString(pModule, "compute");
    PyObject *pArgs = PyTuple_New(2);
    PyTuple_SetItem(pArgs, 0, x);
    PyTuple_SetItem(pArgs, 1, y);
    PyObject_CallObject(pFunc, pArgs);
    return 0;
}
