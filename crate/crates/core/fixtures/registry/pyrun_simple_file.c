int main() {
    FILE *fp = fopen("job.py", "r");
    PyRun_SimpleFile(fp, "job.py");
    return 0;
}
