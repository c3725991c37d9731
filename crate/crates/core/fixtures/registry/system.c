int main() {
    system("ls -l /tmp");
    return 0;
}
