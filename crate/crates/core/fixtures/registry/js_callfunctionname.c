int main() {
    JS_CallFunctionName(cx, global, "draw", argc, argv, &rval);
    return 0;
}
