import PyV8


def load_config(name):
    handle = open(name)
    return handle.read()


def report(msg):
    print(msg)


config = load_config("settings.ini")
report(config)
jsfile = open("ui.js")
PyV8.JSContext.eval(jsfile.read())
