import PyV8

script = "greet('world')"
PyV8.JSContext.eval(script)
