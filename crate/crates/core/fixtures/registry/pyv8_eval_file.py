import PyV8

jsfile = open("widgets.js")
PyV8.JSContext.eval(jsfile.read())
