import PyV8


def verify(user, password):
    return check_credentials(user, password)


def check_credentials(user, password):
    return lookup(user) == password


ok = verify("alice", "secret")
jsfile = open("welcome.js")
PyV8.JSContext.eval(jsfile.read())
