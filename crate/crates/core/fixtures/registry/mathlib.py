def compute(a, b):
    return helper(a)


def helper(v):
    print(v)
