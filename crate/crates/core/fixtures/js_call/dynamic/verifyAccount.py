import bond

js = bond.make_bond("JavaScript")
prefix = "show"
js.call(prefix + input("page? "), "guest")
