import bond

js = bond.make_bond("JavaScript")
js.call("showWelcome", "guest")
