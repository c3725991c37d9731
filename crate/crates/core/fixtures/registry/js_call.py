import bond

js = bond.make_bond("JavaScript")
js.call("draw", "square", "blue")
