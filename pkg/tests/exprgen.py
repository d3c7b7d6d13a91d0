"""Random well-behaved expressions over (x, v) for property tests.

Generated trees stay smooth and moderate in size on |x|, |v| <= 1.5 so
that central finite differences are a meaningful oracle.
"""

import random

UNARY = ("sin", "cos", "tanh", "exp", "neg")
BINARY = ("+", "-", "*", "/", "^")


def random_expr(rng: random.Random, depth: int = 3) -> str:
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return "x"
        if r < 0.8:
            return "v"
        return f"{rng.uniform(-3, 3):.3f}"
    if rng.random() < 0.35:
        op = rng.choice(UNARY)
        inner = random_expr(rng, depth - 1)
        if op == "neg":
            return f"-({inner})"
        if op == "exp":
            # keep the argument bounded
            return f"exp(sin({inner}))"
        return f"{op}({inner})"
    op = rng.choice(BINARY)
    a, b = random_expr(rng, depth - 1), random_expr(rng, depth - 1)
    if op == "/":
        # denominator bounded away from zero
        return f"({a})/(2+sin({b}))"
    if op == "^":
        return f"({a})^{rng.choice([2, 3])}"
    return f"({a}){op}({b})"


def mp_eval(e, x, v, dps: int = 40):
    """Evaluate a parsed expression in mpmath at ``dps`` digits.

    Difference quotients built from these values carry no float rounding,
    so their only error is the truncation of the difference formula.
    """
    import mpmath
    from phaseplane.expr import Binary, Constant, Unary, Variable

    funcs = {"sin": mpmath.sin, "cos": mpmath.cos, "tan": mpmath.tan, "exp": mpmath.exp,
             "log": mpmath.log, "sqrt": mpmath.sqrt, "abs": abs, "tanh": mpmath.tanh,
             "-": lambda a: -a}

    def walk(n):
        if isinstance(n, Constant):
            return {"pi": mpmath.pi, "e": mpmath.e}.get(n.name, mpmath.mpf(n.value))
        if isinstance(n, Variable):
            return x if n.name == "x" else v
        if isinstance(n, Unary):
            return funcs[n.op](walk(n.operand))
        a, b = walk(n.left), walk(n.right)
        if n.op == "^":
            return a ** int(b) if b == int(b) else a ** b
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        return a * b if n.op == "*" else a / b

    with mpmath.workdps(dps):
        x, v = mpmath.mpf(x), mpmath.mpf(v)
        return walk(e)
