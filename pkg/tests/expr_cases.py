"""Golden expressions with independent Python oracles, and malformed inputs."""

import math

import numpy as np

P = {"x1": 0.7, "x2": 1.3, "c": 1.0}
Q = {"x1": 2.0, "x2": -0.4, "c": -0.5}

GOLDEN = [
    ("x1", lambda x1, x2, c: x1, P),
    ("x1 + x2", lambda x1, x2, c: x1 + x2, P),
    ("x1 - x2 - 1", lambda x1, x2, c: (x1 - x2) - 1, P),
    ("x1 * x2 + 3", lambda x1, x2, c: x1 * x2 + 3, Q),
    ("x1 / x2 / 2", lambda x1, x2, c: (x1 / x2) / 2, Q),
    ("x1^2", lambda x1, x2, c: x1 ** 2, P),
    ("x1^3 - 2*x1", lambda x1, x2, c: x1 ** 3 - 2 * x1, Q),
    ("-x1^2", lambda x1, x2, c: -(x1 ** 2), P),
    ("(-x1)^2", lambda x1, x2, c: (-x1) ** 2, P),
    ("2^x1", lambda x1, x2, c: 2 ** x1, P),
    ("x1^x2", lambda x1, x2, c: x1 ** x2, P),
    ("2^3^x1", lambda x1, x2, c: 2 ** (3 ** x1), P),
    ("x1^-1", lambda x1, x2, c: x1 ** -1, Q),
    ("x1^-x2", lambda x1, x2, c: x1 ** (-x2), P),
    ("--x1", lambda x1, x2, c: x1, Q),
    ("x1 * -x2", lambda x1, x2, c: x1 * (-x2), P),
    ("sin(x1)", lambda x1, x2, c: math.sin(x1), P),
    ("cos(x1)^2", lambda x1, x2, c: math.cos(x1) ** 2, Q),
    ("sin(x1)^2 + cos(x1)^2", lambda x1, x2, c: math.sin(x1) ** 2 + math.cos(x1) ** 2, P),
    ("tan(x1)", lambda x1, x2, c: math.tan(x1), P),
    ("exp(x1*x2)", lambda x1, x2, c: math.exp(x1 * x2), Q),
    ("log(x1)", lambda x1, x2, c: math.log(x1), Q),
    ("log(1 + x1^2)", lambda x1, x2, c: math.log(1 + x1 ** 2), P),
    ("sqrt(x1^2 + x2^2)", lambda x1, x2, c: math.hypot(x1, x2), Q),
    ("abs(x1 - x2)", lambda x1, x2, c: abs(x1 - x2), P),
    ("1/(1+(c/4)*(x1^2+x2^2))^2", lambda x1, x2, c: 1 / (1 + (c / 4) * (x1 ** 2 + x2 ** 2)) ** 2, P),
    ("exp(-x1^2/2)", lambda x1, x2, c: math.exp(-(x1 ** 2) / 2), Q),
    ("x1*exp(x2) - x2*exp(x1)", lambda x1, x2, c: x1 * math.exp(x2) - x2 * math.exp(x1), P),
    ("sin(x1*x2)/x1", lambda x1, x2, c: math.sin(x1 * x2) / x1, Q),
    ("(x1 + x2)^4", lambda x1, x2, c: (x1 + x2) ** 4, P),
    ("x1^0.5", lambda x1, x2, c: math.sqrt(x1), Q),
    ("x1^2.5", lambda x1, x2, c: x1 ** 2.5, P),
    ("2*pi*x1", lambda x1, x2, c: 2 * math.pi * x1, P),
    ("cos(pi*x1)", lambda x1, x2, c: math.cos(math.pi * x1), P),
    ("1e-3*x1^2 + 2.5e2*x2", lambda x1, x2, c: 1e-3 * x1 ** 2 + 250 * x2, Q),
    (".5*x1", lambda x1, x2, c: 0.5 * x1, P),
    ("3.*x1 - 4", lambda x1, x2, c: 3 * x1 - 4, Q),
    ("1 - x1/2 + x1^2/6 - x1^3/24", lambda x1, x2, c: 1 - x1 / 2 + x1 ** 2 / 6 - x1 ** 3 / 24, P),
    ("sqrt(exp(x1))", lambda x1, x2, c: math.exp(x1 / 2), Q),
    ("log(exp(x1) + exp(x2))", lambda x1, x2, c: math.log(math.exp(x1) + math.exp(x2)), P),
    ("tan(x1)^2 - 1/cos(x1)^2", lambda x1, x2, c: math.tan(x1) ** 2 - 1 / math.cos(x1) ** 2, P),
    ("x1 / (x2 * c)", lambda x1, x2, c: x1 / (x2 * c), Q),
    ("x1 - (x2 - c)", lambda x1, x2, c: x1 - (x2 - c), P),
    ("x1^2 * x2^3 * c", lambda x1, x2, c: x1 ** 2 * x2 ** 3 * c, Q),
    ("sin(cos(tan(x1)))", lambda x1, x2, c: math.sin(math.cos(math.tan(x1))), P),
    ("(1 + c/4 * x1^2)^-2", lambda x1, x2, c: (1 + c / 4 * x1 ** 2) ** -2, Q),
    ("u1^2 * sin(u1)", lambda u1: u1 ** 2 * math.sin(u1), {"u1": 0.9}),
    ("abs(sin(x1)) + abs(cos(x2))", lambda x1, x2, c: abs(math.sin(x1)) + abs(math.cos(x2)), Q),
    ("exp(log(x1) * x2)", lambda x1, x2, c: x1 ** x2, Q),
    ("-(x1 + x2)^2 / -(c + 1)", lambda x1, x2, c: -((x1 + x2) ** 2) / -(c + 1), P),
]

# (source, line, column) of the reported error
MALFORMED = [
    ("x1 + * 2", 1, 6),
    ("(x1 + 2", 1, 8),
    ("x1 2", 1, 4),
    ("sin(x1, x2)", 1, 1),
    ("foo(x1)", 1, 1),
    ("x1 + y", 1, 6),
    ("x1 $ 2", 1, 4),
    ("x1^", 1, 4),
    ("x1 +\n  * x2", 2, 3),
    ("sin x1", 1, 1),
]


def fd_gradient(fn, point, h=1e-3):
    """Five-point central differences in every bound variable."""
    names = list(point)
    out = np.zeros(len(names))
    for k, name in enumerate(names):
        step = h * (1.0 + abs(point[name]))

        def at(t):
            p = dict(point)
            p[name] = point[name] + t
            return fn(**p)

        out[k] = (-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) / (12 * step)
    return out
