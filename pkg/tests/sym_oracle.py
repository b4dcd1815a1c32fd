"""Symbolic reference computations (sympy), independent of the numeric path.

Everything here is derived by straightforward symbolic differentiation of
the defining formulas; nothing is shared with ``tgbundle`` except the
curvature convention ``R(X,Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y]Z``.
"""

from __future__ import annotations

import functools

import numpy as np
import sympy as sp


def christoffel(g, xs):
    n = len(xs)
    ginv = g.inv()
    return [[[sp.simplify(sum(ginv[a, d] * (sp.diff(g[d, c], xs[b]) + sp.diff(g[d, b], xs[c])
                                             - sp.diff(g[b, c], xs[d])) for d in range(n)) / 2)
              for c in range(n)] for b in range(n)] for a in range(n)]


def riemann(gamma, xs):
    """R[a][b][c][d] = R^a_bcd with R(d_c, d_d) d_b = R^a_bcd d_a."""
    n = len(xs)
    return [[[[sp.simplify(sp.diff(gamma[a][d][b], xs[c]) - sp.diff(gamma[a][c][b], xs[d])
                           + sum(gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b]
                                 for e in range(n)))
               for d in range(n)] for c in range(n)] for b in range(n)] for a in range(n)]


class Problem:
    """Field ``xi(u)`` along an immersion ``x(u)`` into a metric ``g(x)``."""

    def __init__(self, g, xs, immersion, field, us):
        self.g, self.xs, self.us = g, xs, us
        self.n, self.l = len(xs), len(us)
        gamma = christoffel(g, xs)
        R = riemann(gamma, xs)
        sub = dict(zip(xs, immersion))
        self.G = sp.Matrix(g).subs(sub)
        self.gamma = [[[gamma[a][b][c].subs(sub) for c in range(self.n)] for b in range(self.n)]
                      for a in range(self.n)]
        self.R = [[[[R[a][b][c][d].subs(sub) for d in range(self.n)] for c in range(self.n)]
                   for b in range(self.n)] for a in range(self.n)]
        self.x = list(immersion)
        self.xi = list(field)
        self.J = [[sp.diff(self.x[a], u) for u in us] for a in range(self.n)]

    def cov(self, W, i):
        """Covariant derivative of W(u) along the i-th parameter curve."""
        n = self.n
        return [sp.diff(W[a], self.us[i]) + sum(self.gamma[a][b][c] * W[b] * self.J[c][i]
                                                for b in range(n) for c in range(n))
                for a in range(n)]

    def curv(self, X, Y, Z):
        n = self.n
        return [sum(self.R[a][b][c][d] * Z[b] * X[c] * Y[d]
                    for b in range(n) for c in range(n) for d in range(n)) for a in range(n)]

    def column(self, i):
        return [self.J[a][i] for a in range(self.n)]

    def residual_vectors(self):
        """(normal part of *nabla_i d_j, residual-(b) vector) for all i, j."""
        n, l = self.n, self.l
        G = self.G
        Jm = sp.Matrix(self.J)
        first = Jm.T * G * Jm
        P = Jm * first.inv() * Jm.T * G  # tangential projector
        nab = [self.cov(self.xi, i) for i in range(l)]
        out = {}
        for i in range(l):
            for j in range(l):
                cov_dd = self.cov(self.column(j), i)
                h = [(p + q) / 2 for p, q in zip(self.curv(self.xi, nab[i], self.column(j)),
                                                  self.curv(self.xi, nab[j], self.column(i)))]
                S = sp.Matrix([c + d for c, d in zip(cov_dd, h)])
                t = first.inv() * Jm.T * G * S
                normal = S - P * S
                along = [sum(t[k] * nab[k][a] for k in range(l)) for a in range(n)]
                d2 = self.cov(nab[j], i)
                rxi = self.curv(self.column(i), self.column(j), self.xi)
                resb = sp.Matrix([d2[a] - along[a] - rxi[a] / 2 for a in range(n)])
                out[(i, j)] = (normal, resb)
        return out

    @functools.cached_property
    def residual_function(self):
        """Numeric ``u -> (res_a, res_b)`` with ambient norms, max over pairs."""
        G = self.G
        pieces = []
        for (normal, resb) in self.residual_vectors().values():
            pieces.append(((normal.T * G * normal)[0, 0], (resb.T * G * resb)[0, 0]))
        fn = sp.lambdify(self.us, pieces, "numpy")

        def residuals(u):
            vals = np.array(fn(*u), dtype=float)
            vals = np.sqrt(np.maximum(vals, 0.0))
            return float(vals[:, 0].max()), float(vals[:, 1].max())

        return residuals


def conformal_metric(xs, c):
    r2 = sum(x ** 2 for x in xs)
    lam = 1 / (1 + sp.Rational(c) / 4 * r2) ** 2 if isinstance(c, int) else 1 / (1 + c / 4 * r2) ** 2
    return sp.diag(*([lam] * len(xs)))
