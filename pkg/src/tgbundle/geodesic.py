"""Geodesics of the Sasaki metric.

A curve ``sigma -> (x(sigma), xi(sigma))`` in ``TM`` is a geodesic when::

    x'' + R(xi, xi') x' = 0,      xi'' = 0,

with ``'`` the covariant derivative along ``x``.  In coordinates, with
``eta = D xi = xi_dot + Gamma(xi, x_dot)``::

    x_ddot  = -Gamma(x_dot, x_dot) - R(xi, eta) x_dot
    xi_ddot = -Gamma(eta, x_dot) - (dGamma . x_dot)(xi, x_dot)
              - Gamma(xi_dot, x_dot) - Gamma(xi, x_ddot)

:func:`oracle_integrate` solves the plain geodesic equation of the ``2n x 2n``
Sasaki matrix with finite-difference Christoffel symbols instead, as an
independent cross-check.  Both use fixed-step RK4 and stop at chart exit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .manifold import Box, ChartedManifold, DomainError, local_geometry
from .sasaki import sasaki_christoffel_fd, sasaki_matrix_batch

__all__ = [
    "BundleGeodesicState",
    "TraceRecord",
    "Trace",
    "rhs",
    "sasaki_energy",
    "integrate",
    "integrate_many",
    "oracle_integrate",
    "oracle_integrate_many",
    "integrate_base",
    "max_divergence",
    "write_csv",
    "csv_header",
]


@dataclass(frozen=True, eq=False)
class BundleGeodesicState:
    """Coordinate position and velocity of a curve in ``TM``."""

    x: np.ndarray
    xdot: np.ndarray
    xi: np.ndarray
    xidot: np.ndarray

    def __post_init__(self):
        for name in ("x", "xdot", "xi", "xidot"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.x.shape
        if self.x.ndim != 1 or any(getattr(self, k).shape != n for k in ("xdot", "xi", "xidot")):
            raise ValueError("state components must be vectors of equal length")

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xdot, self.xi, self.xidot])

    @classmethod
    def from_array(cls, arr) -> "BundleGeodesicState":
        arr = np.asarray(arr, dtype=float)
        n = arr.shape[0] // 4
        return cls(arr[:n], arr[n:2 * n], arr[2 * n:3 * n], arr[3 * n:])


@dataclass(frozen=True)
class TraceRecord:
    sigma: float
    state: BundleGeodesicState
    energy: float


@dataclass(eq=False)
class Trace:
    """Sampled trajectory backed by arrays; indexing yields :class:`TraceRecord`.

    ``exited`` is set when the chart was left before ``sigma_end``.
    """

    sigmas: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    exited: bool = False

    def __len__(self):
        return len(self.sigmas)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        return TraceRecord(float(self.sigmas[k]), BundleGeodesicState.from_array(self.states[k]),
                           float(self.energies[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @property
    def final(self) -> BundleGeodesicState:
        return BundleGeodesicState.from_array(self.states[-1])

    @property
    def energy_drift(self) -> float:
        """Largest relative deviation of the energy from its initial value."""
        e = self.energies
        return float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] != 0 else float(np.max(np.abs(e)))


def _unpack(Y, n):
    return Y[..., :n], Y[..., n:2 * n], Y[..., 2 * n:3 * n], Y[..., 3 * n:]


def _rhs_batch(m: ChartedManifold, Y: np.ndarray) -> np.ndarray:
    n = m.dim
    x, xd, xi, xid = _unpack(Y, n)
    geo = local_geometry(m, x, order=2)
    G, dG, R = geo.gamma, geo.dgamma, geo.riemann
    eta = xid + np.einsum("...abc,...b,...c->...a", G, xi, xd)
    xdd = (-np.einsum("...abc,...b,...c->...a", G, xd, xd)
           - np.einsum("...abcd,...b,...c,...d->...a", R, xd, xi, eta))
    xidd = (-np.einsum("...abc,...b,...c->...a", G, eta, xd)
            - np.einsum("...abce,...e,...b,...c->...a", dG, xd, xi, xd)
            - np.einsum("...abc,...b,...c->...a", G, xid, xd)
            - np.einsum("...abc,...b,...c->...a", G, xi, xdd))
    return np.concatenate([xd, xdd, xid, xidd], axis=-1)


def _energy_batch(m: ChartedManifold, Y: np.ndarray) -> np.ndarray:
    n = m.dim
    x, xd, xi, xid = _unpack(Y, n)
    geo = local_geometry(m, x)
    eta = xid + np.einsum("...abc,...b,...c->...a", geo.gamma, xi, xd)
    return (np.einsum("...a,...ab,...b->...", xd, geo.g, xd)
            + np.einsum("...a,...ab,...b->...", eta, geo.g, eta))


def _oracle_rhs_batch(m: ChartedManifold, Y: np.ndarray, h: float = 1e-5) -> np.ndarray:
    n = m.dim
    x, xd, xi, xid = _unpack(Y, n)
    q = np.concatenate([x, xi], axis=-1)
    qd = np.concatenate([xd, xid], axis=-1)
    gamma = sasaki_christoffel_fd(m, q, h)
    qdd = -np.einsum("...abc,...b,...c->...a", gamma, qd, qd)
    return np.concatenate([xd, qdd[..., :n], xid, qdd[..., n:]], axis=-1)


def _oracle_energy_batch(m: ChartedManifold, Y: np.ndarray) -> np.ndarray:
    n = m.dim
    x, xd, xi, xid = _unpack(Y, n)
    q = np.concatenate([x, xi], axis=-1)
    qd = np.concatenate([xd, xid], axis=-1)
    return np.einsum("...a,...ab,...b->...", qd, sasaki_matrix_batch(m, q), qd)


def rhs(m: ChartedManifold, s: BundleGeodesicState) -> np.ndarray:
    """Time derivative ``(x_dot, x_ddot, xi_dot, xi_ddot)`` of a state."""
    m.check(s.x)
    return _rhs_batch(m, s.as_array())


def sasaki_energy(m: ChartedManifold, s: BundleGeodesicState) -> float:
    """``g_s(Gamma', Gamma')`` for the curve through ``s``."""
    m.check(s.x)
    return float(_energy_batch(m, s.as_array()))


def _steps(sigma_end: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("step must be positive")
    if sigma_end < 0:
        raise ValueError("sigma_end must be non-negative")
    full = int(math.floor(sigma_end / step + 1e-9))
    hs = [step] * full
    rest = sigma_end - full * step
    if rest > 1e-9 * step:
        hs.append(rest)
    return hs


def _rk4_many(m, f, energy, Y0: np.ndarray, sigma_end: float, step: float,
              inside: Callable[[np.ndarray], bool]) -> list[Trace]:
    """Fixed-step RK4 for a batch of states; each trajectory stops at chart exit."""
    hs = _steps(sigma_end, step)
    B, width = Y0.shape
    store = np.empty((B, len(hs) + 1, width))
    store[:, 0] = Y0
    sigmas = np.minimum(np.arange(len(hs) + 1) * step, sigma_end)
    length = np.ones(B, dtype=int)
    exited = np.zeros(B, dtype=bool)
    Y = np.array(Y0, dtype=float)
    idx = np.arange(B)
    for k, h in enumerate(hs, start=1):
        if idx.size == 0:
            break
        y = Y[idx]
        k1 = f(m, y)
        k2 = f(m, y + 0.5 * h * k1)
        k3 = f(m, y + 0.5 * h * k2)
        k4 = f(m, y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ok = inside(y_new)
        exited[idx[~ok]] = True
        idx, y_new = idx[ok], y_new[ok]
        Y[idx] = y_new
        store[idx, k] = y_new
        length[idx] += 1
    traces = []
    for b in range(B):
        states = store[b, :length[b]]
        traces.append(Trace(sigmas[:length[b]].copy(), states.copy(), energy(m, states), bool(exited[b])))
    return traces


def _prepare(m: ChartedManifold, states: Sequence[BundleGeodesicState]) -> np.ndarray:
    Y0 = []
    for s in states:
        if s.dim != m.dim:
            raise ValueError(f"state dimension {s.dim} does not match manifold dimension {m.dim}")
        m.check(s.x)
        Y0.append(s.as_array())
    return np.array(Y0)


def _inside(m: ChartedManifold):
    """Row-wise test that a batch of states is finite and inside the chart."""
    n = m.dim

    def test(Y):
        ok = np.all(np.isfinite(Y), axis=1)
        x = Y[:, :n]
        if isinstance(m.domain, Box):
            return ok & np.all((x >= m.domain.lo) & (x <= m.domain.hi), axis=1)
        if m.domain is None:
            return ok
        return ok & np.array([m.contains(row) for row in x])

    return test


def integrate_many(m: ChartedManifold, states: Iterable[BundleGeodesicState], sigma_end: float,
                   step: float = 1e-3) -> list[Trace]:
    """:func:`integrate` for several initial states advanced together."""
    Y0 = _prepare(m, list(states))
    return _rk4_many(m, _rhs_batch, _energy_batch, Y0, sigma_end, step, _inside(m))


def integrate(m: ChartedManifold, s0: BundleGeodesicState, sigma_end: float, step: float = 1e-3) -> Trace:
    return integrate_many(m, [s0], sigma_end, step)[0]


def oracle_integrate_many(m: ChartedManifold, states: Iterable[BundleGeodesicState], sigma_end: float,
                          step: float = 1e-3, h: float = 1e-5) -> list[Trace]:
    Y0 = _prepare(m, list(states))
    f = lambda mm, Y: _oracle_rhs_batch(mm, Y, h)  # noqa: E731
    return _rk4_many(m, f, _oracle_energy_batch, Y0, sigma_end, step, _inside(m))


def oracle_integrate(m: ChartedManifold, s0: BundleGeodesicState, sigma_end: float, step: float = 1e-3,
                     h: float = 1e-5) -> Trace:
    """Reference trajectory from the ``2n``-dimensional geodesic equation of
    the Sasaki matrix with finite-difference Christoffel symbols."""
    return oracle_integrate_many(m, [s0], sigma_end, step, h)[0]


def integrate_base(m: ChartedManifold, x0, v0, sigma_end: float, step: float = 1e-3) -> np.ndarray:
    """Geodesic of the base manifold; rows are ``(sigma, x, x_dot)``."""
    n = m.dim
    x0 = m.check(x0)
    v0 = np.asarray(v0, dtype=float)

    def f(mm, Y):
        x, v = Y[..., :n], Y[..., n:]
        gamma = local_geometry(mm, x).gamma
        return np.concatenate([v, -np.einsum("...abc,...b,...c->...a", gamma, v, v)], axis=-1)

    Y = np.concatenate([x0, v0])
    rows = [np.concatenate([[0.0], Y])]
    sigma = 0.0
    for h in _steps(sigma_end, step):
        k1 = f(m, Y)
        k2 = f(m, Y + 0.5 * h * k1)
        k3 = f(m, Y + 0.5 * h * k2)
        k4 = f(m, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        sigma += h
        if not m.contains(Y[:n]):
            raise DomainError(f"base geodesic left the chart at sigma={sigma:g}")
        rows.append(np.concatenate([[sigma], Y]))
    return np.array(rows)


def max_divergence(a: Trace, b: Trace) -> float:
    """Sup-norm distance between two traces over their common samples,
    relative to ``1 + |state|``."""
    k = min(len(a), len(b))
    sa, sb = a.states[:k], b.states[:k]
    scale = 1.0 + np.max(np.abs(sb), axis=1)
    return float(np.max(np.max(np.abs(sa - sb), axis=1) / scale))


def csv_header(n: int) -> list[str]:
    cols = ["sigma"]
    for prefix in ("x", "xdot", "xi", "xidot"):
        cols += [f"{prefix}{a}" for a in range(1, n + 1)]
    return cols + ["energy"]


def write_csv(trace: Trace, target: str | Path | io.TextIOBase) -> None:
    """One row per sample; 17 significant digits, LF line endings."""
    if not len(trace):
        raise ValueError("empty trace")
    n = trace[0].state.dim

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n))
        for rec in trace:
            vals = [rec.sigma, *rec.state.as_array(), rec.energy]
            w.writerow([f"{float(v):.17g}" for v in vals])

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(target)
