"""Named numerical experiments for totally geodesic vector fields.

Each scenario evaluates one or more *parts*.  A part samples residuals on a
grid and classifies them against its expectation:

* ``residual_zero``: pass when the largest residual is at most ``tol``,
  fail when it reaches ``fail_tol``;
* ``residual_positive``: pass when the smallest residual is at least
  ``fail_tol``, fail when it drops to ``tol``;
* ``identity_holds``: the part supplies its own verdict together with the
  residual that measures it.

Anything between the two thresholds is ``inconclusive``.  A scenario fails
if any part fails, is inconclusive if any part is, and passes otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .fields import (
    FieldAlongPatch,
    SubmanifoldPatch,
    equator_patch,
    field_jet,
    grid_points,
    hyperplane_patch,
    identity_patch,
    normal_covariant_derivative,
    second_fundamental_residual,
    _residuals,
)
from .lie import LieAlgebraModel, abelian, centralizer_basis, lie_field_residual, so3, so3_plus_r
from .manifold import Box, conformal, euclidean, flat_torus, sphere_band

__all__ = [
    "Scenario",
    "ScenarioError",
    "UnknownScenarioError",
    "SCENARIOS",
    "EXPECTATIONS",
    "run_scenario",
    "make_report",
    "residual_part",
    "scenario_names",
    "KILLING_SPHERE_MIN",
    "KILLING_CARTESIAN_MIN",
    "SEMISIMPLE_UNIT_MIN",
]

EXPECTATIONS = ("residual_zero", "residual_positive", "identity_holds")

DEFAULT_TOL = 1e-6
DEFAULT_FAIL_TOL = 1e-3
EQUATOR_TOL = 1e-7

# Smallest residual of the rotation field x -> (-x2, x1) on the round chart
# (c = 1) over the default 11 x 11 polar grid r in [0.3, 1.1], p in
# [0.2 pi, 1.8 pi].  Computed before the build from the closed-form
# Christoffel symbols of the conformal metric with a symbolic oracle
# (sympy, tests/sym_oracle.py); attained at r = 0.3.
KILLING_SPHERE_MIN = 0.28062819615601037
# Same oracle on the Cartesian 10 x 10 grid linspace(-0.8, 0.8, 10)^2.
KILLING_CARTESIAN_MIN = 0.12325968503405416
# For unit xi in so(3) the residual is 1/2 max_i |e_i x xi| >= 1/2 sqrt(2/3).
SEMISIMPLE_UNIT_MIN = 0.5 * math.sqrt(2.0 / 3.0)


class ScenarioError(ValueError):
    """Bad overrides or inconsistent tolerances."""


class UnknownScenarioError(LookupError):
    pass


@dataclass(frozen=True)
class Settings:
    grid: int
    tol: float
    fail_tol: float
    margin: float


@dataclass(frozen=True)
class Scenario:
    name: str
    build: Callable[[Settings], list[dict]]
    expectation: str
    reference: str
    grid: int = 11
    tolerances: dict = field(default_factory=lambda: {"tol": DEFAULT_TOL, "fail_tol": DEFAULT_FAIL_TOL})
    description: str = ""

    def __post_init__(self):
        if self.expectation not in EXPECTATIONS:
            raise ValueError(f"unknown expectation {self.expectation!r}")


# -- classification ----------------------------------------------------------------

def _classify(expectation: str, lo: float, hi: float, tol: float, fail_tol: float) -> str:
    if expectation == "residual_zero":
        if hi <= tol:
            return "pass"
        return "fail" if hi >= fail_tol else "inconclusive"
    if expectation == "residual_positive":
        if lo >= fail_tol:
            return "pass"
        return "fail" if lo <= tol else "inconclusive"
    raise ValueError(expectation)


def _loc(u) -> list[float]:
    return [float(v) for v in np.atleast_1d(u)]


def _part(label, expectation, values, locations, tol, fail_tol, status=None, **metrics) -> dict:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ScenarioError(f"part {label!r} has an empty grid")
    hi, lo = int(np.argmax(values)), int(np.argmin(values))
    if status is None:
        status = _classify(expectation, values[lo], values[hi], tol, fail_tol)
    return {
        "label": label,
        "expectation": expectation,
        "status": status,
        "samples": int(values.size),
        "tolerances": {"tol": tol, "fail_tol": fail_tol},
        "max_residual": {"value": float(values[hi]), "location": _loc(locations[hi])},
        "min_residual": {"value": float(values[lo]), "location": _loc(locations[lo])},
        "metrics": {k: _plain(v) for k, v in metrics.items()},
    }


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(w) for k, w in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(w) for w in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _jets(f: FieldAlongPatch, points):
    return [field_jet(f, u) for u in points]


def _residual_values(jets):
    return [max(_residuals(j)) for j in jets]


def _grid_part(label, f, points, expectation, s: Settings, tol=None, **metrics):
    jets = _jets(f, points)
    tol = s.tol if tol is None else tol
    return _part(label, expectation, _residual_values(jets), points, tol, s.fail_tol, **metrics), jets


def _nabla_norms(jets, i=None):
    """Largest ``|nabla_i xi|`` per sample (or for direction ``i`` only)."""
    out = []
    for j in jets:
        cols = j.norm(j.nabla_xi)
        out.append(float(cols[i]) if i is not None else float(np.max(cols)))
    return np.array(out)


# -- scenario builders ----------------------------------------------------------------

def _zero_field(n):
    return lambda u: [0.0] * n


def _zero_section(s: Settings):
    square = Box((-1.0, -1.0), (1.0, 1.0))
    cases = [
        ("euclidean", euclidean(2), square),
        ("conformal c=1", conformal(2, 1.0), square),
        ("conformal c=-1", conformal(2, -1.0), square),
        ("sphere-band", sphere_band(), Box((-1.2, 0.0), (1.2, 2 * np.pi))),
        ("flat-torus", flat_torus(2), flat_torus(2).domain),
    ]
    parts = []
    for label, m, box in cases:
        f = FieldAlongPatch(identity_patch(m, box), _zero_field(m.dim), name="zero")
        part, _ = _grid_part(label, f, grid_points(box, s.grid, s.margin), "residual_zero", s)
        parts.append(part)
    # a totally geodesic slice (fixed set of the reflection x3 -> -x3)
    m3 = conformal(3, 1.0)
    f = FieldAlongPatch(hyperplane_patch(m3, square), _zero_field(3), name="zero")
    part, _ = _grid_part("conformal c=1, slice x3=0", f, grid_points(square, s.grid, s.margin),
                         "residual_zero", s)
    parts.append(part)
    return parts


def _parallel_flat(s: Settings):
    m = flat_torus(2)
    f = FieldAlongPatch(identity_patch(m, m.domain), lambda u: [1.0, 0.5], name="constant")
    part, jets = _grid_part("flat torus, xi = e1 + e2/2", f, grid_points(m.domain, s.grid, s.margin),
                            "residual_zero", s)
    part["metrics"]["max_nabla_xi"] = float(np.max(_nabla_norms(jets)))
    return [part]


def _flat_nonparallel(s: Settings):
    m = euclidean(3)
    square = Box((-1.0, -1.0), (1.0, 1.0))
    patch = hyperplane_patch(m, square)
    f = FieldAlongPatch.from_ambient(patch, lambda x: [0.0, 0.0, x[0]], name="x1 e3")
    points = grid_points(square, s.grid, s.margin)
    part, jets = _grid_part("R^3, slice x3=0, xi = x1 e3", f, points, "residual_zero", s)
    norms = _nabla_norms(jets, 0)
    deviation = np.abs(norms - 1.0)
    ok = bool(np.max(deviation) <= s.tol)
    not_parallel = _part("|nabla_1 xi| = 1", "identity_holds", deviation, points, s.tol, s.fail_tol,
                         status="pass" if ok else "fail",
                         nabla_1_xi={"min": float(norms.min()), "max": float(norms.max())})
    return [part, not_parallel]


def _flat_compact_contrast(s: Settings):
    """On a closed geodesic of the flat torus, any periodic field whose
    graph is totally geodesic must be parallel."""
    m = flat_torus(2)
    period = Box((0.0,), (2 * np.pi,))
    patch = SubmanifoldPatch(m, lambda u: [u[0], np.pi], period, "circle x2=pi")
    family = [
        ("e2", lambda u: [0.0, 1.0]),
        ("u e2", lambda u: [0.0, u[0]]),
        ("sin(u) e2", lambda u: [0.0, dual.sin(u[0])]),
    ]
    points = grid_points(period, s.grid ** 2, s.margin)
    parts = []
    for label, fn in family:
        f = FieldAlongPatch(patch, fn, name=label)
        jets = _jets(f, points)
        res = np.array(_residual_values(jets))
        ends = [np.array([float(dual.value_of(c)) for c in fn([t])]) for t in (period.lo[0], period.hi[0])]
        gap = float(np.linalg.norm(ends[1] - ends[0]))
        nab = float(np.max(_nabla_norms(jets)))
        totally_geodesic = bool(res.max() <= s.tol)
        periodic = gap <= s.tol
        if totally_geodesic and periodic:
            verdict = "parallel" if nab <= 10 * s.tol else "counterexample"
        elif not totally_geodesic and res.max() < s.fail_tol:
            verdict = "undecided"
        else:
            verdict = "not periodic" if not periodic else "not totally geodesic"
        status = {"counterexample": "fail", "undecided": "inconclusive"}.get(verdict, "pass")
        parts.append(_part(f"circle, xi = {label}", "identity_holds", res, points, s.tol, s.fail_tol,
                           status=status, verdict=verdict, periodicity_gap=gap, max_nabla_xi=nab))
    return parts


def _polar(u):
    return [u[0] * dual.cos(u[1]), u[0] * dual.sin(u[1])]


def _rotation(x):
    return [-x[1], x[0]]


def _killing_sphere(s: Settings):
    m = conformal(2, 1.0)
    box = Box((0.2, 0.0), (1.2, 2 * np.pi))
    f = FieldAlongPatch.from_ambient(SubmanifoldPatch(m, _polar, box, "polar annulus"), _rotation,
                                     name="rotation")
    part, _ = _grid_part("conformal c=1, rotation field", f, grid_points(box, s.grid, s.margin),
                         "residual_positive", s, oracle_min=KILLING_SPHERE_MIN)
    return [part]


def _equatorial_zone(s: Settings):
    m = sphere_band()
    d_theta = lambda u: [1.0, 0.0]  # noqa: E731
    circle = Box((0.0,), (2 * np.pi,))
    eq = FieldAlongPatch(equator_patch(m, circle), d_theta, name="d_theta")
    on, _ = _grid_part("equator, xi = d_theta", eq, grid_points(circle, s.grid ** 2, s.margin),
                       "residual_zero", s, tol=min(EQUATOR_TOL, s.tol))
    k = max(1, (s.grid + 1) // 2)
    thetas = np.concatenate([-np.linspace(0.2, 1.2, k)[::-1], np.linspace(0.2, 1.2, k)])
    phis = grid_points(circle, s.grid, s.margin)
    points = [np.array([t, p[0]]) for t in thetas for p in phis]
    zone = FieldAlongPatch(identity_patch(m, Box((-1.2, 0.0), (1.2, 2 * np.pi))), d_theta, name="d_theta")
    off, _ = _grid_part("band |theta| >= 0.2, xi = d_theta", zone, points, "residual_positive", s)
    return [on, off]


def _normal_parallel(s: Settings):
    parts = []
    square = Box((-1.0, -1.0), (1.0, 1.0))
    plane = FieldAlongPatch(hyperplane_patch(euclidean(3), square), lambda u: [0.0, 0.0, 1.0], name="e3")
    band = sphere_band()
    circle = Box((0.0,), (2 * np.pi,))
    eq = FieldAlongPatch(equator_patch(band, circle), lambda u: [1.0, 0.0], name="d_theta")
    for label, f, points in (("R^3 plane, xi = e3", plane, grid_points(square, s.grid, s.margin)),
                             ("equator, xi = d_theta", eq, grid_points(circle, s.grid ** 2, s.margin))):
        part, _ = _grid_part(label, f, points, "residual_zero", s)
        normal_deriv = max(float(np.linalg.norm(normal_covariant_derivative(f, u, i)))
                           for u in points for i in range(f.patch.l))
        part["metrics"]["max_normal_derivative"] = normal_deriv
        parts.append(part)
    return parts


def _th3_degenerate(s: Settings):
    """Unit normal field along a geodesic of the unit 3-sphere, where the
    multiplier ``1 - c|xi|^2`` vanishes; the constant-length branch applies."""
    c = 1.0
    m = conformal(3, c)
    segment = Box((-1.0,), (1.0,))
    patch = SubmanifoldPatch(m, lambda u: [u[0], 0.0, 0.0], segment, "x1-axis")
    f = FieldAlongPatch(patch, lambda u: [0.0, 1.0 + c * u[0] * u[0] / 4.0, 0.0], name="unit normal")
    points = grid_points(segment, s.grid ** 2, s.margin)
    jets = _jets(f, points)
    res = np.array(_residual_values(jets))
    lengths = np.array([float(j.norm(j.xi)) for j in jets])
    multiplier = float(np.max(np.abs(1.0 - c * lengths ** 2)))
    nab = float(np.max(_nabla_norms(jets)))
    sff = max(second_fundamental_residual(j) for j in jets)
    constant_length = float(np.ptp(lengths)) <= s.tol
    # constant length and vanishing residuals force a parallel field on a
    # totally geodesic patch
    implication = not (constant_length and res.max() <= s.tol) or (nab <= 10 * s.tol and sff <= 10 * s.tol)
    degenerate = multiplier <= s.tol
    status = "pass" if implication and degenerate else "fail"
    return [_part("S^3, x1-axis, |xi| = 1", "identity_holds", res, points, s.tol, s.fail_tol, status=status,
                  multiplier=multiplier, length_spread=float(np.ptp(lengths)), max_nabla_xi=nab,
                  second_fundamental=sff)]


def _unit_vectors(count: int) -> np.ndarray:
    """Deterministic near-uniform points on the unit 2-sphere (Fibonacci lattice)."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _lie_part(label, a: LieAlgebraModel, basis, xis, expectation, s: Settings, **metrics):
    values = [lie_field_residual(a, basis, xi) for xi in xis]
    return _part(label, expectation, values, list(xis), s.tol, s.fail_tol, **metrics)


def _lie_centralizer(s: Settings):
    a = so3_plus_r()
    h = np.eye(4)[:3]
    cent = centralizer_basis(a, h)
    xis = [t * cent[0] for t in np.linspace(-2.0, 2.0, s.grid)]
    return [_lie_part("so3+r, h = so3, xi in centralizer", a, h, xis, "residual_zero", s,
                      centralizer_dim=len(cent))]


def _lie_semisimple(s: Settings):
    a = so3()
    return [_lie_part("so3, h = so3, unit xi", a, np.eye(3), _unit_vectors(s.grid ** 2), "residual_positive", s,
                      analytic_min=SEMISIMPLE_UNIT_MIN)]


def _lie_abelian(s: Settings):
    a = abelian(3)
    xis = 2.0 * _unit_vectors(s.grid ** 2)
    return [
        _lie_part("r3, h = span(e1, e2)", a, np.eye(3)[:2], xis, "residual_zero", s),
        _lie_part("r3, h = r3", a, np.eye(3), xis, "residual_zero", s),
    ]


SCENARIOS: dict[str, Scenario] = {}


def _register(name, build, expectation, reference, description):
    if name in SCENARIOS:
        raise ValueError(f"duplicate scenario {name!r}")
    SCENARIOS[name] = Scenario(name, build, expectation, reference, description=description)


_register("zero-section", _zero_section, "residual_zero", "zero vector field",
          "xi = 0 on built-in charts and on a totally geodesic slice")
_register("parallel-flat", _parallel_flat, "residual_zero", "parallel fields",
          "constant field on the flat torus")
_register("flat-nonparallel", _flat_nonparallel, "residual_zero", "flat, non-parallel example",
          "xi = x1 e3 along x3 = 0 in R^3: totally geodesic, |nabla_1 xi| = 1")
_register("flat-compact-contrast", _flat_compact_contrast, "identity_holds", "compact flat case",
          "periodic fields on a closed geodesic of the flat torus")
_register("killing-sphere", _killing_sphere, "residual_positive", "Killing fields",
          "rotation Killing field on the round chart never gives a totally geodesic graph")
_register("equatorial-zone", _equatorial_zone, "residual_zero", "equatorial zone",
          "xi = d_theta: zero residual on the equator, positive on the band |theta| >= 0.2")
_register("normal-parallel", _normal_parallel, "residual_zero", "normal fields",
          "normal fields parallel in the normal bundle of totally geodesic patches")
_register("th3-degenerate", _th3_degenerate, "identity_holds", "degenerate multiplier",
          "unit normal field on a great circle of S^3, where 1 - c|xi|^2 = 0")
_register("lie-centralizer", _lie_centralizer, "residual_zero", "bi-invariant metrics",
          "centraliser of so3 in so3+r")
_register("lie-semisimple", _lie_semisimple, "residual_positive", "bi-invariant metrics",
          "semisimple subalgebra: no nonzero left-invariant totally geodesic field")
_register("lie-abelian", _lie_abelian, "residual_zero", "bi-invariant metrics",
          "every left-invariant field of an abelian group")


def scenario_names() -> list[str]:
    return sorted(SCENARIOS)


_OVERRIDES = ("grid", "tol", "fail_tol", "margin")


def _settings(sc: Scenario, overrides: dict | None) -> Settings:
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(_OVERRIDES)
    if unknown:
        raise ScenarioError(f"unknown override(s): {', '.join(sorted(unknown))}")
    grid = overrides.get("grid", sc.grid)
    tol = overrides.get("tol", sc.tolerances["tol"])
    fail_tol = overrides.get("fail_tol", sc.tolerances["fail_tol"])
    margin = overrides.get("margin", 0.1)
    if isinstance(grid, bool) or not isinstance(grid, (int, np.integer)) or grid < 2:
        raise ScenarioError("grid must be an integer >= 2")
    for key, v in (("tol", tol), ("fail_tol", fail_tol)):
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ScenarioError(f"{key} must be a positive number")
    if tol >= fail_tol:
        raise ScenarioError(f"tolerance conflict: tol ({tol:g}) must be below fail_tol ({fail_tol:g})")
    if not 0.0 <= margin < 0.5:
        raise ScenarioError("margin must lie in [0, 0.5)")
    return Settings(int(grid), float(tol), float(fail_tol), float(margin))


def _overall(parts) -> str:
    statuses = [p["status"] for p in parts]
    if "fail" in statuses:
        return "fail"
    return "inconclusive" if "inconclusive" in statuses else "pass"


def make_report(name: str, expectation: str, parts: list[dict], grid: int, margin: float,
                tol: float, fail_tol: float, description: str = "") -> dict:
    """Aggregate part results into the report schema shared by the CLI."""
    hi = max(parts, key=lambda p: p["max_residual"]["value"])
    lo = min(parts, key=lambda p: p["min_residual"]["value"])
    status = _overall(parts)
    notes = [description] if description else []
    notes += [f"{p['label']}: {p['status']}" for p in parts]
    if status == "inconclusive":
        notes.append("inconclusive: refine the differentiation step")
    return {
        "name": name,
        "pass": status == "pass",
        "status": status,
        "expectation": expectation,
        "grid": {"points_per_dim": grid, "margin": margin},
        "tolerances": {"tol": tol, "fail_tol": fail_tol},
        "max_residual": {"value": hi["max_residual"]["value"],
                         "location": {"part": hi["label"], "u": hi["max_residual"]["location"]}},
        "min_residual": {"value": lo["min_residual"]["value"],
                         "location": {"part": lo["label"], "u": lo["min_residual"]["location"]}},
        "notes": notes,
        "parts": parts,
    }


def residual_part(label: str, f: FieldAlongPatch, points, expectation: str, tol: float, fail_tol: float) -> dict:
    """Residuals of ``f`` over ``points`` classified against ``expectation``."""
    s = Settings(2, tol, fail_tol, 0.0)
    part, _ = _grid_part(label, f, points, expectation, s)
    return part


def run_scenario(name: str, overrides: dict | None = None) -> dict:
    """Run a registered scenario and return a JSON-serialisable report."""
    if name not in SCENARIOS:
        raise UnknownScenarioError(f"unknown scenario {name!r}; choose from {', '.join(scenario_names())}")
    sc = SCENARIOS[name]
    s = _settings(sc, overrides)
    return make_report(sc.name, sc.expectation, sc.build(s), s.grid, s.margin, s.tol, s.fail_tol,
                       sc.description)
