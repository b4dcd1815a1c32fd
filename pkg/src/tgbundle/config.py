"""JSON run configuration.

A config is one JSON object with the sections ``manifold``, ``patch``,
``field``, ``grid``, ``tolerances``, ``differentiation``, ``geodesic``,
``expectation`` and ``outputs``.  Only ``manifold`` is always required;
``patch``/``field`` are needed by the ``residual`` command and ``geodesic``
by the ``geodesic`` command.  See the README for the schema and examples.

Every validation failure raises :class:`ConfigError` naming the offending
field with a dotted path such as ``manifold.metric[1][0]``.
"""

from __future__ import annotations

import inspect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .expr import ExpressionError, compile_vector, parse, pretty
from .fields import FieldAlongPatch, SubmanifoldPatch
from .geodesic import BundleGeodesicState
from . import dual
from .manifold import BUILTIN_MANIFOLDS, DIFFERENTIATION_MODES, Box, ChartedManifold

__all__ = [
    "ConfigError",
    "GridSpec",
    "GeodesicSpec",
    "RunConfig",
    "load_config",
    "parse_config",
    "BUILTIN_PATCHES",
    "BUILTIN_FIELDS",
]

_SECTIONS = ("manifold", "patch", "field", "grid", "tolerances", "differentiation", "geodesic",
             "expectation", "outputs", "name")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class GridSpec:
    points: int = 11
    margin: float = 0.1


@dataclass(frozen=True)
class GeodesicSpec:
    state: BundleGeodesicState
    sigma: float = 1.0
    step: float = 1e-3


@dataclass(frozen=True, eq=False)
class RunConfig:
    name: str
    manifold: ChartedManifold
    patch: SubmanifoldPatch | None
    field: FieldAlongPatch | None
    grid: GridSpec
    tol: float
    fail_tol: float
    expectation: str
    geodesic: GeodesicSpec | None
    outputs: dict = field(default_factory=dict)


# -- small validators ----------------------------------------------------------------

def _obj(v, path) -> dict:
    if not isinstance(v, dict):
        raise ConfigError(path, f"expected an object, got {type(v).__name__}")
    return v


def _keys(d: dict, path: str, allowed, required=()):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown key")
    for k in required:
        if k not in d:
            raise ConfigError(f"{path}.{k}" if path else k, "missing required key")


def _num(v, path, positive=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, "expected a finite number")
    if positive and v <= 0:
        raise ConfigError(path, "must be positive")
    return float(v)


def _int(v, path, minimum=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return v


def _vec(v, path, length=None) -> list[float]:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of numbers")
    if length is not None and len(v) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(v)}")
    return [_num(x, f"{path}[{k}]") for k, x in enumerate(v)]


def _str(v, path) -> str:
    if not isinstance(v, str):
        raise ConfigError(path, "expected a string")
    return v


def _expr(src, path, names):
    try:
        return parse(_str(src, path), names)
    except ExpressionError as exc:
        raise ConfigError(path, str(exc)) from None


def _constants(d: dict, path: str) -> dict:
    out = {}
    for k, v in _obj(d, path).items():
        if not k.isidentifier():
            raise ConfigError(f"{path}.{k}", "constant names must be identifiers")
        out[k] = _num(v, f"{path}.{k}")
    return out


def _box(v, path, dim) -> Box:
    d = _obj(v, path)
    _keys(d, path, ("lo", "hi"), ("lo", "hi"))
    lo = _vec(d["lo"], f"{path}.lo", dim)
    hi = _vec(d["hi"], f"{path}.hi", dim)
    for k, (a, b) in enumerate(zip(lo, hi)):
        if not a < b:
            raise ConfigError(f"{path}.hi[{k}]", "upper bound must exceed lower bound")
    return Box(tuple(lo), tuple(hi))


# -- sections ------------------------------------------------------------------------

def _differentiation(v, default_mode) -> tuple[str, float]:
    d = _obj(v if v is not None else {}, "differentiation")
    _keys(d, "differentiation", ("mode", "step"))
    mode = _str(d.get("mode", default_mode), "differentiation.mode")
    if mode not in DIFFERENTIATION_MODES:
        raise ConfigError("differentiation.mode", f"must be one of {', '.join(DIFFERENTIATION_MODES)}")
    step = _num(d.get("step", 1e-4), "differentiation.step", positive=True)
    return mode, step


def _manifold(v, diff) -> ChartedManifold:
    d = _obj(v, "manifold")
    if ("builtin" in d) == ("metric" in d):
        raise ConfigError("manifold", "give exactly one of 'builtin' or 'metric'")
    if "builtin" in d:
        _keys(d, "manifold", ("builtin", "params"))
        name = _str(d["builtin"], "manifold.builtin")
        if name not in BUILTIN_MANIFOLDS:
            raise ConfigError("manifold.builtin", f"unknown manifold; choose from {', '.join(BUILTIN_MANIFOLDS)}")
        factory = BUILTIN_MANIFOLDS[name]
        params = _obj(d.get("params", {}), "manifold.params")
        allowed = set(inspect.signature(factory).parameters) - {"domain"}
        kwargs = {}
        for k, p in params.items():
            if k not in allowed:
                raise ConfigError(f"manifold.params.{k}", "unknown parameter")
            kwargs[k] = _int(p, f"manifold.params.{k}", 1) if k == "n" else _num(p, f"manifold.params.{k}")
        m = factory(**kwargs)
        mode, step = _differentiation(diff, "dual")
    else:
        _keys(d, "manifold", ("metric", "constants", "domain"))
        rows = d["metric"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError("manifold.metric", "expected a non-empty square matrix of expressions")
        n = len(rows)
        names = [f"x{a + 1}" for a in range(n)]
        consts = _constants(d.get("constants", {}), "manifold.constants")
        exprs = []
        for a, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise ConfigError(f"manifold.metric[{a}]", f"expected a row of {n} expressions")
            exprs.append([_expr(s, f"manifold.metric[{a}][{b}]", names + list(consts)) for b, s in enumerate(row)])
        for a in range(n):
            for b in range(a):
                if pretty(exprs[a][b]) != pretty(exprs[b][a]):
                    raise ConfigError(f"manifold.metric[{a}][{b}]", "metric must be symmetric")
        flat = compile_vector([e for row in exprs for e in row], names, consts)

        def metric_eval(x, flat=flat, n=n):
            vals = flat(list(x))
            return [vals[a * n:(a + 1) * n] for a in range(n)]

        domain = _box(d["domain"], "manifold.domain", n) if "domain" in d else None
        m = ChartedManifold(n, metric_eval, domain, name="config", params={"constants": consts})
        mode, step = _differentiation(diff, "hybrid")
    return ChartedManifold(m.dim, m.metric_eval, m.domain, mode, step, m.name, m.params)


def _polar(u):
    return [u[0] * dual.cos(u[1]), u[0] * dual.sin(u[1])]


BUILTIN_PATCHES: dict[str, tuple[Callable[[int], int], Callable]] = {
    # name: (patch dimension for ambient dimension n, immersion factory)
    "identity": (lambda n: n, lambda n: (lambda u: list(u))),
    "hyperplane": (lambda n: n - 1, lambda n: (lambda u: list(u) + [0.0])),
    "equator": (lambda n: 1, lambda n: (lambda u: [0.0, u[0]])),
    "polar": (lambda n: 2, lambda n: _polar),
}


def _patch(v, m: ChartedManifold) -> SubmanifoldPatch:
    d = _obj(v, "patch")
    n = m.dim
    if ("builtin" in d) == ("immersion" in d):
        raise ConfigError("patch", "give exactly one of 'builtin' or 'immersion'")
    if "builtin" in d:
        _keys(d, "patch", ("builtin", "domain"), ("domain",))
        name = _str(d["builtin"], "patch.builtin")
        if name not in BUILTIN_PATCHES:
            raise ConfigError("patch.builtin", f"unknown patch; choose from {', '.join(BUILTIN_PATCHES)}")
        if name in ("equator", "polar") and n != 2:
            raise ConfigError("patch.builtin", f"{name!r} needs a 2-dimensional manifold")
        dim_of, factory = BUILTIN_PATCHES[name]
        l = dim_of(n)
        if l < 1:
            raise ConfigError("patch.builtin", "patch would have dimension 0")
        immersion = factory(n)
    else:
        _keys(d, "patch", ("immersion", "domain", "constants"), ("domain",))
        comps = d["immersion"]
        if not isinstance(comps, list) or len(comps) != n:
            raise ConfigError("patch.immersion", f"expected {n} expressions (one per chart coordinate)")
        dom = _obj(d["domain"], "patch.domain")
        lo = dom.get("lo")
        if not isinstance(lo, list):
            raise ConfigError("patch.domain.lo", "expected a list of numbers")
        l = len(lo)
        if not 1 <= l <= n:
            raise ConfigError("patch.domain.lo", f"patch dimension must lie in [1, {n}], got {l}")
        names = [f"u{i + 1}" for i in range(l)]
        consts = _constants(d.get("constants", {}), "patch.constants")
        exprs = [_expr(s, f"patch.immersion[{a}]", names + list(consts)) for a, s in enumerate(comps)]
        immersion = compile_vector(exprs, names, consts)
    box = _box(d["domain"], "patch.domain", l)
    return SubmanifoldPatch(m, immersion, box, name=d.get("builtin", "immersion"))


BUILTIN_FIELDS = ("zero", "constant", "rotation")


def _rotation(x):
    return [-x[1], x[0]] + [0.0] * (len(x) - 2)


def _field(v, patch: SubmanifoldPatch) -> FieldAlongPatch:
    d = _obj(v, "field")
    n, l = patch.ambient.dim, patch.l
    if ("builtin" in d) == ("components" in d):
        raise ConfigError("field", "give exactly one of 'builtin' or 'components'")
    if "builtin" in d:
        _keys(d, "field", ("builtin", "value"))
        name = _str(d["builtin"], "field.builtin")
        if name == "zero":
            return FieldAlongPatch(patch, lambda u: [0.0] * n, name="zero")
        if name == "constant":
            if "value" not in d:
                raise ConfigError("field.value", "missing required key")
            value = _vec(d["value"], "field.value", n)
            return FieldAlongPatch(patch, lambda u: list(value), name="constant")
        if name == "rotation":
            if n < 2:
                raise ConfigError("field.builtin", "'rotation' needs dimension at least 2")
            return FieldAlongPatch.from_ambient(patch, _rotation, name="rotation")
        raise ConfigError("field.builtin", f"unknown field; choose from {', '.join(BUILTIN_FIELDS)}")
    _keys(d, "field", ("components", "constants"))
    comps = d["components"]
    if not isinstance(comps, list) or len(comps) != n:
        raise ConfigError("field.components", f"expected {n} expressions (one per chart coordinate)")
    unames = [f"u{i + 1}" for i in range(l)]
    xnames = [f"x{a + 1}" for a in range(n)]
    consts = _constants(d.get("constants", {}), "field.constants")
    exprs = [_expr(s, f"field.components[{a}]", unames + xnames + list(consts)) for a, s in enumerate(comps)]
    fn = compile_vector(exprs, unames + xnames, consts)
    return FieldAlongPatch(patch, lambda u: fn(list(u) + list(patch.immersion(u))), name="components")


def _geodesic(v, m: ChartedManifold) -> GeodesicSpec:
    d = _obj(v, "geodesic")
    _keys(d, "geodesic", ("x", "xdot", "xi", "xidot", "sigma", "step"), ("x", "xdot", "xi", "xidot"))
    n = m.dim
    parts = {k: _vec(d[k], f"geodesic.{k}", n) for k in ("x", "xdot", "xi", "xidot")}
    if not m.contains(parts["x"]):
        raise ConfigError("geodesic.x", "initial point lies outside the chart")
    sigma = _num(d.get("sigma", 1.0), "geodesic.sigma")
    if sigma < 0:
        raise ConfigError("geodesic.sigma", "must be non-negative")
    step = _num(d.get("step", 1e-3), "geodesic.step", positive=True)
    return GeodesicSpec(BundleGeodesicState(**parts), sigma, step)


def parse_config(raw: Any) -> RunConfig:
    d = _obj(raw, "")
    _keys(d, "", _SECTIONS, ("manifold",))
    m = _manifold(d["manifold"], d.get("differentiation"))
    patch = _patch(d["patch"], m) if "patch" in d else None
    if "field" in d:
        if patch is None:
            raise ConfigError("field", "a field needs a patch")
        fld = _field(d["field"], patch)
    else:
        fld = None
    g = _obj(d.get("grid", {}), "grid")
    _keys(g, "grid", ("points", "margin"))
    grid = GridSpec(_int(g.get("points", 11), "grid.points", 1), _num(g.get("margin", 0.1), "grid.margin"))
    if not 0.0 <= grid.margin < 0.5:
        raise ConfigError("grid.margin", "must lie in [0, 0.5)")
    t = _obj(d.get("tolerances", {}), "tolerances")
    _keys(t, "tolerances", ("tol", "fail_tol"))
    tol = _num(t.get("tol", 1e-6), "tolerances.tol", positive=True)
    fail_tol = _num(t.get("fail_tol", 1e-3), "tolerances.fail_tol", positive=True)
    if tol >= fail_tol:
        raise ConfigError("tolerances.fail_tol", "must exceed tolerances.tol")
    expectation = _str(d.get("expectation", "residual_zero"), "expectation")
    if expectation not in ("residual_zero", "residual_positive"):
        raise ConfigError("expectation", "must be 'residual_zero' or 'residual_positive'")
    geo = _geodesic(d["geodesic"], m) if "geodesic" in d else None
    outputs = _obj(d.get("outputs", {}), "outputs")
    _keys(outputs, "outputs", ("json", "csv"))
    for k, p in outputs.items():
        _str(p, f"outputs.{k}")
    name = _str(d.get("name", "config"), "name")
    return RunConfig(name, m, patch, fld, grid, tol, fail_tol, expectation, geo, dict(outputs))


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)
