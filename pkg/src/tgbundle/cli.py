"""Command-line entry point.

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .config import BUILTIN_FIELDS, BUILTIN_PATCHES, ConfigError, load_config
from .expr import ExpressionError
from .fields import grid_points
from .geodesic import integrate, max_divergence, oracle_integrate, write_csv
from .manifold import BUILTIN_MANIFOLDS, DomainError
from .scenarios import SCENARIOS, ScenarioError, UnknownScenarioError, make_report, residual_part, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 3
_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tgbundle", description="Sasaki geometry of tangent bundles.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run a registered scenario")
    v.add_argument("scenario")
    v.add_argument("--grid", type=int, help="points per parameter direction")
    v.add_argument("--tol", type=float, help="pass tolerance")
    v.add_argument("--json", type=Path, help="write the report here")

    r = sub.add_parser("residual", help="totally geodesic residuals over a configured grid")
    r.add_argument("--config", type=Path, required=True)
    r.add_argument("--json", type=Path)

    g = sub.add_parser("geodesic", help="integrate a geodesic of the Sasaki metric")
    g.add_argument("--config", type=Path, required=True)
    g.add_argument("--sigma", type=float)
    g.add_argument("--step", type=float)
    g.add_argument("--csv", type=Path)
    g.add_argument("--oracle", action="store_true", help="cross-check against the 2n-dimensional oracle")

    sub.add_parser("list", help="registered scenarios and built-in objects")
    return p


def _write_json(report: dict, path: Path | None):
    if path is not None:
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _summary(report: dict) -> str:
    lines = [f"{report['name']}: {report['status'].upper()} ({report['expectation']})"]
    for part in report["parts"]:
        lines.append(
            f"  {part['label']}: {part['status']}, max residual {part['max_residual']['value']:.3e}, "
            f"min residual {part['min_residual']['value']:.3e}"
        )
    lines.append(f"max residual {report['max_residual']['value']:.3e}")
    return "\n".join(lines)


def _verify(args) -> int:
    overrides = {}
    if args.grid is not None:
        overrides["grid"] = args.grid
    if args.tol is not None:
        overrides["tol"] = args.tol
    report = run_scenario(args.scenario, overrides)
    print(_summary(report))
    _write_json(report, args.json)
    return _EXIT[report["status"]]


def _residual(args) -> int:
    cfg = load_config(args.config)
    if cfg.field is None:
        raise ConfigError("field", "the residual command needs a patch and a field")
    points = grid_points(cfg.patch.domain, cfg.grid.points, cfg.grid.margin)
    try:
        part = residual_part(f"{cfg.patch.name}, {cfg.field.name}", cfg.field, points, cfg.expectation,
                             cfg.tol, cfg.fail_tol)
    except DomainError as exc:
        raise ConfigError("patch.domain", str(exc)) from None
    report = make_report(cfg.name, cfg.expectation, [part], cfg.grid.points, cfg.grid.margin,
                         cfg.tol, cfg.fail_tol)
    print(_summary(report))
    _write_json(report, args.json or (Path(cfg.outputs["json"]) if "json" in cfg.outputs else None))
    return _EXIT[report["status"]]


def _geodesic(args) -> int:
    cfg = load_config(args.config)
    if cfg.geodesic is None:
        raise ConfigError("geodesic", "the geodesic command needs an initial state")
    sigma = cfg.geodesic.sigma if args.sigma is None else args.sigma
    step = cfg.geodesic.step if args.step is None else args.step
    if step <= 0 or sigma < 0:
        raise ConfigError("geodesic", "need step > 0 and sigma >= 0")
    trace = integrate(cfg.manifold, cfg.geodesic.state, sigma, step)
    target = args.csv or (Path(cfg.outputs["csv"]) if "csv" in cfg.outputs else None)
    if target is not None:
        write_csv(trace, target)
    final = trace.final
    print(f"samples {len(trace)}, sigma {trace.sigmas[-1]:.6g}, exited chart: {trace.exited}")
    print(f"x = {final.x.tolist()}, xi = {final.xi.tolist()}")
    print(f"energy drift {trace.energy_drift:.3e}")
    if not args.oracle:
        return EXIT_PASS
    ref = oracle_integrate(cfg.manifold, cfg.geodesic.state, sigma, step)
    div = max_divergence(trace, ref)
    print(f"oracle max divergence {div:.3e} (tolerance {cfg.tol:g})")
    if div <= cfg.tol:
        return EXIT_PASS
    return EXIT_FAIL if div >= cfg.fail_tol else EXIT_INCONCLUSIVE


def _list(args) -> int:
    print("scenarios:")
    for name in sorted(SCENARIOS):
        sc = SCENARIOS[name]
        print(f"  {name:24s} {sc.expectation:18s} {sc.description}")
    print("manifolds: " + ", ".join(BUILTIN_MANIFOLDS))
    print("patches:   " + ", ".join(BUILTIN_PATCHES))
    print("fields:    " + ", ".join(BUILTIN_FIELDS))
    return EXIT_PASS


_COMMANDS = {"verify": _verify, "residual": _residual, "geodesic": _geodesic, "list": _list}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ScenarioError, UnknownScenarioError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
