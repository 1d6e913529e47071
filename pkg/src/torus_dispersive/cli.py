"""Command-line interface: ``torus-dispersive {lattice|check|simulate|instability}``.

Exit codes: 0 success (``check``: well-posed), 1 ill-posed verdict or a
workflow refused because of it, 2 malformed input or any other error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analyzer import classify
from .asymptotics import AsymptoticSpec, build_psi, constant_psi, family_violated, growth_reports, \
    reports_to_csv, residual_slope
from .coefficients import CoefficientError, CoefficientSet, from_terms, random_trig_polynomial
from .resonance import solve_xi, trick_closed_form, trick_identity
from .spectral import CFLError, CFLWarning, EvolutionConfig, Grid, SpectralState, evolve
from .symbol import eval_grad_p

EXIT_OK, EXIT_ILL_POSED, EXIT_ERROR = 0, 1, 2

logger = logging.getLogger("torus_dispersive")

_TERM = {
    "type": "object",
    "properties": {
        "beta": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "cos": {"type": "number"},
        "sin": {"type": "number"},
    },
    "required": ["beta"],
    "additionalProperties": False,
}
_TERMS = {"type": "array", "items": _TERM}

COEFFICIENT_SCHEMA = {
    "type": "object",
    "properties": {
        "a": {
            "type": "object",
            "properties": {k: _TERMS for k in ("sigma_plus1", "sigma_0", "sigma_minus1")},
            "additionalProperties": False,
        },
        "b": {
            "type": "object",
            "properties": {"b1": _TERMS, "b2": _TERMS},
            "additionalProperties": False,
        },
        "c": _TERMS,
    },
    "additionalProperties": False,
}

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_INT_PAIR = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "coefficients": COEFFICIENT_SCHEMA,
        "grid_n": {"type": "integer", "minimum": 8, "multipleOf": 2},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "output_path": {"type": "string"},
        "alpha_box": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "dealias": {"type": "boolean"},
        "record_every": {"type": "integer", "minimum": 1},
        "initial": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["random", "mode", "terms", "bump"]},
                "degree": {"type": "integer", "minimum": 0, "maximum": 32},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "k": _INT_PAIR,
                "terms": _TERMS,
                "center": _POINT,
                "width": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "instability": {
            "type": "object",
            "properties": {
                "alpha": _INT_PAIR,
                "T": {"type": "number", "exclusiveMinimum": 0},
                "l": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "grid_n": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "n_target": {"type": "number"},
                "branch": {"enum": ["positive", "negative"]},
                "time_nodes": {"type": "integer", "minimum": 8},
                "psi": {
                    "type": "object",
                    "properties": {
                        "center": _POINT,
                        "width": {"type": "number", "exclusiveMinimum": 0},
                        "constant": {"type": "boolean"},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["coefficients"],
    "additionalProperties": False,
}

DEFAULTS = {"grid_n": 64, "dt": 1e-3, "t_end": 1.0, "seed": 0, "alpha_box": 5, "tol": 1e-10,
            "dealias": True, "record_every": 10}
INSTABILITY_DEFAULTS = {"alpha": [1, 0], "T": 3.0, "l": [4, 8, 16, 32], "grid_n": 256,
                        "n_target": 1.0, "branch": "positive", "time_nodes": 33}


class UsageError(Exception):
    """Bad input detected after argument parsing; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def bundled_config(name: str) -> Path:
    return Path(str(resources.files("torus_dispersive") / "configs" / name))


def load_config(path: str) -> dict:
    """Read and validate a run config; a bare coefficient document is also accepted."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise UsageError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    if "coefficients" not in doc:
        doc = {"coefficients": doc}
    try:
        jsonschema.validate(doc, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise UsageError(f"schema error at {where}: {e.message}") from e
    cfg = dict(DEFAULTS)
    cfg.update(doc)
    try:
        cfg["set"] = CoefficientSet.from_json(doc["coefficients"])
    except (CoefficientError, ValueError, TypeError) as e:
        raise UsageError(f"bad coefficients: {e}") from e
    return cfg


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def cmd_lattice(args) -> int:
    sol = solve_xi((args.a1, args.a2))
    grad = eval_grad_p(sol.xi_float)
    out = sol.to_dict(exact=args.exact)
    out["grad_p"] = [float(grad[0]), float(grad[1])]
    out["float_error"] = math.hypot(grad[0] - args.a1, grad[1] - args.a2)
    out["verified_exact"] = sol.verify_exact()
    if (args.a1, args.a2) != (0, 0):
        trick = trick_identity((args.a1, args.a2))
        out["trick"] = float(trick)
        if args.exact:
            out["trick_exact"] = str(trick)
            out["trick_matches_closed_form"] = trick == trick_closed_form((args.a1, args.a2))
    _write(_dumps(out), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    box = args.alpha_box if args.alpha_box is not None else cfg["alpha_box"]
    tol = args.tol if args.tol is not None else cfg["tol"]
    if box < 1 or not tol > 0:
        raise UsageError("--alpha-box must be >= 1 and --tol positive")
    report = classify(cfg["set"], alpha_box=box, tol=tol)
    _write(_dumps(report.to_dict()), args.output or cfg.get("output_path"))
    print(f"verdict: {report.verdict}", file=sys.stderr)
    return EXIT_OK if report.well_posed else EXIT_ILL_POSED


def initial_field(cfg: dict, grid: Grid) -> np.ndarray:
    init = cfg.get("initial", {"kind": "random"})
    kind = init["kind"]
    if kind == "random":
        rng = np.random.default_rng(cfg["seed"])
        degree = init.get("degree", 4)
        if degree >= grid.n // 2:
            raise UsageError(f"initial degree {degree} not resolved by n={grid.n}")
        return grid.sample(random_trig_polynomial(rng, degree, init.get("scale", 1.0))).astype(complex)
    if kind == "mode":
        k1, k2 = init.get("k", [1, 0])
        if max(abs(k1), abs(k2)) >= grid.n // 2:
            raise UsageError(f"initial mode {(k1, k2)} not resolved by n={grid.n}")
        x1, x2 = grid.nodes()
        return np.exp(1j * (k1 * x1 + k2 * x2))
    if kind == "terms":
        try:
            poly = from_terms(init.get("terms", []), degree_cap=grid.n // 2 - 1)
        except CoefficientError as e:
            raise UsageError(f"bad initial terms: {e}") from e
        return grid.sample(poly).astype(complex)
    width = init.get("width", 1.0)
    if not width < math.pi:
        raise UsageError("bump width must lie in (0, pi)")
    return grid.sample(build_psi(init.get("center", [math.pi, math.pi]), width)).astype(complex)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    for key in ("n", "dt", "t_end", "seed", "record_every"):
        val = getattr(args, key)
        if val is not None:
            cfg["grid_n" if key == "n" else key] = val
    if args.no_dealias:
        cfg["dealias"] = False
    cs = cfg["set"]
    try:
        grid = Grid(cfg["grid_n"])
    except ValueError as e:
        raise UsageError(str(e)) from e
    phi = None
    if args.gauge:
        report = classify(cs, alpha_box=cfg["alpha_box"], tol=cfg["tol"])
        if not report.well_posed:
            print("gauge mode needs a well-posed coefficient set; the analyzer found it ill-posed "
                  f"(failing modes {[list(b) for b in report.failing_modes]})", file=sys.stderr)
            return EXIT_ILL_POSED
        phi = report.potential
    config = EvolutionConfig(dt=cfg["dt"], t_end=cfg["t_end"], dealias=cfg["dealias"], gauge=args.gauge,
                             phi=phi, record_every=cfg["record_every"], strict=args.strict)
    try:
        config.validate()
    except ValueError as e:
        raise UsageError(str(e)) from e
    u0 = SpectralState.from_values(grid, initial_field(cfg, grid))
    with warnings.catch_warnings():
        warnings.simplefilter("always", CFLWarning)
        warnings.showwarning = lambda m, *a, **k: print(f"warning: {m}", file=sys.stderr)
        series, _ = evolve(u0, cs, config)
    _write(series.to_csv(), args.output or cfg.get("output_path"))
    if series.aborted:
        print(f"norm ceiling reached at t={series.t[-1]!r}; run stopped early", file=sys.stderr)
    return EXIT_OK


def cmd_instability(args) -> int:
    cfg = load_config(args.config)
    inst = dict(INSTABILITY_DEFAULTS)
    inst.update(cfg.get("instability", {}))
    if args.alpha is not None:
        inst["alpha"] = args.alpha
    if args.T is not None:
        inst["T"] = args.T
    if args.l is not None:
        inst["l"] = args.l
    if args.n is not None:
        inst["grid_n"] = args.n
    psi_cfg = inst.get("psi", {})
    try:
        psi = constant_psi() if psi_cfg.get("constant") else build_psi(
            psi_cfg.get("center", [math.pi, math.pi]), psi_cfg.get("width", 2.0))
        spec = AsymptoticSpec(tuple(inst["alpha"]), 1, float(inst["T"]), psi,
                              float(inst["n_target"]), inst["branch"])
        grid = Grid(inst["grid_n"])
    except ValueError as e:
        raise UsageError(str(e)) from e
    ls = sorted(set(inst["l"]))
    if min(ls) < 1:
        raise UsageError("l values must be positive")
    reports = growth_reports(spec, cfg["set"], grid, ls, time_nodes=inst["time_nodes"])
    violated = family_violated(reports)
    out_path = args.output or cfg.get("output_path")
    if out_path and out_path.endswith(".csv"):
        text = reports_to_csv(reports)
    else:
        doc = {
            "alpha": list(spec.alpha),
            "T": spec.T,
            "grid_n": grid.n,
            "branch": spec.branch,
            "reports": [r.to_dict() for r in reports],
            "residual_slope": residual_slope(reports) if len(reports) > 1 and
            all(r.residual_integral > 0 for r in reports) else None,
            "energy_inequality_violated": violated,
        }
        text = _dumps(doc)
    _write(text, out_path)
    verb = "violated" if violated else "not violated"
    print(f"energy inequality {verb} by the asymptotic family (alpha={list(spec.alpha)}, T={spec.T!r})",
          file=sys.stderr)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from e
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="torus-dispersive", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lattice", help="solve grad p(xi) = alpha for an integer alpha")
    p.add_argument("a1", type=int)
    p.add_argument("a2", type=int)
    p.add_argument("--exact", action="store_true", help="also print the exact quadratic-field form")
    p.add_argument("--output")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("check", help="classify a coefficient set as well-posed or ill-posed")
    p.add_argument("config")
    p.add_argument("--alpha-box", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="evolve initial data and write the norm history as CSV")
    p.add_argument("config")
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--seed", type=int)
    p.add_argument("--record-every", type=int, dest="record_every")
    p.add_argument("--gauge", action="store_true", help="evolve v = exp(phi) u")
    p.add_argument("--no-dealias", action="store_true")
    p.add_argument("--strict", action="store_true", help="abort instead of warning on a CFL violation")
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("instability", help="growth reports for the high-frequency asymptotic family")
    p.add_argument("config")
    p.add_argument("--alpha", type=int, nargs=2, metavar=("A1", "A2"))
    p.add_argument("--T", type=float)
    p.add_argument("--l", type=_int_list, help="comma separated, e.g. 4,8,16,32")
    p.add_argument("--n", type=int)
    p.add_argument("--output", help="JSON report, or CSV when the name ends in .csv")
    p.set_defaults(func=cmd_instability)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except CFLError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, RuntimeError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
