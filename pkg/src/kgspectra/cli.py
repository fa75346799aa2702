"""Command-line front end: solve, compare, sweep, curve.

Data goes to standard output (or --out), diagnostics to standard error.
Exit codes: 0 success, 1 usage error, 2 nonconvergence, 3 a verified
Theorem-1 ordering contradiction (which would falsify the theorem, so it
is flagged loudly).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from .analysis import check_theorem1
from .continuation import SpectralCurve, sweep_parameter, trace_folded_curve
from .eigensolve import EigenResult, SolverConfig, SolverError, find_state
from .potentials import PotentialError, format_potential, parse_potential, with_sweep
from .radial import RadialGrid, RadialProblem

__all__ = ["main"]

ENV_CONFIG = "KG_SPECTRA_CONFIG"
_RESIDUAL_TOL = 1e-6


class UsageError(Exception):
    """Bad flags, bad spec text, or an unreadable config file."""


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    output: str | None = None
    out_path: str | None = None
    threads: int = 0

    def resolved_threads(self) -> int:
        if self.threads and self.threads > 0:
            return self.threads
        return min(8, os.cpu_count() or 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, required=True, help="spatial dimension (>= 1)")
    p.add_argument("--l", type=int, default=None, help="angular quantum number (d >= 2)")
    p.add_argument("--parity", choices=("even", "odd"), default=None,
                   help="parity channel (d = 1 only)")
    p.add_argument("--m", type=float, default=1.0, help="mass (units m = c = hbar = 1)")
    p.add_argument("--state", type=int, default=0,
                   help="state index = interior node count")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", default=None, help="write data here instead of stdout")
    p.add_argument("--threads", type=int, default=None, help="worker count (0 = auto)")
    p.add_argument("--output", choices=("json", "csv"), default=None,
                   help="output format")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kgspectra",
                     description="Klein-Gordon bound states and comparison-theorem checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="converge one bound state")
    p_solve.add_argument("--potential", required=True,
                         help="potential spec, e.g. coulomb:v=0.4")
    _add_problem_flags(p_solve)
    _add_common_flags(p_solve)

    p_cmp = sub.add_parser("compare", help="Theorem-1 identity and ordering check")
    p_cmp.add_argument("--potential-a", required=True, dest="potential_a")
    p_cmp.add_argument("--potential-b", required=True, dest="potential_b")
    _add_problem_flags(p_cmp)
    _add_common_flags(p_cmp)

    p_sweep = sub.add_parser("sweep", help="eigenvalue sweep over a parameter")
    p_sweep.add_argument("--potential", required=True)
    p_sweep.add_argument("--sweep-param", required=True, dest="sweep_param")
    p_sweep.add_argument("--from", type=float, required=True, dest="sweep_from")
    p_sweep.add_argument("--to", type=float, required=True, dest="sweep_to")
    p_sweep.add_argument("--points", type=int, required=True)
    p_sweep.add_argument("--spacing", choices=("log", "linear"), default="linear")
    p_sweep.add_argument("--fig", default=None,
                         help="also render the sweep to this image file")
    _add_problem_flags(p_sweep)
    _add_common_flags(p_sweep)

    p_curve = sub.add_parser("curve", help="trace E(a), following folds")
    p_curve.add_argument("--potential", required=True)
    p_curve.add_argument("--sweep-param", required=True, dest="sweep_param")
    p_curve.add_argument("--e-from", type=float, required=True, dest="e_from")
    p_curve.add_argument("--e-to", type=float, required=True, dest="e_to")
    p_curve.add_argument("--e-points", type=int, required=True, dest="e_points")
    p_curve.add_argument("--fig", default=None,
                         help="also render the curve to this image file")
    _add_problem_flags(p_curve)
    _add_common_flags(p_curve)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


_SOLVER_KEYS = {"e_scan_points", "e_tol", "max_bisections", "normalize_tol", "grid"}
_TOP_KEYS = {"solver", "output", "out_path", "threads"}


def _run_config(args) -> RunConfig:
    """Merge precedence field-wise: flags > config file > defaults."""
    path = args.config or os.environ.get(ENV_CONFIG) or None
    file_cfg = _load_config_file(path) if path else {}
    unknown = set(file_cfg) - _TOP_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")

    solver_cfg = file_cfg.get("solver", {})
    if not isinstance(solver_cfg, dict):
        raise UsageError("config key 'solver' must be an object")
    unknown = set(solver_cfg) - _SOLVER_KEYS
    if unknown:
        raise UsageError(f"unknown solver config keys: {sorted(unknown)}")
    grid = None
    if solver_cfg.get("grid") is not None:
        g = solver_cfg["grid"]
        try:
            grid = RadialGrid(layout=g["layout"], r_min=float(g["r_min"]),
                              r_max=float(g["r_max"]), n_points=int(g["n_points"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad grid config: {exc}") from None
    try:
        solver = SolverConfig(
            e_scan_points=int(solver_cfg.get("e_scan_points", 400)),
            e_tol=float(solver_cfg.get("e_tol", 1e-10)),
            max_bisections=int(solver_cfg.get("max_bisections", 200)),
            normalize_tol=float(solver_cfg.get("normalize_tol", 1e-8)),
            grid=grid,
        )
    except ValueError as exc:
        raise UsageError(f"bad solver config: {exc}") from None

    output = args.output if args.output is not None else file_cfg.get("output")
    if output not in (None, "json", "csv"):
        raise UsageError("output must be 'json' or 'csv'")
    out_path = args.out if args.out is not None else file_cfg.get("out_path")
    threads = args.threads if args.threads is not None else int(file_cfg.get("threads", 0))
    if threads < 0:
        raise UsageError("threads must be >= 0")
    return RunConfig(solver=solver, output=output, out_path=out_path, threads=threads)


def _build_problem(args, family) -> RadialProblem:
    if args.d < 1:
        raise UsageError("--d must be >= 1")
    if args.m <= 0:
        raise UsageError("--m must be positive")
    if args.state < 0:
        raise UsageError("--state must be >= 0")
    if args.d == 1:
        if args.l is not None:
            raise UsageError("--l does not apply in d = 1; use --parity")
        if args.parity is None:
            raise UsageError("d = 1 requires --parity even|odd")
        return RadialProblem(d=1, parity=args.parity, mass=args.m, family=family)
    if args.parity is not None:
        raise UsageError("--parity applies to d = 1 only")
    if args.l is None:
        raise UsageError("d >= 2 requires --l")
    return RadialProblem(d=args.d, ell=args.l, mass=args.m, family=family)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid_doc(grid: RadialGrid) -> dict:
    return {"layout": grid.layout, "r_min": grid.r_min, "r_max": grid.r_max,
            "n_points": grid.n_points}


def _config_doc(config: SolverConfig, grid: RadialGrid) -> dict:
    return {
        "e_scan_points": config.e_scan_points,
        "e_tol": config.e_tol,
        "max_bisections": config.max_bisections,
        "normalize_tol": config.normalize_tol,
        "grid": _grid_doc(grid),
    }


def _solve_doc(args, family, res: EigenResult) -> dict:
    doc = {
        "potential": format_potential(family),
        "d": args.d,
        "m": args.m,
        "state": args.state,
        "energy": res.energy,
        "nodes": res.nodes,
        "norm_error": res.norm_error,
        "mismatch_residual": res.mismatch_residual,
        "config": _config_doc(res.config, res.grid),
    }
    if args.d == 1:
        doc["parity"] = args.parity
    else:
        doc["l"] = args.l
    if res.warnings:
        doc["warnings"] = list(res.warnings)
    return doc


def _json_text(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def cmd_solve(args) -> int:
    cfg = _run_config(args)
    family = parse_potential(args.potential)
    problem = _build_problem(args, family)
    res = find_state(problem, args.state, cfg.solver)
    doc = _solve_doc(args, family, res)
    if (cfg.output or "json") == "csv":
        keys = ["potential", "d", "l" if args.d > 1 else "parity", "m", "state",
                "energy", "nodes", "norm_error", "mismatch_residual"]
        row = ",".join(str(doc[k]) if k in ("potential", "parity") else
                       (_fmt(doc[k]) if isinstance(doc[k], float) else str(doc[k]))
                       for k in keys)
        _emit(",".join(keys) + "\n" + row + "\n", cfg.out_path)
    else:
        _emit(_json_text(doc), cfg.out_path)
    return 0


def compare_exit_code(hypotheses_ok: bool, ordering_ok: bool, residual: float,
                      residual_tol: float = _RESIDUAL_TOL) -> int:
    """0 when the identity holds; 3 on a verified ordering contradiction;
    2 when the identity residual itself is out of tolerance."""
    if hypotheses_ok and not ordering_ok:
        return 3
    if residual > residual_tol:
        return 2
    return 0


def cmd_compare(args) -> int:
    cfg = _run_config(args)
    fam_a = parse_potential(args.potential_a)
    fam_b = parse_potential(args.potential_b)
    _build_problem(args, fam_a)  # validates the flag combination
    kw = dict(d=args.d, mass=args.m, n=args.state, config=cfg.solver)
    if args.d == 1:
        kw.update(ell=None, parity=args.parity)
    else:
        kw.update(ell=args.l)
    report = check_theorem1(fam_a, fam_b, **kw)
    doc = {
        "potential_1": format_potential(fam_a),
        "potential_2": format_potential(fam_b),
        "e1": report.e1,
        "e2": report.e2,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "residual": report.residual,
        "w_min": report.w_min,
        "ordering_ok": report.ordering_ok,
        "hypotheses_ok": report.hypotheses_ok,
        "warnings": list(report.warnings),
    }
    _emit(_json_text(doc), cfg.out_path)
    code = compare_exit_code(report.hypotheses_ok, report.ordering_ok, report.residual)
    if code == 3:
        print("ORDERING CONTRADICTION: hypotheses verified but E1 > E2 "
              "(this would contradict the ground-state comparison theorem)",
              file=sys.stderr)
    return code


def _sweep_axis(args) -> np.ndarray:
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.points == 1:
        return np.array([args.sweep_from], dtype=float)
    if args.spacing == "log":
        if args.sweep_from <= 0 or args.sweep_to <= 0:
            raise UsageError("log spacing requires positive --from/--to")
        return np.geomspace(args.sweep_from, args.sweep_to, args.points)
    return np.linspace(args.sweep_from, args.sweep_to, args.points)


def _sweep_rows(curve: SpectralCurve) -> list[dict]:
    rows = []
    for p in curve.points:
        rows.append({"a": p.a, "E": p.e, "dE_hf": p.de_hf, "dE_fd": p.de_fd,
                     "nodes": p.nodes, "converged": 1 if p.converged else 0})
    return rows


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    family = with_sweep(parse_potential(args.potential), args.sweep_param)
    template = _build_problem(args, family)
    axis = _sweep_axis(args)
    if np.any(axis <= 0):
        raise UsageError("swept parameter values must stay strictly positive")
    curve = sweep_parameter(family, template, args.state, axis, cfg.solver,
                            threads=cfg.resolved_threads())
    rows = _sweep_rows(curve)
    if cfg.output == "json":
        _emit(_json_text(rows), cfg.out_path)
    else:
        lines = ["a,E,dE_hf,dE_fd,nodes,converged"]
        for row in rows:
            lines.append(",".join([
                _fmt(row["a"]), _fmt(row["E"]), _fmt(row["dE_hf"]),
                _fmt(row["dE_fd"]), str(row["nodes"]), str(row["converged"]),
            ]))
        _emit("\n".join(lines) + "\n", cfg.out_path)
    if args.fig:
        from .plots import save_sweep_figure

        save_sweep_figure(curve, args.fig)
    return 0


def cmd_curve(args) -> int:
    cfg = _run_config(args)
    family = with_sweep(parse_potential(args.potential), args.sweep_param)
    template = _build_problem(args, family)
    if args.e_points < 1:
        raise UsageError("--e-points must be >= 1")
    m = args.m
    for e in (args.e_from, args.e_to):
        if not abs(e) < m:
            raise UsageError(f"energy {e:g} lies outside the discrete window (-m, m)")
    e_grid = np.linspace(args.e_from, args.e_to, args.e_points)
    curve = trace_folded_curve(family, template, args.state, e_grid, cfg.solver,
                               threads=cfg.resolved_threads())
    if cfg.output == "json":
        doc = {
            "points": [{"branch_pos": i, "a": p.a, "E": p.e, "dE_hf": p.de_hf,
                        "nodes": p.nodes, "solved_by": p.solved_by}
                       for i, p in enumerate(curve.points)],
            "fold": None if curve.fold is None else {"a": curve.fold[0],
                                                     "E": curve.fold[1]},
        }
        _emit(_json_text(doc), cfg.out_path)
    else:
        lines = ["branch_pos,a,E,dE_hf,nodes,solved_by"]
        for i, p in enumerate(curve.points):
            lines.append(",".join([
                str(i), _fmt(p.a), _fmt(p.e), _fmt(p.de_hf), str(p.nodes),
                p.solved_by,
            ]))
        if curve.fold is not None:
            lines.append(f"# fold a={_fmt(curve.fold[0])} E={_fmt(curve.fold[1])}")
        _emit("\n".join(lines) + "\n", cfg.out_path)
    if cfg.out_path:
        gp = "\n".join(f"{_fmt(p.a)} {_fmt(p.e)}" for p in curve.points) + "\n"
        with open(cfg.out_path + ".gp-data", "w") as fh:
            fh.write(gp)
    if args.fig:
        from .plots import save_curve_figure

        save_curve_figure(curve, args.fig)
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "curve": cmd_curve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except PotentialError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ZeroDivisionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        diag = {"error": str(exc), "kind": type(exc).__name__}
        print(_json_text(diag), file=sys.stderr, end="")
        return 2


if __name__ == "__main__":
    sys.exit(main())
