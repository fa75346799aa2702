"""Eigenvalue branches over a potential parameter, folds included.

E(a) can be two-valued (the cutoff-Coulomb ground level folds back at a
minimum cutoff), but a(E) stays single-valued on the families handled
here, so fold regions are traced by fixing E and root-finding the
parameter instead. Forward sweeps warm-start each point from its
neighbour to stay on one branch.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import FoldProximityError, hf_derivative
from .eigensolve import (
    SolverConfig,
    SolverError,
    UnboundStateError,
    _assemble,
    resolve_grid,
)
from .potentials import PotentialFamily, with_param
from .radial import RadialGrid, RadialProblem, ShootContext

__all__ = [
    "CurvePoint",
    "SpectralCurve",
    "sweep_parameter",
    "solve_for_parameter",
    "trace_folded_curve",
]

_A_WINDOW = (1e-6, 100.0)
_A_SCAN_POINTS = 400
_A_TOL_REL = 1e-12


@dataclass(frozen=True)
class CurvePoint:
    """One converged point of a spectral curve."""

    a: float
    e: float
    de_hf: float
    de_fd: float
    nodes: int
    solved_by: str           # "a-solve" (forward) or "E-solve" (inverted)
    converged: bool = True


@dataclass(frozen=True)
class SpectralCurve:
    """Points ordered along the branch, with an optional fold estimate."""

    points: tuple[CurvePoint, ...]
    fold: tuple[float, float] | None
    family: PotentialFamily


def _problem_at(template: RadialProblem, family: PotentialFamily, a: float) -> RadialProblem:
    return replace(template, family=with_param(family, family.sweep_param, a))


def sweep_parameter(family: PotentialFamily, template: RadialProblem, n: int,
                    a_grid, config: SolverConfig | None = None, *,
                    with_fd: bool = True, fd_step: float = 1e-4,
                    threads: int = 1) -> SpectralCurve:
    """Solve E(a) forward over a monotone parameter grid.

    Each point warm-starts its energy scan from the previous point so the
    sweep follows one branch; failed points become gap markers instead of
    aborting the sweep. Finite-difference side solves are independent per
    point and fan out over a worker pool.
    """
    from .eigensolve import find_state

    config = config or SolverConfig()
    if family.sweep_param is None:
        raise ValueError("family has no sweep parameter designated")
    a_values = [float(a) for a in a_grid]
    if not a_values:
        raise ValueError("empty sweep grid")
    diffs = np.diff(a_values)
    if len(a_values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep grid must be strictly monotone")

    results = []
    hint = None
    for a in a_values:
        problem = _problem_at(template, family, a)
        try:
            res = find_state(problem, n, config, e_hint=hint)
            hint = res.energy
            results.append(res)
        except (SolverError, ValueError):
            results.append(None)
    if all(r is None for r in results):
        raise UnboundStateError("no sweep point produced a bound state")

    def _finish(pair):
        a, res = pair
        if res is None:
            return CurvePoint(a=a, e=math.nan, de_hf=math.nan, de_fd=math.nan,
                              nodes=-1, solved_by="a-solve", converged=False)
        if with_fd:
            try:
                rep = hf_derivative(res, fd_step=fd_step)
                return CurvePoint(a=a, e=res.energy, de_hf=rep.de_hf,
                                  de_fd=rep.de_fd, nodes=res.nodes,
                                  solved_by="a-solve")
            except (FoldProximityError, ValueError):
                pass
        rep = hf_derivative(res, de_fd=math.nan)
        return CurvePoint(a=a, e=res.energy, de_hf=rep.de_hf, de_fd=math.nan,
                          nodes=res.nodes, solved_by="a-solve")

    pairs = list(zip(a_values, results))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(_finish, pairs))
    else:
        points = [_finish(p) for p in pairs]
    return SpectralCurve(points=tuple(points), fold=None, family=family)


def _fixed_energy_grid(template: RadialProblem, family: PotentialFamily,
                       e: float, a_lo: float) -> RadialGrid:
    """One consistent mesh for a whole fixed-E parameter scan."""
    kappa = math.sqrt(max(template.mass**2 - e * e, 0.0))
    kappa = max(kappa, 1.5e-3 * template.mass)
    r_max = max(40.0 / template.mass, 25.0 / kappa)
    probe = _problem_at(template, family, a_lo)
    grid = resolve_grid(probe, r_max)
    return grid


def _wronskian_at(template, family, a, e, grid):
    problem = _problem_at(template, family, a)
    ctx = ShootContext(problem, grid)
    res = ctx.shoot(e)
    return res.wronskian, res.nodes, ctx


def solve_for_parameter(family: PotentialFamily, template: RadialProblem, n: int,
                        e: float, a_bracket: tuple[float, float],
                        config: SolverConfig | None = None) -> float:
    """Root-find the parameter value whose spectrum contains E at state n.

    A bisection on the fixed-E matching function localizes the root; Newton
    steps driven by the forward solver then polish it, so the result is
    consistent with find_state's own discretization (round-trips through a
    forward solve recover the parameter to ~1e-8 relative or better).
    """
    config = config or SolverConfig()
    if family.sweep_param is None:
        raise ValueError("family has no sweep parameter designated")
    a_lo, a_hi = float(a_bracket[0]), float(a_bracket[1])
    if not 0 < a_lo < a_hi:
        raise ValueError("parameter bracket must satisfy 0 < a_lo < a_hi")
    if not abs(e) < template.mass:
        raise ValueError("energy outside the discrete window (-m, m)")
    grid = _fixed_energy_grid(template, family, e, a_lo)
    w_lo, _, _ = _wronskian_at(template, family, a_lo, e, grid)
    w_hi, _, _ = _wronskian_at(template, family, a_hi, e, grid)
    if not (math.isfinite(w_lo) and math.isfinite(w_hi)) or w_lo * w_hi > 0:
        raise ValueError(
            f"no sign change of the matching function over [{a_lo:g}, {a_hi:g}]"
        )
    lo, hi = a_lo, a_hi
    wl = w_lo
    while (hi - lo) > _A_TOL_REL * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        wm, _, _ = _wronskian_at(template, family, mid, e, grid)
        if wm == 0.0:
            lo = hi = mid
            break
        if (wm > 0) == (wl > 0):
            lo, wl = mid, wm
        else:
            hi = mid
    a_root = 0.5 * (lo + hi)
    _, nodes, _ = _wronskian_at(template, family, a_root, e, grid)
    if nodes != n:
        raise ValueError(
            f"root at {family.sweep_param}={a_root:g} carries {nodes} nodes, wanted {n}"
        )
    return _newton_polish(family, template, n, e, a_root, (a_lo, a_hi), config)


def _newton_polish(family, template, n, e, a_root, a_bracket, config) -> float:
    """Drive |E_forward(a) - e| to solver tolerance via Newton steps with the
    Hellmann-Feynman slope; falls back to the bisection root on any trouble."""
    from .eigensolve import find_state

    a = a_root
    best = a_root
    for _ in range(6):
        try:
            res = find_state(_problem_at(template, family, a), n, config, e_hint=e)
        except (SolverError, ValueError):
            return best
        err = res.energy - e
        best = a
        if abs(err) <= max(10.0 * config.e_tol, 1e-13):
            return a
        try:
            slope = hf_derivative(res, de_fd=math.nan).de_hf
        except (ValueError, ZeroDivisionError):
            return best
        if not math.isfinite(slope) or slope == 0.0:
            return best
        step = err / slope
        a_new = a - step
        if not (0.5 * a_bracket[0] <= a_new <= 2.0 * a_bracket[1]) or a_new <= 0:
            return best
        if abs(step) > 0.5 * (a_bracket[1] - a_bracket[0]):
            return best
        a = a_new
    return best


def _roots_at_energy(template, family, e, n, a_window, a_scan_points):
    """All parameter roots of the matching function at fixed energy whose
    joined solution carries n interior nodes."""
    a_lo, a_hi = a_window
    grid = _fixed_energy_grid(template, family, e, a_lo)
    a_scan = np.geomspace(a_lo, a_hi, a_scan_points)
    ws = np.empty(a_scan.shape[0])
    for i, a in enumerate(a_scan):
        ws[i], _, _ = _wronskian_at(template, family, float(a), e, grid)
    roots = []
    for i in range(len(a_scan) - 1):
        if not (math.isfinite(ws[i]) and math.isfinite(ws[i + 1])):
            continue
        if ws[i] == 0.0 or (ws[i] > 0) != (ws[i + 1] > 0):
            lo, hi = float(a_scan[i]), float(a_scan[i + 1])
            wl = ws[i]
            while (hi - lo) > _A_TOL_REL * hi:
                mid = 0.5 * (lo + hi)
                wm, _, _ = _wronskian_at(template, family, mid, e, grid)
                if wm == 0.0:
                    lo = hi = mid
                    break
                if (wm > 0) == (wl > 0):
                    lo, wl = mid, wm
                else:
                    hi = mid
            a_root = 0.5 * (lo + hi)
            problem = _problem_at(template, family, a_root)
            ctx = ShootContext(problem, grid)
            res = ctx.shoot(e)
            if res.nodes == n:
                roots.append((a_root, ctx))
    return roots


def trace_folded_curve(family: PotentialFamily, template: RadialProblem, n: int,
                       e_grid, config: SolverConfig | None = None, *,
                       a_window: tuple[float, float] = _A_WINDOW,
                       a_scan_points: int = _A_SCAN_POINTS,
                       threads: int = 1) -> SpectralCurve:
    """Trace E(a) through folds by solving a(E) on an energy grid.

    Points are chained by nearest-neighbour steps in (log a, E) space; the
    fold, if any, is the vertex of a parabola a(E) fitted through the three
    chained points of smallest parameter value.
    """
    config = config or SolverConfig()
    if family.sweep_param is None:
        raise ValueError("family has no sweep parameter designated")
    energies = [float(e) for e in e_grid]
    if not energies:
        raise ValueError("empty energy grid")
    m = template.mass
    if any(abs(e) >= m for e in energies):
        raise ValueError("energy grid must lie inside the discrete window (-m, m)")

    def _solve_one(e):
        out = []
        for a_root, ctx in _roots_at_energy(template, family, e, n, a_window,
                                            a_scan_points):
            root_like = _CurveRoot(e)
            res = _assemble(ctx, root_like, n, config, ())
            fam_at = ctx.problem.family
            rep = hf_derivative(res, fam_at, de_fd=math.nan)
            out.append(CurvePoint(a=a_root, e=e, de_hf=rep.de_hf, de_fd=math.nan,
                                  nodes=res.nodes, solved_by="E-solve"))
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            gathered = list(pool.map(_solve_one, energies))
    else:
        gathered = [_solve_one(e) for e in energies]
    points = [p for chunk in gathered for p in chunk]
    if not points:
        raise UnboundStateError(
            "no parameter roots found anywhere on the energy grid"
        )

    chained = _chain_points(points)
    fold = _fit_fold(chained)
    return SpectralCurve(points=tuple(chained), fold=fold, family=family)


class _CurveRoot:
    """Duck-typed stand-in for eigensolve._Root during assembly."""

    __slots__ = ("energy", "scan_cell")

    def __init__(self, energy: float):
        self.energy = energy
        self.scan_cell = (energy, energy)


def _chain_points(points: list[CurvePoint]) -> list[CurvePoint]:
    """Order points along the branch by greedy nearest-neighbour chaining
    in normalized (log a, E) coordinates, starting from the highest energy."""
    if len(points) <= 2:
        return sorted(points, key=lambda p: (-p.e, p.a))
    la = np.log([p.a for p in points])
    ee = np.array([p.e for p in points])
    la_span = max(la.max() - la.min(), 1e-12)
    ee_span = max(ee.max() - ee.min(), 1e-12)
    u = (la - la.min()) / la_span
    w = (ee - ee.min()) / ee_span
    remaining = list(range(len(points)))
    start = max(remaining, key=lambda i: (ee[i], -la[i]))
    order = [start]
    remaining.remove(start)
    while remaining:
        cur = order[-1]
        nxt = min(remaining,
                  key=lambda i: (u[i] - u[cur]) ** 2 + (w[i] - w[cur]) ** 2)
        order.append(nxt)
        remaining.remove(nxt)
    return [points[i] for i in order]


def _fit_fold(chained: list[CurvePoint]) -> tuple[float, float] | None:
    """Vertex of the parabola a(E) through the three smallest-a points,
    reported only when da/dE actually changes sign along the chain."""
    if len(chained) < 3:
        return None
    da = np.diff([p.a for p in chained])
    signs = np.sign(da[np.abs(da) > 0])
    flips = int(np.sum(signs[:-1] * signs[1:] < 0))
    if flips == 0:
        return None
    by_a = sorted(chained, key=lambda p: p.a)[:3]
    es = np.array([p.e for p in by_a])
    avs = np.array([p.a for p in by_a])
    if len(set(es.tolist())) < 3:
        return None
    c2, c1, c0 = np.polyfit(es, avs, 2)
    if c2 <= 0:
        return None
    e_star = -c1 / (2.0 * c2)
    a_star = c0 - c1 * c1 / (4.0 * c2)
    return float(a_star), float(e_star)
