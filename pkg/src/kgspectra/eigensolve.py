"""Discrete-state location for the radial Klein-Gordon problem.

The characteristic function is the scale-free Wronskian of the outward and
inward shoot solutions: it is smooth in E and vanishes exactly at
eigenvalues, so roots are bracketed by a sign scan over the discrete-state
window (-m, m), refined by bisection plus a secant polish, and labelled by
the interior node count of the joined solution. The quadratic energy
dependence (E - V)^2 allows two distinct eigenvalues with the same node
count (folded E(a) curves); state selection therefore checks the achieved
node count at each refined root instead of trusting count ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .potentials import validate_admissible
from .radial import RadialGrid, RadialProblem, ShootContext

__all__ = [
    "SolverConfig",
    "EigenResult",
    "EnergyBracket",
    "SolverError",
    "UnboundStateError",
    "NonConvergenceError",
    "bracket_scan",
    "find_state",
    "normalize",
    "resolve_grid",
]

_E_MARGIN = 1e-6          # distance kept from the continuum thresholds +-m
_ESCALATION = (40.0, 400.0, 4000.0)


class SolverError(RuntimeError):
    """Base class for eigensolver failures."""


class UnboundStateError(SolverError):
    """Requested state is not bound at these parameters."""


class NonConvergenceError(SolverError):
    """Refinement exhausted its iteration budget."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the scan/bisection pipeline; grid=None resolves one per problem."""

    e_scan_points: int = 400
    e_tol: float = 1e-10
    max_bisections: int = 200
    grid: RadialGrid | None = None
    normalize_tol: float = 1e-8

    def __post_init__(self):
        if self.e_tol <= 0:
            raise ValueError("e_tol must be positive")
        if self.e_scan_points < 10:
            raise ValueError("e_scan_points must be >= 10")


@dataclass(frozen=True, eq=False)
class EigenResult:
    """A converged bound state with its normalized radial function."""

    energy: float
    psi: np.ndarray
    nodes: int
    mismatch_residual: float
    norm_error: float
    problem: RadialProblem
    config: SolverConfig
    grid: RadialGrid
    r: np.ndarray
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class EnergyBracket:
    """Scan interval enclosing one eigenvalue root."""

    e_lo: float
    e_hi: float
    nodes_lo: int
    nodes_hi: int
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class _Root:
    energy: float
    wronskian: float
    mismatch: float
    nodes: int
    scan_cell: tuple[float, float]


def _family_min_rmax(problem: RadialProblem) -> float:
    fam = problem.family
    if fam.kind == "square-well":
        return fam.param("R") + 20.0
    if fam.kind in ("cutoff-coulomb", "shell-cutoff-coulomb"):
        return 5.0 * fam.param("a")
    if fam.kind == "exponential":
        return 20.0 * fam.param("b")
    if fam.kind == "tabulated":
        return fam.table[-1][0]
    return 0.0


def resolve_grid(problem: RadialProblem, r_max: float, n_points: int = 4000) -> RadialGrid:
    """Default mesh: log-uniform where the potential is singular or steep
    at the origin (or the centrifugal term is, d = 2), uniform otherwise."""
    fam = problem.family
    r_max = max(r_max, _family_min_rmax(problem))
    if fam.kind == "coulomb":
        return RadialGrid("log-uniform", 1e-12, r_max, n_points)
    if fam.kind in ("cutoff-coulomb", "shell-cutoff-coulomb"):
        a = fam.param("a")
        if a < 0.5:
            return RadialGrid("log-uniform", 1e-6 * min(1.0, a), r_max, n_points)
    if problem.d == 2:
        return RadialGrid("log-uniform", 1e-10, r_max, n_points)
    r_min = 0.0 if problem.d == 1 else 1e-6
    n = int(min(40000, max(n_points, round(r_max / 0.01))))
    return RadialGrid("uniform", r_min, r_max, n)


def _window(problem: RadialProblem) -> tuple[float, float]:
    m = problem.mass
    return (-m + _E_MARGIN, m - _E_MARGIN)


def _scan_energies(lo: float, hi: float, n_base: int, mass: float) -> np.ndarray:
    """Uniform scan plus geometric refinement toward both continuum edges,
    where weakly bound levels accumulate faster than any uniform step."""
    base = np.linspace(lo, hi, n_base)
    cell = (hi - lo) / max(n_base - 1, 1)
    b_hi = max(cell, 2e-5 * mass)
    edges = []
    if hi > lo + 4 * _E_MARGIN:
        b = np.geomspace(2 * _E_MARGIN, min(b_hi * 8, (hi - lo) / 4), 48)
        edges.append(hi - b)
        edges.append(lo + b)
    grid = np.unique(np.concatenate([base] + edges))
    return grid[(grid >= lo) & (grid <= hi)]


def _sign(x: float) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _refine_cell(ctx: ShootContext, e_a: float, w_a: float, e_b: float, w_b: float,
                 config: SolverConfig) -> _Root:
    """Bisection on the Wronskian sign, then a short secant polish."""
    a, b = e_a, e_b
    wa, wb = w_a, w_b
    cell = (e_a, e_b)
    iters = 0
    while (b - a) > config.e_tol and iters < config.max_bisections:
        mid = 0.5 * (a + b)
        res = ctx.shoot(mid)
        wm = res.wronskian
        iters += 1
        if not math.isfinite(wm):
            raise NonConvergenceError("integration diverged during bisection", (a, b))
        if wm == 0.0:
            a = b = mid
            break
        if _sign(wm) == _sign(wa):
            a, wa = mid, wm
        else:
            b, wb = mid, wm
    if (b - a) > config.e_tol:
        raise NonConvergenceError(
            f"bisection exhausted {config.max_bisections} iterations", (a, b)
        )

    best_e = 0.5 * (a + b)
    best = ctx.shoot(best_e)
    for _ in range(4):
        if wb == wa or not (math.isfinite(wa) and math.isfinite(wb)):
            break
        e_s = (a * wb - b * wa) / (wb - wa)
        if not (a <= e_s <= b):
            break
        res = ctx.shoot(e_s)
        if not math.isfinite(res.wronskian):
            break
        if abs(res.wronskian) < abs(best.wronskian):
            best_e, best = e_s, res
        if res.wronskian == 0.0:
            break
        if _sign(res.wronskian) == _sign(wa):
            a, wa = e_s, res.wronskian
        else:
            b, wb = e_s, res.wronskian
    return _Root(energy=best_e, wronskian=best.wronskian, mismatch=best.mismatch,
                 nodes=best.nodes, scan_cell=cell)


def _gather_subcell_roots(ctx, e_a, w_a, c_a, e_b, w_b, c_b, config, depth) -> list[_Root]:
    """Split a suspicious cell and refine every sign change found inside.

    Handles even root multiplicities (e.g. near-threshold level pairs) that
    a plain sign scan cannot see.
    """
    roots: list[_Root] = []
    if e_b - e_a <= 4 * config.e_tol:
        return roots
    es = np.linspace(e_a, e_b, 17)
    ws = np.empty(17)
    cs = np.empty(17, dtype=int)
    ws[0], cs[0] = w_a, c_a
    ws[-1], cs[-1] = w_b, c_b
    for i in range(1, 16):
        res = ctx.shoot(es[i])
        ws[i], cs[i] = res.wronskian, res.nodes
    for i in range(16):
        if not (math.isfinite(ws[i]) and math.isfinite(ws[i + 1])):
            continue
        if _sign(ws[i]) * _sign(ws[i + 1]) < 0:
            roots.append(_refine_cell(ctx, es[i], ws[i], es[i + 1], ws[i + 1], config))
        elif depth > 0 and cs[i] != cs[i + 1]:
            roots.extend(_gather_subcell_roots(
                ctx, es[i], ws[i], cs[i], es[i + 1], ws[i + 1], cs[i + 1],
                config, depth - 1))
    return roots


def _locate(ctx: ShootContext, n: int, config: SolverConfig,
            window: tuple[float, float], hint: float | None = None,
            ) -> tuple[_Root, list[dict], tuple[str, ...]]:
    """Find the eigenvalue whose joined solution carries n interior nodes.

    Returns the converged root, the raw scan table, and warnings. Roots are
    tried in ascending energy order (or by distance from the hint), so the
    result is deterministic when several eigenvalues share a node count.
    """
    lo, hi = window
    if not lo < hi:
        raise UnboundStateError("empty energy window")
    # keep the scan density of the full window when a hint narrows it
    full_span = 2.0 * (ctx.problem.mass - _E_MARGIN)
    n_base = max(48, min(config.e_scan_points,
                         int(config.e_scan_points * (hi - lo) / full_span) + 2))
    energies = _scan_energies(lo, hi, n_base, ctx.problem.mass)
    wts = np.empty(energies.shape[0])
    counts = np.empty(energies.shape[0], dtype=int)
    for i, e in enumerate(energies):
        res = ctx.shoot(float(e))
        wts[i] = res.wronskian
        counts[i] = res.nodes

    cells = []
    for i in range(len(energies) - 1):
        if math.isfinite(wts[i]) and math.isfinite(wts[i + 1]):
            if _sign(wts[i]) * _sign(wts[i + 1]) < 0 or wts[i] == 0.0:
                cells.append(i)
    key = (lambda i: abs(0.5 * (energies[i] + energies[i + 1]) - hint)) if hint is not None else (lambda i: energies[i])
    cells.sort(key=key)

    scan_table = [{"e": float(energies[i]), "wronskian": float(wts[i]),
                   "nodes": int(counts[i])} for i in range(len(energies))]

    warnings: list[str] = []
    matches: list[_Root] = []
    for i in cells:
        root = _refine_cell(ctx, float(energies[i]), float(wts[i]),
                            float(energies[i + 1]), float(wts[i + 1]), config)
        if root.nodes == n:
            matches.append(root)
            break
    if not matches:
        # second pass: hidden even-multiplicity roots inside count-jump cells
        suspicious = [i for i in range(len(energies) - 1)
                      if counts[i] != counts[i + 1] and i not in cells]
        suspicious.sort(key=key)
        found: list[_Root] = []
        for i in suspicious:
            found.extend(_gather_subcell_roots(
                ctx, float(energies[i]), float(wts[i]), int(counts[i]),
                float(energies[i + 1]), float(wts[i + 1]), int(counts[i + 1]),
                config, depth=3))
        for i in cells:
            # sibling roots sharing a cell with a wrong-count root
            found.extend(_gather_subcell_roots(
                ctx, float(energies[i]), float(wts[i]), int(counts[i]),
                float(energies[i + 1]), float(wts[i + 1]), int(counts[i + 1]),
                config, depth=2))
        found = [rt for rt in found if rt.nodes == n]
        found.sort(key=(lambda rt: abs(rt.energy - hint)) if hint is not None else (lambda rt: rt.energy))
        if found:
            matches.append(found[0])
            warnings.append("root recovered by cell subdivision")
    if not matches:
        raise UnboundStateError(
            f"no state with {n} nodes found in E in [{lo:.6g}, {hi:.6g}]"
        )
    return matches[0], scan_table, tuple(warnings)


def normalize(psi: np.ndarray, grid) -> np.ndarray:
    """Scale samples to unit Simpson norm, first interior arch positive."""
    r = grid.nodes() if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != r.shape:
        raise ValueError("psi and grid size mismatch")
    if not np.all(np.isfinite(psi)):
        raise ValueError("non-finite wavefunction samples")
    nrm2 = simpson(psi * psi, x=r)
    if not math.isfinite(nrm2) or nrm2 <= 0.0:
        raise ValueError("wavefunction has zero or non-finite norm")
    out = psi / math.sqrt(nrm2)
    sign_flips = np.nonzero(out[:-1] * out[1:] < 0.0)[0]
    arch_end = int(sign_flips[0]) + 1 if sign_flips.size else len(out)
    arch = out[:arch_end]
    if arch[np.argmax(np.abs(arch))] < 0.0:
        out = -out
    return out


def _assemble(ctx: ShootContext, root: _Root, n: int, config: SolverConfig,
              warnings: tuple[str, ...]) -> EigenResult:
    res = ctx.shoot(root.energy)
    if res.nodes != n:
        raise NonConvergenceError(
            f"converged root carries {res.nodes} nodes, wanted {n}", root.scan_cell
        )
    psi = normalize(res.psi, ctx.r)
    norm_error = abs(simpson(psi * psi, x=ctx.r) - 1.0)
    if norm_error > config.normalize_tol:
        raise NonConvergenceError(f"normalization error {norm_error:g} above tolerance")
    return EigenResult(
        energy=root.energy,
        psi=psi,
        nodes=res.nodes,
        mismatch_residual=abs(res.mismatch),
        norm_error=norm_error,
        problem=ctx.problem,
        config=config,
        grid=ctx.grid,
        r=ctx.r,
        warnings=warnings,
    )


def _check_admissible(problem: RadialProblem) -> None:
    report = validate_admissible(problem)
    if not report.ok:
        raise ValueError("inadmissible problem: " + "; ".join(report.failures))


def _locate_auto(problem: RadialProblem, n: int, config: SolverConfig,
                 hint: float | None = None,
                 ) -> tuple[ShootContext, _Root, tuple[str, ...]]:
    """Escalating-extent search, then a re-solve on the kappa-adapted grid."""
    window = _window(problem)
    m = problem.mass
    found = None
    for r_max in _ESCALATION:
        ctx = ShootContext(problem, resolve_grid(problem, r_max / m))
        try:
            root, _, warns = _locate(ctx, n, config, window, hint=hint)
            found = (ctx, root, warns)
            break
        except UnboundStateError:
            continue
    if found is None:
        raise UnboundStateError(
            f"state n={n} not bound at these parameters (searched r_max up to "
            f"{_ESCALATION[-1] / m:g})"
        )
    ctx, root, warns = found
    kappa = math.sqrt(max(m * m - root.energy**2, 0.0))
    kappa = max(kappa, 1.5e-3 * m)
    r_max_final = max(40.0 / m, 25.0 / kappa)
    if abs(r_max_final - ctx.grid.r_max) / r_max_final > 0.1:
        ctx2 = ShootContext(problem, resolve_grid(problem, r_max_final))
        binding = m - abs(root.energy)
        delta = max(0.5 * binding, 1e-5 * m)
        lo = max(window[0], root.energy - delta)
        hi = min(window[1], root.energy + delta)
        try:
            root2, _, warns2 = _locate(ctx2, n, config, (lo, hi), hint=root.energy)
        except UnboundStateError:
            root2, _, warns2 = _locate(ctx2, n, config, window, hint=root.energy)
        ctx, root, warns = ctx2, root2, warns + warns2
    return ctx, root, warns


def find_state(problem: RadialProblem, n: int, config: SolverConfig | None = None,
               *, e_hint: float | None = None) -> EigenResult:
    """Converge the n-th state (n = interior node count) of the problem."""
    if n < 0:
        raise ValueError("state index must be nonnegative")
    config = config or SolverConfig()
    _check_admissible(problem)
    if config.grid is not None:
        ctx = ShootContext(problem, config.grid)
        window = _window(problem)
        if e_hint is not None:
            m = problem.mass
            delta = max(0.25 * (m - abs(e_hint)), 0.02 * m)
            lo = max(window[0], e_hint - delta)
            hi = min(window[1], e_hint + delta)
            try:
                root, _, warns = _locate(ctx, n, config, (lo, hi), hint=e_hint)
            except UnboundStateError:
                root, _, warns = _locate(ctx, n, config, window, hint=e_hint)
        else:
            root, _, warns = _locate(ctx, n, config, window)
        return _assemble(ctx, root, n, config, warns)
    ctx, root, warns = _locate_auto(problem, n, config, hint=e_hint)
    return _assemble(ctx, root, n, config, warns)


def bracket_scan(problem: RadialProblem, n: int, config: SolverConfig | None = None,
                 ) -> EnergyBracket:
    """Scan the discrete window and return an interval enclosing state n.

    The interval is widened to scan points whose joined-solution node counts
    are n below and n+1 above whenever the spectrum is regular enough; when
    that labelling is unattainable (folded spectra) the raw enclosing cell
    is returned with a warning.
    """
    if n < 0:
        raise ValueError("state index must be nonnegative")
    config = config or SolverConfig()
    _check_admissible(problem)
    window = _window(problem)
    if config.grid is not None:
        ctx = ShootContext(problem, config.grid)
        root, scan, warns = _locate(ctx, n, config, window)
    else:
        ctx, root, warns = _locate_auto(problem, n, config)
        _, scan, _ = _locate(ctx, n, config, window, hint=root.energy)

    energies = [row["e"] for row in scan]
    counts = [row["nodes"] for row in scan]
    wframes = [row["wronskian"] for row in scan]
    below = [i for i, e in enumerate(energies) if e <= root.energy]
    above = [i for i, e in enumerate(energies) if e > root.energy]
    e_lo, c_lo = window[0], counts[0] if counts else n
    for i in reversed(below):
        if counts[i] == n:
            e_lo, c_lo = energies[i], counts[i]
            break
    e_hi, c_hi = None, None
    for i in above:
        if counts[i] == n + 1:
            e_hi, c_hi = energies[i], counts[i]
            break
        if math.isfinite(wframes[i]) and i > 0 and math.isfinite(wframes[i - 1]):
            if _sign(wframes[i]) * _sign(wframes[i - 1]) < 0 and energies[i - 1] > root.energy:
                break  # never widen across a second root
    if e_hi is None:
        nxt = [i for i in above if energies[i] >= root.energy]
        if nxt:
            e_hi, c_hi = energies[nxt[0]], counts[nxt[0]]
            warns = warns + ("bracket end labelled by joined-count offset",)
        else:
            e_hi, c_hi = window[1], n + 1
    return EnergyBracket(e_lo=float(e_lo), e_hi=float(e_hi), nodes_lo=int(c_lo),
                         nodes_hi=int(c_hi), warnings=warns)
