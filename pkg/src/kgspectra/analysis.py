"""The two generating identities behind both comparison theorems.

Theorem 1 rests on the integral identity

    (E2 - E1) int W psi1 psi2 dr = int (V2 - V1) W psi1 psi2 dr,
    W(r) = E1 + E2 - V1(r) - V2(r),

an algebraic consequence of the two eigenequations (it holds for any pair
of states sharing the same angular constant, nodes or not). Theorem 2
rests on the derivative formula

    E'(a) = (E <V_a> - <V V_a>) / (E - <V>),

checked here against central finite differences of the solved eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .eigensolve import EigenResult, SolverConfig, SolverError, find_state
from .potentials import (
    PotentialFamily,
    eval_param_derivative,
    eval_potential,
    parse_potential,
    with_param,
)
from .radial import RadialProblem

__all__ = [
    "ComparisonReport",
    "DerivativeReport",
    "Theorem2Report",
    "FoldProximityError",
    "weight_function",
    "comparison_identity",
    "expectation",
    "hf_derivative",
    "fd_derivative",
    "check_theorem1",
    "check_theorem2",
]

_ZERO_ENERGY_FLAG = 1e-9


class FoldProximityError(SolverError):
    """A parameter stencil straddles a fold; use the continuation module."""


@dataclass(frozen=True)
class ComparisonReport:
    """Both sides of the Theorem-1 identity plus the ordering verdict."""

    e1: float
    e2: float
    lhs: float
    rhs: float
    residual: float
    w_min: float
    ordering_ok: bool
    hypotheses_ok: bool
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class DerivativeReport:
    """Hellmann-Feynman-type slope against its finite-difference check."""

    e: float
    v_mean: float
    va_mean: float
    vva_mean: float
    denominator: float
    de_hf: float
    de_fd: float
    agreement: float


@dataclass(frozen=True)
class Theorem2Report:
    """Per-point derivative reports and the sign-consistency verdict."""

    a_values: tuple[float, ...]
    reports: tuple[DerivativeReport, ...]
    derivative_sign: int
    verdict: bool
    exempt: tuple[int, ...]   # indices with E < 0: outside the theorem hypothesis
    warnings: tuple[str, ...] = ()


def weight_function(e1: float, e2: float, v1: PotentialFamily, v2: PotentialFamily, r):
    """W(r) = E1 + E2 - V1(r) - V2(r)."""
    return e1 + e2 - np.asarray(eval_potential(v1, r)) - np.asarray(eval_potential(v2, r))


def _common_grid(res1: EigenResult, res2: EigenResult):
    """Put both states on one mesh, interpolating onto the finer grid."""
    r1, r2 = res1.r, res2.r
    if r1.shape == r2.shape and np.array_equal(r1, r2):
        return r1, res1.psi, res2.psi
    if min(r1[-1], r2[-1]) <= max(r1[0], r2[0]):
        raise ValueError("wavefunction grids do not overlap")
    fine_first = (len(r1), -r1[-1]) >= (len(r2), -r2[-1])
    r = r1 if fine_first else r2
    psi_a = res1.psi if fine_first else np.interp(r, r1, res1.psi, left=0.0, right=0.0)
    psi_b = np.interp(r, r2, res2.psi, left=0.0, right=0.0) if fine_first else res2.psi
    return r, psi_a, psi_b


def _check_normalized(res: EigenResult) -> None:
    nrm = simpson(res.psi * res.psi, x=res.r)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"input state is not normalized (integral {nrm:g})")


def _eval_family_on(family: PotentialFamily, r: np.ndarray) -> np.ndarray:
    # the bare coulomb family cannot be evaluated at an r = 0 grid head
    if family.kind == "coulomb" and r.size and r[0] == 0.0:
        r = np.maximum(r, r[r > 0][0])
    return np.asarray(eval_potential(family, r))


def comparison_identity(res1: EigenResult, res2: EigenResult) -> ComparisonReport:
    """Evaluate both sides of the Theorem-1 identity by Simpson quadrature."""
    _check_normalized(res1)
    _check_normalized(res2)
    r, psi1, psi2 = _common_grid(res1, res2)
    e1, e2 = res1.energy, res2.energy
    v1 = _eval_family_on(res1.problem.family, r)
    v2 = _eval_family_on(res2.problem.family, r)
    w = e1 + e2 - v1 - v2
    cross = psi1 * psi2
    lhs = (e2 - e1) * simpson(w * cross, x=r)
    rhs = simpson((v2 - v1) * w * cross, x=r)
    residual = abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))

    warnings = []
    ordering_ok = e1 <= e2
    potentials_ordered = bool(np.all(v1 <= v2 + 1e-12) and np.all(v2 <= 1e-12))
    node_free = res1.nodes == 0 and res2.nodes == 0
    energies_positive = e1 >= 0.0 and e2 >= 0.0
    if abs(e1) < _ZERO_ENERGY_FLAG or abs(e2) < _ZERO_ENERGY_FLAG:
        warnings.append("an energy sits within 1e-9 of zero: boundary of the theorem hypothesis")
    if not potentials_ordered:
        warnings.append("potentials are not ordered V1 <= V2 <= 0 on the grid")
    if not node_free:
        warnings.append("states are not node-free ground states")
    if not energies_positive:
        warnings.append("energies are not both nonnegative")
    hypotheses_ok = potentials_ordered and node_free and energies_positive
    return ComparisonReport(
        e1=e1, e2=e2, lhs=float(lhs), rhs=float(rhs), residual=float(residual),
        w_min=float(np.min(w)), ordering_ok=ordering_ok,
        hypotheses_ok=hypotheses_ok, warnings=tuple(warnings),
    )


def expectation(res: EigenResult, f) -> float:
    """<f> = int f(r) psi^2 dr on the solve grid (Simpson)."""
    _check_normalized(res)
    values = np.asarray(f(res.r), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("integrand is not finite on the grid")
    return float(simpson(values * res.psi * res.psi, x=res.r))


def hf_derivative(res: EigenResult, family: PotentialFamily | None = None, *,
                  de_fd: float | None = None, fd_step: float = 1e-4,
                  ) -> DerivativeReport:
    """Slope of E along the designated parameter from expectation values.

    de_fd may be supplied (e.g. from a sweep neighbour); otherwise a central
    finite difference of find_state is run for the cross-check.
    """
    family = family or res.problem.family
    if family.sweep_param is None:
        raise ValueError("family has no sweep parameter designated")
    _check_normalized(res)
    r = res.r
    v = _eval_family_on(family, r)
    r_eval = np.maximum(r, r[r > 0][0]) if (family.kind == "coulomb" and r[0] == 0.0) else r
    va = np.asarray(eval_param_derivative(family, r_eval))
    rho = res.psi * res.psi
    v_mean = float(simpson(v * rho, x=r))
    va_mean = float(simpson(va * rho, x=r))
    vva_mean = float(simpson(v * va * rho, x=r))
    e = res.energy
    denom = e - v_mean
    if abs(denom) < 1e-12:
        raise ZeroDivisionError(
            "degenerate Hellmann-Feynman denominator |E - <V>| < 1e-12"
        )
    de_hf = (e * va_mean - vva_mean) / denom
    if de_fd is None:
        problem = replace(res.problem, family=family)
        a0 = family.param(family.sweep_param)
        # both stencil solves reuse the base grid: a grid change across the
        # stencil would leak discretization offsets into the 1/(2h) quotient
        de_fd = fd_derivative(problem, res.nodes, fd_step * abs(a0), res.config,
                              e_hint=res.energy, grid=res.grid)
    agreement = abs(de_hf - de_fd) / (1.0 + abs(de_fd))
    return DerivativeReport(
        e=e, v_mean=v_mean, va_mean=va_mean, vva_mean=vva_mean,
        denominator=denom, de_hf=float(de_hf), de_fd=float(de_fd),
        agreement=float(agreement),
    )


def fd_derivative(problem: RadialProblem, n: int, h: float,
                  config: SolverConfig | None = None, *,
                  e_hint: float | None = None, grid=None) -> float:
    """Central difference (E(a+h) - E(a-h)) / 2h along the sweep parameter.

    Both side solves share one grid (the caller's, or the base problem's
    resolved grid) so discretization offsets cancel in the quotient.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    config = config or SolverConfig()
    family = problem.family
    name = family.sweep_param
    if name is None:
        raise ValueError("family has no sweep parameter designated")
    a0 = family.param(name)
    if a0 - h <= 0:
        raise ValueError(f"step h={h:g} crosses the positivity bound of {name}")
    if config.grid is None:
        if grid is None:
            base = find_state(problem, n, config, e_hint=e_hint)
            grid = base.grid
            e_hint = base.energy
        config = replace(config, grid=grid)
    try:
        lo = find_state(replace(problem, family=with_param(family, name, a0 - h)),
                        n, config, e_hint=e_hint)
        hi = find_state(replace(problem, family=with_param(family, name, a0 + h)),
                        n, config, e_hint=e_hint)
    except SolverError as exc:
        raise FoldProximityError(
            f"state n={n} lost across the stencil {name}={a0:g}+-{h:g} "
            "(fold proximity); trace the branch with the continuation module"
        ) from exc
    if lo.nodes != n or hi.nodes != n:  # pragma: no cover - find_state enforces n
        raise FoldProximityError("node count changed across the stencil")
    return (hi.energy - lo.energy) / (2.0 * h)


def _as_family(spec) -> PotentialFamily:
    return spec if isinstance(spec, PotentialFamily) else parse_potential(spec)


def _template_problem(family: PotentialFamily, *, d: int = 3, ell: int | None = 0,
                      parity: str | None = None, mass: float = 1.0) -> RadialProblem:
    if d == 1:
        return RadialProblem(d=1, parity=parity or "even", mass=mass, family=family)
    return RadialProblem(d=d, ell=ell if ell is not None else 0, mass=mass, family=family)


def check_theorem1(spec1, spec2, *, d: int = 3, ell: int | None = 0,
                   parity: str | None = None, mass: float = 1.0, n: int = 0,
                   config: SolverConfig | None = None) -> ComparisonReport:
    """Solve both problems on one shared grid and run the identity check.

    When the ordering hypotheses fail the report still carries both sides of
    the identity, but hypotheses_ok is false and no ordering claim is made.
    """
    config = config or SolverConfig()
    fam1 = _as_family(spec1)
    fam2 = _as_family(spec2)
    prob1 = _template_problem(fam1, d=d, ell=ell, parity=parity, mass=mass)
    prob2 = _template_problem(fam2, d=d, ell=ell, parity=parity, mass=mass)
    res1 = find_state(prob1, n, config)
    res2 = find_state(prob2, n, config)
    if config.grid is None and res1.grid != res2.grid:
        # re-solve on a shared grid so no interpolation enters the identity
        shared = _merge_grids(res1.grid, res2.grid)
        shared_config = replace(config, grid=shared)
        res1 = find_state(prob1, n, shared_config, e_hint=res1.energy)
        res2 = find_state(prob2, n, shared_config, e_hint=res2.energy)
    return comparison_identity(res1, res2)


def _merge_grids(g1, g2):
    from .radial import RadialGrid

    layout = "log-uniform" if "log-uniform" in (g1.layout, g2.layout) else "uniform"
    r_min = min(g1.r_min, g2.r_min)
    if layout == "log-uniform" and r_min <= 0.0:
        r_min = max(min(g for g in (g1.r_min, g2.r_min) if g > 0), 1e-12)
    return RadialGrid(layout, r_min, max(g1.r_max, g2.r_max),
                      max(g1.n_points, g2.n_points))


def check_theorem2(family, a_values, *, d: int = 3, ell: int | None = 0,
                   parity: str | None = None, mass: float = 1.0, n: int = 0,
                   config: SolverConfig | None = None,
                   sign_tol: float = 1e-8) -> Theorem2Report:
    """Check sign(E'(a)) against sign(dV/da) at every positive-energy point.

    Points with E < 0 fall outside the theorem hypothesis; they are kept in
    the report but exempt from the verdict.
    """
    config = config or SolverConfig()
    fam = _as_family(family)
    if fam.sweep_param is None:
        raise ValueError("family has no sweep parameter designated")
    a_values = [float(a) for a in a_values]
    if not a_values:
        raise ValueError("no sweep points given")

    probe = np.geomspace(1e-3, 50.0, 128)
    dv = np.asarray(eval_param_derivative(fam, probe))
    if np.all(dv >= -1e-14):
        direction = 1
    elif np.all(dv <= 1e-14):
        direction = -1
    else:
        raise ValueError("dV/da changes sign in r; the theorem does not apply")

    reports: list[DerivativeReport] = []
    exempt: list[int] = []
    warnings: list[str] = []
    hint = None
    for i, a in enumerate(a_values):
        problem = _template_problem(with_param(fam, fam.sweep_param, a),
                                    d=d, ell=ell, parity=parity, mass=mass)
        try:
            res = find_state(problem, n, config, e_hint=hint)
        except SolverError as exc:
            raise SolverError(
                f"sweep point {fam.sweep_param}={a:g} did not converge: {exc}"
            ) from exc
        hint = res.energy
        try:
            rep = hf_derivative(res)
        except FoldProximityError:
            rep = hf_derivative(res, de_fd=math.nan)
            warnings.append(f"finite-difference check unavailable at {a:g} (fold proximity)")
        reports.append(rep)
        if res.energy < 0.0:
            exempt.append(i)

    verdict = True
    for i, rep in enumerate(reports):
        if i in exempt:
            continue
        if direction > 0 and rep.de_hf < -sign_tol:
            verdict = False
        if direction < 0 and rep.de_hf > sign_tol:
            verdict = False
    return Theorem2Report(
        a_values=tuple(a_values), reports=tuple(reports),
        derivative_sign=direction, verdict=verdict, exempt=tuple(exempt),
        warnings=tuple(warnings),
    )
