"""Radial reduction of the Klein-Gordon equation and fixed-energy shooting.

The equation integrated here is

    -psi''(r) + (Q/r^2) psi(r) = ((E - V(r))^2 - m^2) psi(r)

with Q = (2l+d-1)(2l+d-3)/4 for d >= 2 and Q = 0 with parity boundary
conditions for d = 1. Everything at fixed trial energy is linear, so the
shoot is exact in structure; eigenvalues are located by the solver module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernel
from .potentials import PotentialFamily, eval_potential

__all__ = [
    "RadialProblem",
    "RadialGrid",
    "ShootResult",
    "angular_constant",
    "effective_L",
    "series_start",
    "integrate_at_energy",
]


def angular_constant(d: int, ell: int) -> float:
    """Q = (2l+d-1)(2l+d-3)/4, exact (the product is an integer or odd/4)."""
    if d < 2:
        raise ValueError("angular_constant requires d >= 2; d = 1 uses parity with Q = 0")
    if ell < 0:
        raise ValueError("angular quantum number must be nonnegative")
    return float(Fraction((2 * ell + d - 1) * (2 * ell + d - 3), 4))


def effective_L(d: int, ell: int) -> float:
    """Effective angular momentum L = l + (d-3)/2 with Q = L(L+1)."""
    if d < 2:
        raise ValueError("effective_L requires d >= 2")
    return ell + (d - 3) / 2.0


@dataclass(frozen=True)
class RadialProblem:
    """Dimension, channel, mass and potential: everything fixing the equation."""

    d: int
    mass: float
    family: PotentialFamily
    ell: int | None = None
    parity: str | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("spatial dimension must be >= 1")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.d == 1:
            if self.ell is not None:
                raise ValueError("d = 1 uses parity, not an angular quantum number")
            if self.parity not in ("even", "odd"):
                raise ValueError("d = 1 requires parity 'even' or 'odd'")
        else:
            if self.parity is not None:
                raise ValueError("parity applies to d = 1 only")
            if self.ell is None or self.ell < 0:
                raise ValueError("d >= 2 requires an angular quantum number l >= 0")

    @property
    def q(self) -> float:
        if self.d == 1:
            return 0.0
        return angular_constant(self.d, self.ell)

    @property
    def L(self) -> float:
        if self.d == 1:
            return 0.0
        return effective_L(self.d, self.ell)


@dataclass(frozen=True)
class RadialGrid:
    """Radial mesh: uniform or log-uniform between r_min and r_max."""

    layout: str
    r_min: float
    r_max: float
    n_points: int

    def __post_init__(self):
        if self.layout not in ("uniform", "log-uniform"):
            raise ValueError("layout must be 'uniform' or 'log-uniform'")
        if self.n_points < 200:
            raise ValueError("n_points must be >= 200")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.layout == "log-uniform" and self.r_min <= 0:
            raise ValueError("log-uniform layout requires r_min > 0")
        if self.r_min < 0:
            raise ValueError("r_min must be nonnegative")

    def nodes(self) -> np.ndarray:
        if self.layout == "uniform":
            return np.linspace(self.r_min, self.r_max, self.n_points)
        return np.geomspace(self.r_min, self.r_max, self.n_points)


@dataclass(frozen=True)
class ShootResult:
    """Two-sided integration at fixed trial energy, joined at the match point.

    ``wronskian`` is a scale-free characteristic value vanishing exactly at
    eigenvalues; ``mismatch`` is the kappa-scaled log-derivative jump.
    """

    psi: np.ndarray
    nodes: int
    mismatch: float
    match_index: int
    diverged: bool
    wronskian: float

    def __post_init__(self):
        if not self.diverged and self.nodes < 0:  # pragma: no cover - kernel guard
            raise ValueError("negative node count")


_EMPTY = np.zeros(0)


class ShootContext:
    """Per-(problem, grid) workspace: mesh plus the kernel's family handle.

    The kernel evaluates the potential itself (closed forms, or the passed
    table) so it can take fractional steps to the exact turning radius.
    """

    __slots__ = ("problem", "grid", "r", "v_nodes", "v_mids", "kind_code",
                 "pa", "pb", "tab_r", "tab_v", "q", "msq", "psi0", "dpsi0")

    def __init__(self, problem: RadialProblem, grid: RadialGrid):
        if problem.d > 1 and grid.r_min <= 0:
            raise ValueError("d > 1 requires r_min > 0")
        self.problem = problem
        self.grid = grid
        r = grid.nodes()
        self.r = r
        family = problem.family
        if family.kind == "coulomb" and r[0] == 0.0:
            raise ValueError("bare coulomb requires r_min > 0")
        self.kind_code = _kernel.KIND_CODES[family.kind]
        if family.kind == "tabulated":
            self.pa = 0.0
            self.pb = 0.0
            self.tab_r = np.array([p[0] for p in family.table], dtype=float)
            self.tab_v = np.array([p[1] for p in family.table], dtype=float)
        else:
            names = [k for k, _ in family.params]
            self.pa = family.param(names[0])
            self.pb = family.param(names[1]) if len(names) > 1 else 0.0
            self.tab_r = _EMPTY
            self.tab_v = _EMPTY
        self.v_nodes = np.asarray(eval_potential(family, r), dtype=float)
        self.v_mids = np.asarray(eval_potential(family, 0.5 * (r[:-1] + r[1:])),
                                 dtype=float)
        self.q = problem.q
        self.msq = problem.mass * problem.mass
        self.psi0, self.dpsi0 = series_start(problem, float(r[0]))

    def shoot(self, e: float) -> ShootResult:
        if not abs(e) < self.problem.mass:
            raise ValueError("trial energy must satisfy |E| < m for bound states")
        psi, nodes, mismatch, wron, j, diverged = _kernel.shoot(
            self.r, self.v_nodes, self.v_mids, self.kind_code, self.pa, self.pb,
            self.tab_r, self.tab_v, self.q, self.msq, float(e),
            self.psi0, self.dpsi0,
        )
        return ShootResult(psi=psi, nodes=int(nodes), mismatch=float(mismatch),
                           match_index=int(j), diverged=bool(diverged),
                           wronskian=float(wron))


def series_start(problem: RadialProblem, r0: float) -> tuple[float, float]:
    """Start values at the first grid node.

    d > 1: the regular small-r behaviour psi ~ r^(L+1); d = 1 takes the
    parity-forced values (1, 0) or (0, 1).
    """
    if problem.d == 1:
        if problem.parity == "even":
            return 1.0, 0.0
        return 0.0, 1.0
    if r0 <= 0:
        raise ValueError("d > 1 requires a positive first grid node")
    L = effective_L(problem.d, problem.ell)
    if L <= -1:  # pragma: no cover - unreachable for d >= 2, l >= 0
        raise ValueError("effective angular momentum below -1")
    return r0 ** (L + 1.0), (L + 1.0) * r0**L


def integrate_at_energy(problem: RadialProblem, e: float, grid: RadialGrid) -> ShootResult:
    """Shoot outward and inward at trial energy e and join at the match point."""
    return ShootContext(problem, grid).shoot(e)
