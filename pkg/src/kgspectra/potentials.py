"""Attractive central potential families and their parameter derivatives.

Every family is the time component of a four-vector coupling: V(r) <= 0,
V -> 0 as r -> infinity, all couplings strictly positive. Units are
m = c = hbar = 1 (couplings dimensionless, lengths in 1/m).

Families are immutable; evaluation works on scalars and numpy arrays alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "PotentialFamily",
    "PotentialError",
    "AdmissibilityReport",
    "parse_potential",
    "format_potential",
    "eval_potential",
    "eval_param_derivative",
    "validate_admissible",
    "with_param",
    "with_sweep",
    "FAMILY_PARAMS",
]


class PotentialError(ValueError):
    """Malformed potential spec or invalid evaluation request."""


# Required parameter names per family kind, in canonical order.
FAMILY_PARAMS: dict[str, tuple[str, ...]] = {
    "coulomb": ("v",),
    "cutoff-coulomb": ("v", "a"),
    "shell-cutoff-coulomb": ("v", "a"),
    "exponential": ("v", "b"),
    "square-well": ("v", "R"),
    "rational4": ("v",),
    "tabulated": (),
}

# Kinds whose small-r behaviour is -v/r (subject to the reality condition).
_COULOMB_SINGULAR = frozenset({"coulomb"})


@dataclass(frozen=True)
class PotentialFamily:
    """A parametrized attractive potential V(r; params).

    ``params`` is a tuple of (name, value) pairs in canonical order so the
    object stays hashable and comparable. ``sweep_param`` designates the
    parameter swept in monotonicity checks and continuation runs.
    ``table`` holds (r, V) samples for the tabulated kind; ``source`` keeps
    the file path it was read from.
    """

    kind: str
    params: tuple[tuple[str, float], ...]
    sweep_param: str | None = None
    table: tuple[tuple[float, float], ...] | None = None
    source: str | None = None

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(f"family {self.kind!r} has no parameter {name!r}")

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def __str__(self) -> str:
        return format_potential(self)


def with_param(family: PotentialFamily, name: str, value: float) -> PotentialFamily:
    """Return a copy of ``family`` with parameter ``name`` set to ``value``."""
    if name not in [k for k, _ in family.params]:
        raise PotentialError(f"family {family.kind!r} has no parameter {name!r}")
    if not (value > 0.0):
        raise PotentialError(f"parameter {name}={value!r} must be strictly positive")
    new_params = tuple((k, value if k == name else v) for k, v in family.params)
    return replace(family, params=new_params)


def with_sweep(family: PotentialFamily, name: str | None) -> PotentialFamily:
    """Return a copy of ``family`` with the sweep parameter designated."""
    if name is not None and family.kind != "tabulated":
        if name not in FAMILY_PARAMS[family.kind]:
            raise PotentialError(
                f"family {family.kind!r} has no parameter {name!r} to sweep"
            )
    return replace(family, sweep_param=name)


def _parse_float(token: str, text: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise PotentialError(f"malformed number {token!r} in spec {text!r}") from None
    if not math.isfinite(value):
        raise PotentialError(f"non-finite value {token!r} in spec {text!r}")
    return value


def _load_table(path: str) -> tuple[tuple[float, float], ...]:
    p = Path(path)
    if not p.is_file():
        raise PotentialError(f"tabulated potential file not found: {path}")
    rows: list[tuple[float, float]] = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise PotentialError(f"{path}:{lineno}: expected two columns r,V")
        r = _parse_float(parts[0].strip(), line)
        v = _parse_float(parts[1].strip(), line)
        if r < 0:
            raise PotentialError(f"{path}:{lineno}: negative radius {r}")
        if v > 0:
            raise PotentialError(f"{path}:{lineno}: positive potential sample {v}")
        rows.append((r, v))
    if len(rows) < 2:
        raise PotentialError(f"{path}: need at least two (r, V) samples")
    radii = [r for r, _ in rows]
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise PotentialError(f"{path}: radii must be strictly increasing")
    return tuple(rows)


def parse_potential(spec: str) -> PotentialFamily:
    """Parse ``kind:key=value,key=value,...`` into a PotentialFamily.

    All built-in parameters are required and must be strictly positive.
    The tabulated kind takes ``file=PATH`` pointing at a two-column CSV.
    """
    text = spec.strip()
    if not text:
        raise PotentialError("empty potential spec")
    kind, sep, rest = text.partition(":")
    kind = kind.strip()
    if kind not in FAMILY_PARAMS:
        raise PotentialError(f"unknown potential kind {kind!r}")

    pairs: dict[str, str] = {}
    if sep:
        for token in rest.split(","):
            if not token:
                raise PotentialError(f"empty parameter token in spec {text!r}")
            key, eq, raw = token.partition("=")
            if not eq or not key or not raw:
                raise PotentialError(f"malformed parameter token {token!r}")
            if key in pairs:
                raise PotentialError(f"duplicate parameter {key!r} in spec {text!r}")
            pairs[key] = raw

    if kind == "tabulated":
        if set(pairs) != {"file"}:
            raise PotentialError("tabulated spec must be exactly tabulated:file=PATH")
        path = pairs["file"]
        return PotentialFamily(kind=kind, params=(), table=_load_table(path), source=path)

    required = FAMILY_PARAMS[kind]
    missing = [name for name in required if name not in pairs]
    if missing:
        raise PotentialError(f"missing parameter(s) {missing} for kind {kind!r}")
    unknown = [name for name in pairs if name not in required]
    if unknown:
        raise PotentialError(f"unknown parameter(s) {unknown} for kind {kind!r}")

    values = {}
    for name in required:
        value = _parse_float(pairs[name], text)
        if value <= 0.0:
            raise PotentialError(
                f"parameter {name}={pairs[name]} must be strictly positive"
            )
        values[name] = value
    params = tuple((name, values[name]) for name in required)
    return PotentialFamily(kind=kind, params=params)


def format_potential(family: PotentialFamily) -> str:
    """Canonical spec text; parse(format(f)) reproduces f exactly."""
    if family.kind == "tabulated":
        if family.source is None:
            raise PotentialError("tabulated family has no source path to format")
        return f"tabulated:file={family.source}"
    body = ",".join(f"{k}={np.format_float_positional(v, trim='-')}" for k, v in family.params)
    return f"{family.kind}:{body}"


def _as_array(r) -> tuple[np.ndarray, bool]:
    arr = np.asarray(r, dtype=float)
    return arr, arr.ndim == 0


def eval_potential(family: PotentialFamily, r):
    """Evaluate V(r). Accepts scalars or arrays; r >= 0 (r > 0 for coulomb)."""
    arr, scalar = _as_array(r)
    if np.any(arr < 0):
        raise PotentialError("radius must be nonnegative")
    kind = family.kind
    if kind == "coulomb":
        if np.any(arr == 0):
            raise PotentialError("bare coulomb potential is singular at r = 0")
        out = -family.param("v") / arr
    elif kind == "cutoff-coulomb":
        out = -family.param("v") / (arr + family.param("a"))
    elif kind == "shell-cutoff-coulomb":
        v, a = family.param("v"), family.param("a")
        out = np.where(arr < a, -v / a, -v / np.maximum(arr, a))
    elif kind == "exponential":
        out = -family.param("v") * np.exp(-arr / family.param("b"))
    elif kind == "square-well":
        v, radius = family.param("v"), family.param("R")
        out = np.where(arr < radius, -v, 0.0)
    elif kind == "rational4":
        denom = 1.0 + arr + arr**2 / 2.0 + arr**3 / 6.0 + arr**4 / 24.0
        out = -family.param("v") / denom
    elif kind == "tabulated":
        rs = np.array([p[0] for p in family.table])
        vs = np.array([p[1] for p in family.table])
        # linear interpolation, clamped to 0 beyond the last sample
        out = np.interp(arr, rs, vs, right=0.0)
    else:  # pragma: no cover - registry and dispatch kept in sync
        raise PotentialError(f"unknown potential kind {kind!r}")
    return float(out) if scalar else out


def eval_param_derivative(family: PotentialFamily, r):
    """Analytic dV/dp for the designated sweep parameter p.

    For any family swept in its overall coupling v this is the shape
    f(r) = V(r)/v. Tabulated families carry no derivative.
    """
    if family.kind == "tabulated":
        raise PotentialError("tabulated families have no parameter derivative")
    name = family.sweep_param
    if name is None:
        raise PotentialError("family has no sweep parameter designated")
    arr, scalar = _as_array(r)
    if np.any(arr < 0):
        raise PotentialError("radius must be nonnegative")
    kind = family.kind

    if name == "v":
        # dV/dv = V/v for every built-in: V = v * f(r)
        if kind == "coulomb" and np.any(arr == 0):
            raise PotentialError("bare coulomb potential is singular at r = 0")
        out = np.asarray(eval_potential(family, arr)) / family.param("v")
    elif kind == "cutoff-coulomb" and name == "a":
        v, a = family.param("v"), family.param("a")
        out = v / (arr + a) ** 2
    elif kind == "shell-cutoff-coulomb" and name == "a":
        v, a = family.param("v"), family.param("a")
        out = np.where(arr < a, v / a**2, 0.0)
    elif kind == "exponential" and name == "b":
        v, b = family.param("v"), family.param("b")
        out = -v * np.exp(-arr / b) * arr / b**2
    elif kind == "square-well" and name == "R":
        raise PotentialError(
            "square-well is not differentiable in R (step edge); sweep v instead"
        )
    else:  # pragma: no cover - with_sweep validates names
        raise PotentialError(f"no analytic derivative for {kind!r} in {name!r}")
    return float(out) if scalar else np.asarray(out, dtype=float)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the pre-solve potential checks."""

    ok: bool
    failures: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def validate_admissible(problem) -> AdmissibilityReport:
    """Check a RadialProblem against the attractive-potential premises.

    Accepts iff V <= 0 on a sample grid, V decays towards the grid end, and
    Coulomb-singular tails satisfy the reality condition v < L + 1/2.
    """
    from .radial import effective_L  # local import to avoid a cycle

    family = problem.family
    failures: list[str] = []

    r_lo = 1e-6 if family.kind in _COULOMB_SINGULAR else 0.0
    sample = np.geomspace(max(r_lo, 1e-6), 60.0, 256)
    if family.kind not in _COULOMB_SINGULAR:
        sample = np.concatenate(([0.0], sample))
    values = np.asarray(eval_potential(family, sample))
    if np.any(values > 1e-12):
        failures.append("potential is not attractive: V > 0 somewhere on the sample grid")
    tail = abs(values[-1])
    if tail > 0.1 * problem.mass:
        failures.append(
            f"potential does not decay: |V({sample[-1]:g})| = {tail:g} exceeds 0.1*m"
        )
    if family.kind in _COULOMB_SINGULAR:
        if problem.d == 1:
            failures.append("bare coulomb in d=1 is singular at the parity point r=0")
        else:
            L = effective_L(problem.d, problem.ell)
            v = family.param("v")
            if not (v < L + 0.5):
                failures.append(
                    f"coulomb coupling v={v:g} >= L+1/2 = {L + 0.5:g}: "
                    "no regular solution (fall to center)"
                )
    return AdmissibilityReport(ok=not failures, failures=tuple(failures))
