import numpy as np
import pytest

from kgspectra import RadialProblem, SolverConfig, find_state, parse_potential


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Trigger the jit compile once so individual tests time only physics."""
    prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("exponential:v=2,b=1"))
    find_state(prob, 0, SolverConfig())


@pytest.fixture(scope="session")
def eq8_states():
    """Ground states of the two explicitly compared potentials (d=3, m=1)."""
    out = {}
    for key, spec in [("rational4", "rational4:v=2"), ("exponential", "exponential:v=2,b=1")]:
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential(spec))
        out[key] = find_state(prob, 0)
    return out
