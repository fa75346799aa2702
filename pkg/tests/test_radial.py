import math

import numpy as np
import pytest

import coulomb_oracle
from kgspectra import (
    RadialGrid,
    RadialProblem,
    angular_constant,
    effective_L,
    integrate_at_energy,
    parse_potential,
    resolve_grid,
    series_start,
)


class TestAngularConstant:
    @pytest.mark.parametrize("d,ell,q", [(3, 0, 0.0), (3, 1, 2.0), (5, 0, 2.0)])
    def test_values(self, d, ell, q):
        assert angular_constant(d, ell) == q

    def test_d1_rejected(self):
        with pytest.raises(ValueError):
            angular_constant(1, 0)

    def test_equals_L_times_L_plus_one(self):
        for d in range(2, 13):
            for ell in range(0, 11):
                L = effective_L(d, ell)
                assert angular_constant(d, ell) == L * (L + 1)


class TestEffectiveL:
    def test_three_dimensions_is_identity(self):
        for ell in range(6):
            assert effective_L(3, ell) == ell

    def test_values(self):
        assert effective_L(5, 0) == 1.0
        assert effective_L(2, 0) == -0.5


class TestProblemValidation:
    def test_d1_requires_parity(self):
        with pytest.raises(ValueError):
            RadialProblem(d=1, mass=1.0, family=parse_potential("exponential:v=1,b=1"))

    def test_d1_rejects_ell(self):
        with pytest.raises(ValueError):
            RadialProblem(d=1, parity="even", ell=0, mass=1.0,
                          family=parse_potential("exponential:v=1,b=1"))

    def test_d3_rejects_parity(self):
        with pytest.raises(ValueError):
            RadialProblem(d=3, ell=0, parity="even", mass=1.0,
                          family=parse_potential("exponential:v=1,b=1"))

    def test_d1_q_is_zero(self):
        prob = RadialProblem(d=1, parity="even", mass=1.0,
                             family=parse_potential("exponential:v=1,b=1"))
        assert prob.q == 0.0


class TestGrid:
    def test_log_layout_needs_positive_start(self):
        with pytest.raises(ValueError):
            RadialGrid("log-uniform", 0.0, 40.0, 4000)

    def test_minimum_points(self):
        with pytest.raises(ValueError):
            RadialGrid("uniform", 0.0, 40.0, 100)

    def test_nodes_strictly_increasing(self):
        for grid in (RadialGrid("uniform", 0.0, 40.0, 500),
                     RadialGrid("log-uniform", 1e-9, 40.0, 500)):
            r = grid.nodes()
            assert np.all(np.diff(r) > 0)
            assert r[0] == grid.r_min and r[-1] == grid.r_max


class TestSeriesStart:
    def test_s_wave(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        assert series_start(prob, 1e-4) == (1e-4, 1.0)

    def test_p_wave(self):
        prob = RadialProblem(d=3, ell=1, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        psi0, dpsi0 = series_start(prob, 1e-4)
        assert psi0 == pytest.approx(1e-8)
        assert dpsi0 == pytest.approx(2e-4)

    def test_parity_values(self):
        fam = parse_potential("exponential:v=1,b=1")
        even = RadialProblem(d=1, parity="even", mass=1.0, family=fam)
        odd = RadialProblem(d=1, parity="odd", mass=1.0, family=fam)
        assert series_start(even, 0.0) == (1.0, 0.0)
        assert series_start(odd, 0.0) == (0.0, 1.0)


def _default_grid(prob, r_max=40.0):
    return resolve_grid(prob, r_max)


class TestIntegrateAtEnergy:
    def test_free_limit_has_no_root(self):
        # v -> 0 surrogate: no bound state, mismatch stays away from zero
        prob = RadialProblem(d=3, ell=0, mass=1.0,
                             family=parse_potential("square-well:v=1e-12,R=2"))
        res = integrate_at_energy(prob, 0.5, _default_grid(prob))
        assert res.nodes == 0
        assert abs(res.mismatch) > 0.5
        assert not res.diverged

    def test_coulomb_mismatch_vanishes_at_oracle_energy(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        e = coulomb_oracle.energy(0.4, 0, 0)  # 2/sqrt(5)
        res = integrate_at_energy(prob, e, resolve_grid(prob, 60.0))
        assert abs(res.mismatch) < 1e-6

    def test_node_count_between_first_two_levels(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        e_mid = 0.5 * (coulomb_oracle.energy(0.4, 0, 0) + coulomb_oracle.energy(0.4, 0, 1))
        res = integrate_at_energy(prob, e_mid, resolve_grid(prob, 60.0))
        assert res.nodes == 1

    def test_energy_window_enforced(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        with pytest.raises(ValueError):
            integrate_at_energy(prob, 1.5, _default_grid(prob))

    def test_interdimensional_invariance(self):
        # (d, l) and (d-2, l+1) share Q: identical equation, identical mismatch
        fam = parse_potential("coulomb:v=0.3")
        p5 = RadialProblem(d=5, ell=0, mass=1.0, family=fam)
        p3 = RadialProblem(d=3, ell=1, mass=1.0, family=fam)
        grid = resolve_grid(p5, 40.0)
        for e in (0.2, 0.6, 0.9):
            m5 = integrate_at_energy(p5, e, grid).mismatch
            m3 = integrate_at_energy(p3, e, grid).mismatch
            assert abs(m5 - m3) <= 1e-10

    def test_node_count_nondecreasing_in_energy(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0,
                             family=parse_potential("exponential:v=2,b=1"))
        grid = _default_grid(prob)
        counts = [integrate_at_energy(prob, float(e), grid).nodes
                  for e in np.linspace(-0.999, 0.999, 200)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_mismatch_stable_under_grid_doubling(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0,
                             family=parse_potential("exponential:v=2,b=1"))
        g1 = RadialGrid("uniform", 1e-6, 40.0, 4000)
        g2 = RadialGrid("uniform", 1e-6, 40.0, 8000)
        for e in (0.3, 0.7542):
            m1 = integrate_at_energy(prob, e, g1).mismatch
            m2 = integrate_at_energy(prob, e, g2).mismatch
            assert abs(m1 - m2) <= 1e-6

    def test_wavefunction_follows_series_start(self):
        prob = RadialProblem(d=3, ell=1, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        grid = resolve_grid(prob, 40.0)
        res = integrate_at_energy(prob, 0.97, grid)
        r = grid.nodes()
        psi0, _ = series_start(prob, float(r[0]))
        assert res.psi[0] == pytest.approx(psi0)
