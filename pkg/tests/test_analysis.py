import math

import numpy as np
import pytest
from scipy.integrate import simpson

import coulomb_oracle
from kgspectra import (
    FoldProximityError,
    RadialGrid,
    RadialProblem,
    SolverConfig,
    check_theorem1,
    check_theorem2,
    comparison_identity,
    expectation,
    fd_derivative,
    find_state,
    hf_derivative,
    parse_potential,
    weight_function,
    with_sweep,
)
from kgspectra.eigensolve import EigenResult


class TestWeightFunction:
    def test_all_terms_vanish(self):
        fam = parse_potential("square-well:v=1e-9,R=1")
        assert weight_function(0.0, 0.0, fam, fam, 5.0) == pytest.approx(0.0, abs=1e-8)

    def test_positive_under_hypotheses(self):
        v1 = parse_potential("rational4:v=2")
        v2 = parse_potential("exponential:v=2,b=1")
        rng = np.random.default_rng(3)
        r = rng.uniform(0, 30, 50)
        w = weight_function(0.2, 0.9, v1, v2, r)
        assert np.all(w >= 0)

    def test_paper_value_at_origin(self):
        # 0.7464 + 0.7542 + 2 + 2
        v1 = parse_potential("rational4:v=2")
        v2 = parse_potential("exponential:v=2,b=1")
        assert weight_function(0.7464, 0.7542, v1, v2, 0.0) == pytest.approx(5.5006)


class TestComparisonIdentity:
    def test_identical_states_give_zero(self, eq8_states):
        res = eq8_states["rational4"]
        rep = comparison_identity(res, res)
        assert rep.lhs == 0.0
        assert rep.rhs == pytest.approx(0.0, abs=1e-12)
        assert rep.residual <= 1e-12
        assert rep.ordering_ok

    def test_eq8_pair(self, eq8_states):
        rep = comparison_identity(eq8_states["rational4"], eq8_states["exponential"])
        assert rep.residual <= 1e-6
        assert rep.ordering_ok
        assert rep.hypotheses_ok
        assert rep.w_min >= 0.0

    def test_eq8_rhs_nonnegative(self, eq8_states):
        # V2 - V1 >= 0 pointwise (series denominator bounds e^r below),
        # W >= 0, node-free cross product >= 0
        v1 = parse_potential("rational4:v=2")
        v2 = parse_potential("exponential:v=2,b=1")
        r = np.linspace(0, 60, 5000)
        from kgspectra import eval_potential

        assert np.all(np.asarray(eval_potential(v2, r)) - np.asarray(eval_potential(v1, r)) >= -1e-14)
        rep = comparison_identity(eq8_states["rational4"], eq8_states["exponential"])
        assert rep.rhs >= 0.0

    def test_unnormalized_input_rejected(self, eq8_states):
        res = eq8_states["rational4"]
        broken = EigenResult(energy=res.energy, psi=2.5 * res.psi, nodes=res.nodes,
                             mismatch_residual=res.mismatch_residual,
                             norm_error=res.norm_error, problem=res.problem,
                             config=res.config, grid=res.grid, r=res.r)
        with pytest.raises(ValueError, match="normalized"):
            comparison_identity(broken, res)

    def test_excited_pair_identity_without_hypotheses(self):
        # the identity is algebraic: it holds for excited states too,
        # while hypotheses_ok correctly reports the node-free premise failed
        fam = parse_potential("coulomb:v=0.4")
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
        grid = RadialGrid("log-uniform", 1e-12, 120.0, 6000)
        cfg = SolverConfig(grid=grid)
        res1 = find_state(prob, 1, cfg)
        res2 = find_state(RadialProblem(d=3, ell=0, mass=1.0,
                                        family=parse_potential("coulomb:v=0.3")), 1, cfg)
        rep = comparison_identity(res2, res1)
        assert rep.residual <= 1e-6
        assert not rep.hypotheses_ok
        assert any("node-free" in w for w in rep.warnings)


class TestExpectation:
    def test_unit_function(self, eq8_states):
        assert expectation(eq8_states["exponential"], lambda r: np.ones_like(r)) == \
            pytest.approx(1.0, abs=1e-8)

    def test_constant_linearity(self, eq8_states):
        c = 3.7
        assert expectation(eq8_states["exponential"], lambda r: np.full_like(r, c)) == \
            pytest.approx(c, abs=1e-7)

    def test_potential_mean_matches_refined_quadrature(self):
        # self-convergence oracle: re-solve on a 10x finer mesh of the same
        # layout and compare the two Simpson integrals of <V>
        from kgspectra import eval_potential

        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        res = find_state(prob, 0)
        fam = prob.family
        f = lambda r: np.asarray(eval_potential(fam, np.maximum(r, 1e-300)))
        coarse = expectation(res, f)
        fine_grid = RadialGrid(res.grid.layout, res.grid.r_min, res.grid.r_max,
                               10 * res.grid.n_points)
        res10 = find_state(prob, 0, SolverConfig(grid=fine_grid))
        refined = expectation(res10, f)
        assert abs(coarse - refined) <= 1e-6 * (1 + abs(refined))

    def test_nonfinite_integrand_rejected(self, eq8_states):
        with pytest.raises(ValueError, match="finite"):
            expectation(eq8_states["exponential"],
                        lambda r: np.where(r > 1.0, np.inf, 1.0))


class TestHellmannFeynman:
    def test_zero_parameter_derivative_gives_zero_slope(self, eq8_states, monkeypatch):
        import kgspectra.analysis as analysis

        res = eq8_states["exponential"]
        fam = with_sweep(res.problem.family, "v")
        monkeypatch.setattr(analysis, "eval_param_derivative",
                            lambda family, r: np.zeros_like(np.asarray(r)))
        rep = analysis.hf_derivative(res, fam, de_fd=0.0)
        assert rep.de_hf == 0.0
        assert rep.va_mean == 0.0

    def test_cutoff_coulomb_slope_positive_and_fd_checked(self):
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.5,a=1"), "a")
        prob = RadialProblem(d=1, parity="even", mass=1.0, family=fam)
        res = find_state(prob, 0)
        rep = hf_derivative(res)
        assert res.energy >= 0
        assert rep.de_hf >= 0
        assert rep.agreement <= 1e-3
        assert rep.denominator > 0

    def test_degenerate_denominator_rejected(self, eq8_states):
        res = eq8_states["exponential"]
        fam = with_sweep(res.problem.family, "v")
        rho = res.psi * res.psi
        from kgspectra import eval_potential

        v_mean = simpson(np.asarray(eval_potential(fam, res.r)) * rho, x=res.r)
        fake = EigenResult(energy=float(v_mean), psi=res.psi, nodes=res.nodes,
                           mismatch_residual=0.0, norm_error=res.norm_error,
                           problem=res.problem, config=res.config,
                           grid=res.grid, r=res.r)
        with pytest.raises(ZeroDivisionError):
            hf_derivative(fake, fam, de_fd=0.0)


class TestFiniteDifference:
    def test_inert_parameter_gives_zero(self, monkeypatch):
        import kgspectra.analysis as analysis

        fam = with_sweep(parse_potential("exponential:v=2,b=1"), "v")
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
        monkeypatch.setattr(analysis, "with_param", lambda family, name, value: family)
        slope = analysis.fd_derivative(prob, 0, 1e-4)
        assert abs(slope) <= 1e-8

    def test_zero_step_rejected(self):
        fam = with_sweep(parse_potential("exponential:v=2,b=1"), "v")
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
        with pytest.raises(ValueError, match="positive"):
            fd_derivative(prob, 0, 0.0)

    def test_step_crossing_zero_rejected(self):
        fam = with_sweep(parse_potential("exponential:v=0.5,b=1"), "v")
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
        with pytest.raises(ValueError, match="positivity"):
            fd_derivative(prob, 0, 0.6)

    def test_coulomb_coupling_slope_matches_oracle(self):
        fam = with_sweep(parse_potential("coulomb:v=0.4"), "v")
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
        slope = fd_derivative(prob, 0, 4e-5)
        assert abs(slope - coulomb_oracle.denergy_dv(0.4, 0, 0)) <= 1e-5

    def test_fold_proximity_raises(self):
        # stencil pushed across the existence boundary of the ground level
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.5,a=0.0889"), "a")
        prob = RadialProblem(d=1, parity="even", mass=1.0, family=fam)
        with pytest.raises(FoldProximityError, match="continuation"):
            fd_derivative(prob, 0, 0.02)


class TestTheorem1Check:
    def test_eq8_pair(self):
        rep = check_theorem1("rational4:v=2", "exponential:v=2,b=1", d=3, ell=0)
        assert rep.ordering_ok and rep.hypotheses_ok
        assert rep.residual <= 1e-6

    def test_same_spec_trivial(self):
        rep = check_theorem1("exponential:v=2,b=1", "exponential:v=2,b=1", d=3, ell=0)
        assert rep.ordering_ok
        assert rep.residual <= 1e-12

    def test_ordered_couplings_order_energies(self):
        rep = check_theorem1("exponential:v=3,b=1", "exponential:v=2,b=1", d=3, ell=0)
        if rep.hypotheses_ok:
            assert rep.ordering_ok

    def test_crossing_potentials_report_no_claim(self):
        rep = check_theorem1("square-well:v=0.5,R=2", "cutoff-coulomb:v=0.5,a=0.5",
                             d=3, ell=0)
        assert not rep.hypotheses_ok
        assert any("ordered" in w for w in rep.warnings)


class TestTheorem2Check:
    def test_coupling_sweep_slopes_nonpositive(self):
        fam = with_sweep(parse_potential("coulomb:v=0.2"), "v")
        rep = check_theorem2(fam, [0.1, 0.2, 0.3, 0.4], d=3, ell=0)
        assert rep.derivative_sign == -1
        assert rep.verdict
        assert all(r.de_hf <= 1e-8 for r in rep.reports)

    def test_cutoff_sweep_slopes_nonnegative(self):
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.5,a=1"), "a")
        rep = check_theorem2(fam, [0.5, 1.0, 2.0], d=1, ell=None, parity="even")
        assert rep.derivative_sign == 1
        assert rep.verdict
        assert all(r.de_hf >= -1e-8 for r in rep.reports)

    def test_single_point_vacuous(self):
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.5,a=1"), "a")
        rep = check_theorem2(fam, [1.0], d=1, ell=None, parity="even")
        assert rep.verdict

    def test_negative_energy_points_exempt(self):
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.5,a=1"), "a")
        rep = check_theorem2(fam, [0.12, 0.5], d=1, ell=None, parity="even")
        assert 0 in rep.exempt          # E(0.12) < 0: outside the hypothesis
        assert 1 not in rep.exempt
        assert rep.verdict


class TestProperties:
    def test_hf_fd_agreement_random_draws(self):
        rng = np.random.default_rng(42)
        checked = 0
        attempts = 0
        while checked < 5 and attempts < 30:
            attempts += 1
            kind = rng.choice(["cutoff-coulomb", "exponential", "square-well"])
            if kind == "cutoff-coulomb":
                spec = f"cutoff-coulomb:v={rng.uniform(0.3, 0.8):.4f},a={rng.uniform(0.5, 3):.4f}"
                sweep = rng.choice(["v", "a"])
            elif kind == "exponential":
                spec = f"exponential:v={rng.uniform(1.0, 2.5):.4f},b={rng.uniform(0.7, 1.5):.4f}"
                sweep = rng.choice(["v", "b"])
            else:
                spec = f"square-well:v={rng.uniform(0.8, 2.0):.4f},R={rng.uniform(1.0, 3.0):.4f}"
                sweep = "v"
            fam = with_sweep(parse_potential(spec), sweep)
            prob = RadialProblem(d=3, ell=0, mass=1.0, family=fam)
            try:
                res = find_state(prob, 0)
            except Exception:
                continue
            if res.energy < 0:
                continue
            rep = hf_derivative(res)
            assert rep.agreement <= 1e-3, spec
            checked += 1
        assert checked == 5

    def test_theorem1_ordering_random_pairs(self):
        rng = np.random.default_rng(7)
        checked = 0
        attempts = 0
        while checked < 5 and attempts < 30:
            attempts += 1
            b = rng.uniform(0.7, 1.3)
            v2 = rng.uniform(0.8, 2.0)
            v1 = v2 + rng.uniform(0.1, 1.0)
            r1 = find_state(RadialProblem(d=3, ell=0, mass=1.0,
                            family=parse_potential(f"exponential:v={v1:.5f},b={b:.5f}")), 0)
            r2 = find_state(RadialProblem(d=3, ell=0, mass=1.0,
                            family=parse_potential(f"exponential:v={v2:.5f},b={b:.5f}")), 0)
            if r1.energy < 0 or r2.energy < 0:
                continue
            assert r1.energy <= r2.energy
            checked += 1
        assert checked == 5
