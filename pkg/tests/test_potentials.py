import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kgspectra import (
    PotentialError,
    RadialProblem,
    eval_param_derivative,
    eval_potential,
    format_potential,
    parse_potential,
    validate_admissible,
    with_param,
    with_sweep,
)

ALL_KINDS = ["coulomb:v=0.4", "cutoff-coulomb:v=0.5,a=1", "shell-cutoff-coulomb:v=0.5,a=1",
             "exponential:v=2,b=1", "square-well:v=1,R=2", "rational4:v=2"]


class TestParsing:
    def test_coulomb(self):
        fam = parse_potential("coulomb:v=0.4")
        assert fam.kind == "coulomb"
        assert fam.param("v") == 0.4

    def test_rational4_eq8_member(self):
        fam = parse_potential("rational4:v=2")
        assert fam.kind == "rational4"
        assert fam.param("v") == 2.0

    def test_negative_coupling_rejected(self):
        with pytest.raises(PotentialError, match="v=-1"):
            parse_potential("coulomb:v=-1")

    def test_unknown_kind(self):
        with pytest.raises(PotentialError, match="morse"):
            parse_potential("morse:v=1")

    def test_missing_parameter(self):
        with pytest.raises(PotentialError, match="a"):
            parse_potential("cutoff-coulomb:v=1")

    def test_duplicate_parameter(self):
        with pytest.raises(PotentialError, match="duplicate"):
            parse_potential("coulomb:v=1,v=2")

    def test_malformed_number(self):
        with pytest.raises(PotentialError, match="abc"):
            parse_potential("coulomb:v=abc")

    def test_unknown_parameter(self):
        with pytest.raises(PotentialError, match="zz"):
            parse_potential("coulomb:v=1,zz=2")

    def test_empty_spec(self):
        with pytest.raises(PotentialError):
            parse_potential("   ")

    @given(v=st.floats(1e-3, 1e3), a=st.floats(1e-3, 1e3))
    @settings(max_examples=60, deadline=None)
    def test_format_parse_round_trip(self, v, a):
        fam = parse_potential(f"cutoff-coulomb:v={v!r},a={a!r}")
        assert parse_potential(format_potential(fam)) == fam

    def test_round_trip_all_kinds(self):
        for spec in ALL_KINDS:
            fam = parse_potential(spec)
            assert parse_potential(format_potential(fam)) == fam


class TestEval:
    def test_cutoff_coulomb_at_origin(self):
        fam = parse_potential("cutoff-coulomb:v=0.007,a=0.2")
        assert eval_potential(fam, 0.0) == pytest.approx(-0.007 / 0.2, rel=1e-15)

    def test_rational4_at_origin_is_minus_two(self):
        assert eval_potential(parse_potential("rational4:v=2"), 0.0) == -2.0

    def test_exponential_at_origin_is_minus_two(self):
        assert eval_potential(parse_potential("exponential:v=2,b=1"), 0.0) == -2.0

    def test_negative_radius_rejected(self):
        with pytest.raises(PotentialError):
            eval_potential(parse_potential("exponential:v=2,b=1"), -0.5)

    def test_bare_coulomb_singular_at_zero(self):
        with pytest.raises(PotentialError):
            eval_potential(parse_potential("coulomb:v=0.4"), 0.0)

    def test_attractive_everywhere(self):
        rng = np.random.default_rng(11)
        rs = rng.uniform(0.0, 50.0, size=100)
        for spec in ALL_KINDS:
            fam = parse_potential(spec)
            pts = np.where(rs == 0, 1e-6, rs) if fam.kind == "coulomb" else rs
            assert np.all(np.asarray(eval_potential(fam, pts)) <= 0.0)

    def test_shell_cutoff_continuous_at_a(self):
        fam = parse_potential("shell-cutoff-coulomb:v=0.7,a=1.3")
        v_at = eval_potential(fam, 1.3)
        assert v_at == -0.7 / 1.3
        assert eval_potential(fam, 1.3 - 1e-12) == pytest.approx(v_at, abs=1e-12)
        assert eval_potential(fam, 1.3 + 1e-12) == pytest.approx(v_at, abs=1e-12)

    def test_vectorized_matches_scalar(self):
        fam = parse_potential("rational4:v=2")
        rs = np.linspace(0, 10, 7)
        vec = eval_potential(fam, rs)
        assert vec == pytest.approx([eval_potential(fam, float(r)) for r in rs])


class TestParamDerivative:
    def test_cutoff_coulomb_in_a_is_positive(self):
        fam = with_sweep(parse_potential("cutoff-coulomb:v=0.3,a=0.7"), "a")
        for r in (0.0, 0.5, 3.0, 40.0):
            assert eval_param_derivative(fam, r) == pytest.approx(0.3 / (r + 0.7) ** 2)
            assert eval_param_derivative(fam, r) > 0

    def test_coulomb_in_v(self):
        fam = with_sweep(parse_potential("coulomb:v=0.4"), "v")
        assert eval_param_derivative(fam, 2.0) == pytest.approx(-0.5)

    def test_square_well_in_v(self):
        fam = with_sweep(parse_potential("square-well:v=1.5,R=2"), "v")
        assert eval_param_derivative(fam, 1.0) == -1.0
        assert eval_param_derivative(fam, 3.0) == 0.0

    def test_sweep_unset(self):
        with pytest.raises(PotentialError, match="sweep"):
            eval_param_derivative(parse_potential("coulomb:v=0.4"), 1.0)

    def test_square_well_radius_not_differentiable(self):
        fam = with_sweep(parse_potential("square-well:v=1,R=2"), "R")
        with pytest.raises(PotentialError, match="differentiable"):
            eval_param_derivative(fam, 1.0)

    @given(
        spec=st.sampled_from([("cutoff-coulomb:v={p0},a={p1}", "a"),
                              ("cutoff-coulomb:v={p0},a={p1}", "v"),
                              ("exponential:v={p0},b={p1}", "v"),
                              ("exponential:v={p0},b={p1}", "b"),
                              ("coulomb:v={p0}", "v")]),
        p0=st.floats(0.1, 5.0), p1=st.floats(0.1, 5.0), r=st.floats(0.0, 50.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_matches_finite_difference(self, spec, p0, p1, r):
        text, name = spec
        fam = with_sweep(parse_potential(text.format(p0=repr(p0), p1=repr(p1))), name)
        if fam.kind == "coulomb":
            assume(r > 1e-3)
        h = 1e-6
        up = eval_potential(with_param(fam, name, fam.param(name) + h), r)
        dn = eval_potential(with_param(fam, name, fam.param(name) - h), r)
        fd = (up - dn) / (2 * h)
        exact = eval_param_derivative(fam, r)
        assert abs(exact - fd) <= 1e-8 * (1 + abs(exact))


class TestTabulated:
    def test_load_eval_and_clamp(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("0.0,-2.0\n1.0,-1.0\n2.0,-0.25\n")
        fam = parse_potential(f"tabulated:file={path}")
        assert eval_potential(fam, 0.5) == pytest.approx(-1.5)
        assert eval_potential(fam, 2.0) == -0.25
        assert eval_potential(fam, 5.0) == 0.0  # clamped beyond the last sample
        assert parse_potential(format_potential(fam)) == fam

    def test_no_derivative(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("0.0,-2.0\n1.0,-1.0\n")
        fam = with_sweep(parse_potential(f"tabulated:file={path}"), None)
        with pytest.raises(PotentialError, match="derivative"):
            eval_param_derivative(fam, 0.5)

    def test_nonincreasing_radii_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,-2.0\n0.0,-1.0\n")
        with pytest.raises(PotentialError, match="increasing"):
            parse_potential(f"tabulated:file={path}")

    def test_positive_sample_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,-2.0\n1.0,0.5\n")
        with pytest.raises(PotentialError, match="positive"):
            parse_potential(f"tabulated:file={path}")

    def test_missing_file(self):
        with pytest.raises(PotentialError, match="not found"):
            parse_potential("tabulated:file=/nonexistent/t.csv")


class TestAdmissibility:
    def test_coulomb_below_reality_threshold(self):
        # oracle condition: (L + 1/2)^2 > v^2, i.e. v < 1/2 for d=3, l=0
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.4"))
        assert validate_admissible(prob).ok

    def test_coulomb_above_reality_threshold(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0, family=parse_potential("coulomb:v=0.6"))
        report = validate_admissible(prob)
        assert not report.ok
        assert any("fall to center" in f for f in report.failures)

    def test_exponential_accepted(self):
        prob = RadialProblem(d=3, ell=0, mass=1.0,
                             family=parse_potential("exponential:v=2,b=1"))
        assert validate_admissible(prob).ok

    def test_higher_channel_raises_threshold(self):
        # v = 0.6 is fine for l = 1 where L + 1/2 = 3/2
        prob = RadialProblem(d=3, ell=1, mass=1.0, family=parse_potential("coulomb:v=0.6"))
        assert validate_admissible(prob).ok
