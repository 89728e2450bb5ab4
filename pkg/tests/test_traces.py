import math

import numpy as np
import pytest
from scipy import integrate

from focklab import traces as tr
from focklab.symbols import Phase, SwitchProfile, tent_bump
from focklab.traces import (
    Arena,
    PairSpec,
    commutator_trace,
    conjugated_symbol_expansion,
    cross_term_traces,
    helton_howe_trace,
    inner_integral_check,
    kubo_integral_direct,
    kubo_normalization,
    parse_polynomial,
    poisson_bracket_integral,
    switch_area_identity,
)

STEP = SwitchProfile("step")
FAST = (16, 32, 48)   # small schedule for module-level tests


class TestKuboIntegral:
    def test_value(self):
        v = kubo_integral_direct(48)
        assert abs(v - (-1j / (2 * math.pi))) <= 1e-6

    def test_real_part_vanishes(self):
        assert abs(kubo_integral_direct(48).real) <= 1e-10

    def test_normalization_selftest(self):
        got, closed = kubo_normalization(48)
        # independent series evaluation: expanding the coupling
        # exponential, only the constant term survives either Gaussian
        # integral, so the series sums to pi^2 / pi^3
        series = math.pi ** 2 / math.pi ** 3
        assert closed == pytest.approx(series, rel=1e-15)
        assert got == pytest.approx(series, abs=1e-10)


class TestSwitchArea:
    @pytest.mark.parametrize("prof", [
        SwitchProfile("step"), SwitchProfile("linear-ramp", 1.0),
        SwitchProfile("smooth-erf", 0.7), SwitchProfile("smooth-cubic", 1.2),
    ], ids=lambda p: p.kind)
    @pytest.mark.parametrize("t", [0.0, 1.0, -2.0, 0.731])
    def test_identity(self, prof, t):
        assert switch_area_identity(prof, t) == pytest.approx(t, abs=1e-10)

    def test_ramp_piecewise_oracle(self):
        # piecewise-linear integration oracle for the ramp at t = -2
        prof = SwitchProfile("linear-ramp", 1.0)
        oracle, _ = integrate.quad(
            lambda x: float(prof(x - 2.0)) - float(prof(x)), -6, 6,
            points=[-3, -1, 1, 3], limit=200, epsabs=1e-13)
        got = switch_area_identity(prof, -2.0)
        assert got == pytest.approx(oracle, abs=1e-10)
        assert got == pytest.approx(-2.0, abs=1e-12)


class TestInnerIntegral:
    def test_paper_normalization_case(self):
        got = inner_integral_check(STEP, STEP, math.pi / 2, 1j, 1.0)
        assert got == pytest.approx(-1.0, abs=1e-12)

    def test_real_x_vanishes_at_right_angle(self):
        # x2 = 0 and cot(pi/2) = 0; floating cos(pi/2) leaves ~1e-16 dust
        got = inner_integral_check(STEP, STEP, math.pi / 2, 1.0 + 0j, 1.0)
        assert abs(got) <= 1e-12

    def test_imaginary_y_vanishes(self):
        got = inner_integral_check(STEP, STEP, math.pi / 3, 1j, 2j)
        assert got == 0.0

    @pytest.mark.parametrize("theta", [math.pi / 2, math.pi / 3, 2.0])
    def test_polygon_matches_formula(self, theta):
        rng = np.random.default_rng(42)
        cot = math.cos(theta) / math.sin(theta)
        for _ in range(10):
            x = complex(rng.normal(), rng.normal())
            y = complex(rng.normal(), rng.normal())
            got = inner_integral_check(STEP, STEP, theta, x, y)
            assert got == pytest.approx(-y.real * (x.imag + cot * x.real),
                                        abs=1e-10)

    def test_nontransversal_theta_rejected(self):
        with pytest.raises(tr.ThetaRangeError):
            inner_integral_check(STEP, STEP, 0.01, 1j, 1.0)

    def test_smooth_profile_quadrature(self):
        prof = SwitchProfile("smooth-cubic", 0.5)
        got = inner_integral_check(prof, prof, math.pi / 2, 1j, 1.0)
        assert got == pytest.approx(-1.0, abs=1e-7)


class TestPoissonBrackets:
    def test_area_cases(self):
        x, y = parse_polynomial("x"), parse_polynomial("y")
        assert poisson_bracket_integral(x, y, "square") == pytest.approx(1.0)
        assert poisson_bracket_integral(x, y, "disc") == pytest.approx(math.pi)

    def test_x2_oracle(self):
        # elementary integral oracle: iint_S 2x dx dy = 1
        x2, y = parse_polynomial("x^2"), parse_polynomial("y")
        oracle, _ = integrate.dblquad(lambda yy, xx: 2 * xx, 0, 1, 0, 1)
        assert poisson_bracket_integral(x2, y, "square") == pytest.approx(oracle)

    def test_symmetry_cancellation(self):
        xy, xpy = parse_polynomial("x*y"), parse_polynomial("x+y")
        assert poisson_bracket_integral(xy, xpy, "square") == pytest.approx(0.0)

    def test_parser(self):
        p = parse_polynomial("2*x^2*y - y + 0.5")
        assert p.as_dict() == {(2, 1): 2.0, (0, 1): -1.0, (0, 0): 0.5}


class TestCommutatorTrace:
    def test_lowest_level_value(self):
        est = commutator_trace(PairSpec.square(), schedule=FAST)
        assert 2 * math.pi * abs(est.value) == pytest.approx(1.0, rel=0.02)
        assert abs(est.value.real) <= 1e-10

    def test_level1_value(self):
        est = commutator_trace(PairSpec.square(arena=Arena.level(1)),
                               schedule=FAST)
        assert 2 * math.pi * abs(est.value) == pytest.approx(1.0, rel=0.05)

    def test_stacked_value(self):
        est = commutator_trace(PairSpec.square(arena=Arena.stacked(1)),
                               schedule=FAST)
        assert 2 * math.pi * abs(est.value) == pytest.approx(2.0, rel=0.05)

    def test_phase_pair_value(self):
        est = commutator_trace(PairSpec.disc(), schedule=(32, 64, 96),
                               tolerance=1e-2)
        assert est.value * 2j == pytest.approx(1.0, rel=0.02)

    def test_antisymmetry_identical_sums(self):
        pair = PairSpec.square()
        a = commutator_trace(pair, schedule=(24,), tolerance=math.inf)
        b = commutator_trace(PairSpec(pair.g, pair.f, pair.arena),
                             schedule=(24,), tolerance=math.inf)
        assert a.value == pytest.approx(-b.value, abs=1e-14)

    def test_zero_trace_against_compact_bump(self):
        pair = PairSpec(PairSpec.square().f, tent_bump(1.0, theta=math.pi / 2))
        est = commutator_trace(pair, schedule=(24, 48, 72))
        assert 2 * math.pi * abs(est.value) <= 1e-3

    def test_unbuffered_sanity_is_asserted(self):
        F = np.array([[1.0, 2.0], [2.0, 3.0]], dtype=complex)
        G = np.array([[0.0, 1.0], [1.0, 1.0]], dtype=complex)
        d = tr.buffered_commutator_diag(F, G, np.array([True, True]))
        assert abs(d.sum()) <= 1e-12

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            commutator_trace(PairSpec.square(), schedule=(32, 32))
        with pytest.raises(ValueError):
            commutator_trace(PairSpec.square(), schedule=(32, 64), buffer=4)

    def test_stabilization_flag_honest(self):
        est = commutator_trace(PairSpec.disc(), schedule=(16, 24, 32),
                               tolerance=1e-9)
        assert not est.stabilized
        assert est.gap > 1e-9

    def test_json_shape(self):
        est = commutator_trace(PairSpec.square(), schedule=(16, 24, 32))
        d = est.to_json_dict()
        assert set(d) == {"value_re", "value_im", "schedule", "stabilized",
                          "tolerance"}
        assert len(d["schedule"]) == 3
        assert set(d["schedule"][0]) == {"N", "B", "value_re", "value_im"}


class TestHeltonHowe:
    def test_reduces_to_commutator(self):
        x, y = parse_polynomial("x"), parse_polynomial("y")
        a = helton_howe_trace(x, y, PairSpec.square(), schedule=(24, 32))
        b = commutator_trace(PairSpec.square(), schedule=(24, 32))
        assert a.value == pytest.approx(b.value, abs=1e-12)

    def test_antisymmetry(self):
        p, q = parse_polynomial("x^2"), parse_polynomial("y")
        a = helton_howe_trace(p, q, PairSpec.square(), schedule=(24,),
                              tolerance=math.inf)
        b = helton_howe_trace(q, p, PairSpec.square(), schedule=(24,),
                              tolerance=math.inf)
        assert a.value == pytest.approx(-b.value, abs=1e-12)

    def test_square_examples(self):
        pair = PairSpec.square()
        for text, want in (("x", 1.0), ("x^2", 1.0)):
            est = helton_howe_trace(parse_polynomial(text),
                                    parse_polynomial("y"), pair,
                                    schedule=FAST)
            assert 2 * math.pi * abs(est.value) == pytest.approx(want, rel=0.05)

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            helton_howe_trace(parse_polynomial("x^7"), parse_polynomial("y"),
                              PairSpec.square(), schedule=FAST)


class TestConjugationExpansion:
    def test_level1_coefficient_exact(self):
        c, res = conjugated_symbol_expansion(1, parse_polynomial("x^2*y^2"),
                                             kmax=8)
        assert c.real[0] == pytest.approx(1.0, abs=1e-12)
        assert res <= 1e-12

    def test_harmonic_symbol_passes_through(self):
        # d dbar f = 0 for f = x^2 - y^2, so the conjugation is transparent
        c, res = conjugated_symbol_expansion(1, parse_polynomial("x^2 - y^2"),
                                             kmax=8)
        assert res <= 1e-12
        assert abs(c[0]) <= 1e-8 or res <= 1e-12

    def test_level2_regression_values(self):
        c, res = conjugated_symbol_expansion(2, parse_polynomial("x^2*y^2"),
                                             kmax=8)
        assert c.real == pytest.approx([2.0, 0.5], abs=1e-10)
        assert res <= 1e-10

    def test_level_validation(self):
        with pytest.raises(ValueError):
            conjugated_symbol_expansion(0, parse_polynomial("x^2"))


class TestCrossTerms:
    def test_ell0_exactly_zero(self):
        rep = cross_term_traces(0, PairSpec.square())
        assert rep.total == 0.0

    def test_ell1_cancellation(self):
        rep = cross_term_traces(1, PairSpec.square(), N=48)
        assert 2 * math.pi * abs(rep.total) <= 0.05
        assert 2 * math.pi * rep.max_pairwise() <= 0.05

    def test_ell2_cancellation(self):
        rep = cross_term_traces(2, PairSpec.square(), N=32)
        assert 2 * math.pi * abs(rep.total) <= 0.05
