import math

import numpy as np
import pytest

from focklab import fredholm as fr
from focklab.fredholm import (
    PhaseFamily,
    RegionSpec,
    SwitchPairFamily,
    essential_spectrum_probe,
    fredholm_index,
    phase_weight_quadrature_oracle,
    principal_function_reconstruct,
    trace_class_probe,
    wedge_compactness_probe,
    wedge_partition_identity,
    weighted_shift_analysis,
)
from focklab.traces import Arena, PairSpec

PHASE_SCHED = (48, 72, 96)
SWITCH_SCHED = (96, 128, 160)


class TestFredholmIndex:
    @pytest.mark.parametrize("lam", [0.0, 0.3, 0.5j])
    def test_phase_inside(self, lam):
        rep = fredholm_index(PhaseFamily(0), lam, PHASE_SCHED)
        assert rep.index == -1

    def test_phase_outside(self):
        rep = fredholm_index(PhaseFamily(0), 1.5, PHASE_SCHED)
        assert rep.index == 0

    def test_phase_level1(self):
        rep = fredholm_index(PhaseFamily(1), 0.3, PHASE_SCHED)
        assert rep.index == -1

    def test_switch_pair_inside_and_out(self):
        fam = SwitchPairFamily()
        assert fredholm_index(fam, 0.5 + 0.5j, SWITCH_SCHED).index == -1
        assert fredholm_index(fam, 2 + 2j, SWITCH_SCHED).index == 0
        assert fredholm_index(fam, -0.5 - 0.5j, SWITCH_SCHED).index == 0

    def test_interior_constancy(self):
        fam = SwitchPairFamily()
        vals = {fredholm_index(fam, lam, SWITCH_SCHED).index
                for lam in (0.3 + 0.3j, 0.7 + 0.3j, 0.3 + 0.7j, 0.6 + 0.6j)}
        assert vals == {-1}

    def test_homotopy_between_profiles(self):
        # replacing the step by a smooth profile keeps every stable index
        from focklab.symbols import SwitchProfile
        fam = SwitchPairFamily(SwitchProfile("smooth-erf", 0.5))
        assert fredholm_index(fam, 0.5 + 0.5j, SWITCH_SCHED).index == -1
        assert fredholm_index(fam, 2 + 2j, SWITCH_SCHED).index == 0

    def test_stacked_additivity(self):
        fam = SwitchPairFamily(arena=Arena.stacked(1))
        rep = fredholm_index(fam, 0.5 + 0.5j, SWITCH_SCHED)
        assert rep.index == -2

    def test_report_shape(self):
        rep = fredholm_index(PhaseFamily(0), 0.3, PHASE_SCHED)
        d = rep.to_json_dict()
        assert d["index"] == -1
        assert len(d["evidence"]) == len(PHASE_SCHED) * 2
        assert {"N", "tau", "dim_ker", "dim_coker"} == set(d["evidence"][0])

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            fredholm_index(PhaseFamily(0), 0.3, (32, 64))


class TestSpectrumProbe:
    def test_phase_circle_flagged(self):
        fam = PhaseFamily(0)
        region = RegionSpec("rect", 1, 0.0, (0.99, 1.01, -0.01, 0.01))
        out = essential_spectrum_probe(fam, region, (48, 96, 160))
        assert out[0]["class"] == "flagged"

    def test_phase_interior_and_exterior_fredholm(self):
        fam = PhaseFamily(0)
        for pt, cls in ((0.3 + 0.0j, "fredholm"), (1.5 + 0.0j, "fredholm")):
            region = RegionSpec("rect", 1, 0.0,
                                (pt.real - .01, pt.real + .01, -0.01, 0.01))
            out = essential_spectrum_probe(fam, region, (48, 96, 160))
            assert out[0]["class"] == cls

    def test_switch_pair_probe(self):
        fam = SwitchPairFamily()
        cases = {
            0.5 + 0.5j: "fredholm",      # interior, one stable defect
            3.0 + 0.0j: "fredholm",      # norm bound makes this invertible
            1.0 + 1.0j: "flagged",       # corner of the boundary square
        }
        for pt, want in cases.items():
            region = RegionSpec("rect", 1, 0.0,
                                (pt.real - .01, pt.real + .01,
                                 pt.imag - .01, pt.imag + .01))
            out = essential_spectrum_probe(fam, region, (48, 96, 160))
            assert out[0]["class"] == want, pt


class TestWeightedShift:
    def test_first_weight_exact(self):
        rep = weighted_shift_analysis(10)
        assert rep.weights[0] == pytest.approx(math.sqrt(math.pi) / 2,
                                               abs=1e-14)

    def test_ratio_oracle_a1(self):
        rep = weighted_shift_analysis(10)
        assert rep.weights[1] / rep.weights[0] == pytest.approx(
            1.5 / math.sqrt(2.0), abs=1e-13)
        assert rep.weights[1] == pytest.approx(0.9399857, abs=1e-7)

    def test_structure(self):
        rep = weighted_shift_analysis(600)
        assert rep.monotone and rep.hyponormal and rep.envelope_ok
        assert np.all(rep.weights > 0) and np.all(rep.weights < 1)
        assert rep.partial_trace_err <= 1e-12
        assert abs(rep.weights[500] - 1) <= 1.5e-3
        assert rep.mp_ratio_err <= 1e-12

    def test_level1_weights_quadrature_oracle(self):
        rep = weighted_shift_analysis(12, level=1)
        for k in (0, 3, 7):
            assert rep.weights[k] == pytest.approx(
                phase_weight_quadrature_oracle(1, k), rel=1e-10)
        assert rep.monotone
        assert rep.index_verdict == -1

    def test_kmax_validation(self):
        with pytest.raises(ValueError):
            weighted_shift_analysis(0)


class TestPrincipalFunction:
    def test_square_map_small_grid(self):
        rep = principal_function_reconstruct(
            PairSpec.square(), RegionSpec("square", 5, 0.1), SWITCH_SCHED)
        assert rep.mismatches == 0
        assert rep.unstable == 0
        assert rep.crosscheck_gap <= 0.05

    def test_disc_map_small_grid(self):
        rep = principal_function_reconstruct(
            PairSpec.disc(), RegionSpec("disc", 5, 0.1), (144, 176, 208))
        assert rep.mismatches == 0
        assert rep.unstable == 0
        assert rep.crosscheck_gap <= 0.05 * math.pi

    def test_csv_export(self, tmp_path):
        rep = principal_function_reconstruct(
            PairSpec.disc(), RegionSpec("disc", 3, 0.1), (144, 176, 208))
        path = tmp_path / "map.csv"
        rep.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "re_lambda,im_lambda,index_or_flag"
        assert len(lines) == 1 + 9

    def test_region_validation(self):
        with pytest.raises(ValueError):
            RegionSpec("square", 0)


class TestWedgeProbes:
    def test_partition_of_unity(self):
        assert wedge_partition_identity(math.pi / 2) <= 1e-12
        assert wedge_partition_identity(1.0, N=24, j=1) <= 1e-11

    @pytest.mark.parametrize("which,j", [("f2A", 0), ("f1B", 1)])
    def test_trailing_singular_values_decay(self, which, j):
        rep = wedge_compactness_probe(j, math.pi / 2, which,
                                      schedule=(32, 64, 128))
        tails = [r["trailing_max"] for r in rep["rows"]]
        assert tails[1] <= tails[0]
        assert tails[-1] <= 1e-8


class TestTraceClassProbe:
    def test_switch_pair_partial_sums_stabilize(self):
        rep = trace_class_probe("switch-pair", schedule=(48, 96, 128))
        sums = [r["singular_sum"] for r in rep["rows"]]
        assert abs(sums[-1] - sums[-2]) <= 0.01 * sums[-2]

    def test_phase_pair_converges(self):
        rep = trace_class_probe("phase-pair-lll", schedule=(48, 96, 128))
        sums = [r["singular_sum"] for r in rep["rows"]]
        assert sums[-1] == pytest.approx(0.5, rel=0.02)

    def test_half_commutator_grows(self):
        rep = trace_class_probe("phase-halfcommutator", schedule=(32, 64, 96),
                                levels=3)
        sums = [r["singular_sum"] for r in rep["rows"]]
        assert sums[-1] > 1.05 * sums[0]

    def test_open_problem_probe_makes_no_claim(self):
        rep = trace_class_probe("phase-pair-stacked", schedule=(32, 64))
        assert rep["claim"].startswith("none")
