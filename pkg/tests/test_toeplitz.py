import math

import numpy as np
import pytest
from scipy import integrate

from focklab import toeplitz as tz
from focklab.symbols import (
    HalfPlaneSwitch,
    Phase,
    RealPolynomial,
    SwitchProfile,
    Wedge,
    tent_bump,
)
from focklab.toeplitz import (
    EntryCancellationError,
    OperatorMatrix,
    TruncationSpec,
    assemble_switch_separable,
    rotation_conjugate,
    toeplitz_level,
    toeplitz_lll,
    toeplitz_stacked,
)

STEP = SwitchProfile("step")


def dblquad_entry_oracle(k, l):
    """(1/pi) int_{x>0} z^k conj(z^l) e^{-|z|^2} dA / sqrt(k! l!)."""
    norm = math.exp(-0.5 * (math.lgamma(k + 1) + math.lgamma(l + 1)))

    def integrand_re(y, x):
        z = complex(x, y)
        return (z ** k * np.conj(z) ** l).real * math.exp(-x * x - y * y)

    def integrand_im(y, x):
        z = complex(x, y)
        return (z ** k * np.conj(z) ** l).imag * math.exp(-x * x - y * y)

    re, _ = integrate.dblquad(integrand_re, 0, 8, -8, 8, epsabs=1e-12)
    im, _ = integrate.dblquad(integrand_im, 0, 8, -8, 8, epsabs=1e-12)
    return complex(re, im) * norm / math.pi


class TestSwitchAssembly:
    def test_halfspace_symmetry_entry(self):
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(6, 0)).exposed
        assert M[0, 0] == pytest.approx(0.5, abs=1e-13)

    def test_entry_10_oracle(self):
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(6, 0)).exposed
        assert M[1, 0] == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-13)
        assert M[1, 0] == pytest.approx(dblquad_entry_oracle(0, 1), abs=1e-10)

    def test_level1_halfspace_symmetry(self):
        M = toeplitz_level(HalfPlaneSwitch(STEP), 1, TruncationSpec(5, 0)).exposed
        assert M[0, 0] == pytest.approx(0.5, abs=1e-13)

    def test_hermitian(self):
        for sym in (HalfPlaneSwitch(STEP),
                    HalfPlaneSwitch(SwitchProfile("smooth-erf", 0.7), 1.1)):
            M = toeplitz_lll(sym, TruncationSpec(24, 8)).data
            assert np.abs(M - M.conj().T).max() <= 1e-12

    def test_positivity_of_compression(self):
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(32, 16)).exposed
        eig = np.linalg.eigvalsh(M)
        assert eig.min() >= -1e-10 and eig.max() <= 1.0 + 1e-10

    @pytest.mark.parametrize("levels", [(0, 0), (1, 1), (0, 2)])
    def test_dual_route_small_corner(self, levels):
        i, j = levels
        sep = assemble_switch_separable(STEP, i, j, 10, 10)
        herm = tz._switch_block_hermite(STEP, i, j, 10)
        assert np.abs(sep - herm).max() <= 1e-12

    def test_dual_route_smooth_profiles(self):
        for prof in (SwitchProfile("smooth-erf", 0.6),
                     SwitchProfile("linear-ramp", 0.9),
                     SwitchProfile("smooth-cubic", 0.5)):
            sep = assemble_switch_separable(prof, 0, 0, 8, 8)
            herm = tz._switch_block_hermite(prof, 0, 0, 8)
            assert np.abs(sep - herm).max() <= 1e-11

    def test_cancellation_guard_raises_without_escalation(self):
        with pytest.raises(EntryCancellationError, match=r"entry \(\d+,\d+\)"):
            assemble_switch_separable(STEP, 0, 0, 36, 36, allow_mp=False)

    def test_buffer_monotonicity_exact(self):
        a = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(12, 0)).exposed
        b = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(12, 20)).exposed
        assert np.array_equal(a, b)


class TestRotation:
    def test_identity_angles(self):
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(8, 0))
        for theta in (0.0, 2 * math.pi):
            R = rotation_conjugate(M, theta)
            assert np.abs(R.data - M.data).max() <= 1e-12

    def test_quarter_turn_matches_direct_assembly(self):
        sep_y = assemble_switch_separable(STEP, 0, 0, 14, 14, axis="y")
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(14, 0))
        R = rotation_conjugate(M, math.pi / 2)
        assert np.abs(sep_y - R.exposed).max() <= 1e-10

    def test_rotated_symbol_spec_equals_rotation_of_matrix(self):
        theta = 1.1
        direct = toeplitz_lll(HalfPlaneSwitch(STEP, theta), TruncationSpec(10, 0))
        rotated = rotation_conjugate(
            toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(10, 0)), theta)
        assert np.abs(direct.data - rotated.data).max() <= 1e-12


class TestPolarSymbols:
    def test_wedge_diagonal(self):
        s, t = 0.4, 0.4 + 1.1
        M = toeplitz_lll(Wedge(s, t), TruncationSpec(7, 0)).exposed
        assert np.allclose(M.diagonal(), (t - s) / (2 * math.pi), atol=1e-13)

    def test_phase_is_weighted_subdiagonal(self):
        M = toeplitz_lll(Phase(), TruncationSpec(8, 0)).exposed
        a0 = math.sqrt(math.pi) / 2
        assert M[1, 0] == pytest.approx(a0, abs=1e-13)
        off = M - np.diag(np.diag(M, -1), -1)
        assert np.abs(off).max() == 0.0

    def test_phase_level1_subdiagonal_selection(self):
        M = toeplitz_level(Phase(), 1, TruncationSpec(8, 0)).exposed
        off = M - np.diag(np.diag(M, -1), -1)
        assert np.abs(off).max() == 0.0
        assert np.all(np.diag(M, -1).real > 0)

    def test_phase_re_im_hermitian(self):
        for part in ("re", "im"):
            M = toeplitz_lll(Phase(part), TruncationSpec(8, 0)).data
            assert np.abs(M - M.conj().T).max() <= 1e-13


class TestPolynomialSymbols:
    def test_constant_one_is_identity(self):
        one = RealPolynomial(((( 0, 0), 1.0),))
        M = toeplitz_stacked(one, 1, TruncationSpec(6, 0)).data
        assert np.abs(M - np.eye(12)).max() <= 1e-11

    def test_radial_symbol_diagonal_per_level(self):
        radial = RealPolynomial.from_dict_coeffs({(2, 0): 1.0, (0, 2): 1.0})
        M = toeplitz_level(radial, 2, TruncationSpec(6, 0)).exposed
        assert np.abs(M - np.diag(np.diag(M))).max() <= 1e-11

    def test_radial_stacked_angular_selection(self):
        radial = RealPolynomial.from_dict_coeffs({(2, 0): 1.0, (0, 2): 1.0})
        M = toeplitz_stacked(radial, 1, TruncationSpec(6, 0))
        blk = M.block(0, 1)   # row level 0, col level 1
        for l in range(6):
            for k in range(6):
                if l - 0 != k - 1:
                    assert abs(blk[l, k]) <= 1e-11


class TestStacked:
    def test_cross_level_block_dual_route(self):
        M = toeplitz_stacked(HalfPlaneSwitch(STEP), 1, TruncationSpec(8, 0))
        sep = assemble_switch_separable(STEP, 0, 1, 8, 8)
        assert np.abs(M.block(0, 1) - sep).max() <= 1e-10

    def test_compact_profile_matches_sum(self):
        bump = tent_bump(1.0)
        tr = TruncationSpec(10, 0)
        M = toeplitz_lll(bump, tr).data
        parts = sum(c * toeplitz_lll(HalfPlaneSwitch(p), tr).data
                    for c, p in bump.terms)
        assert np.abs(M - parts).max() <= 1e-12


class TestContainers:
    def test_truncation_validation(self):
        with pytest.raises(ValueError):
            TruncationSpec(0, 0)
        with pytest.raises(ValueError):
            TruncationSpec(4, -1)

    def test_exposed_mask_stacked(self):
        t = TruncationSpec.stacked(1, 3, 2)
        mask = t.exposed_mask()
        assert mask.sum() == 6 and mask[:3].all() and not mask[3:5].any()

    def test_csv_export(self, tmp_path):
        M = toeplitz_lll(HalfPlaneSwitch(STEP), TruncationSpec(3, 1))
        path = tmp_path / "mat.csv"
        M.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# basis=level:0"
        assert lines[1] == "# N=3"
        assert lines[2] == "# B=1"
        assert lines[3].startswith("# symbol=")
        assert lines[4] == "row,col,re,im"
        assert len(lines) == 5 + 9
        row, col, re, im = lines[5].split(",")
        assert (row, col) == ("0", "0")
        assert float(re) == pytest.approx(0.5, abs=1e-13)
