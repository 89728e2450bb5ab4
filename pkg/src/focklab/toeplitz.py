"""Truncated matrices of compressed multiplication operators.

Matrices are assembled in the orthonormal family e_k^{(j)} of a single
level j, or in the level-major stacked family of levels 0..l.  Entry
(row l, col k) is <f e_k, e_l>.  A truncation exposes an N x N block per
level but every entry is computed directly on the enlarged (N+B) index
set, so exposed entries never depend on the buffer.

Two independent routes exist for half-plane switch symbols:

* separable-moment route: expand z^M zbar^N binomially in x and y and
  reduce every entry to products of 1D Gaussian moments.  Exact per
  term, but the terms are factorially large with massive cancellation;
  a magnitude-ratio guard escalates entries to 50-digit arithmetic and
  errors out past the 1e12 threshold.
* oscillator route: the matrix of a symbol depending only on Re(zeta)
  coincides, between any two levels, with the matrix of a 1D
  multiplication operator in the Hermite-function basis.  The
  multiplier is the profile, rescaled by sqrt(2) and smoothed by an
  explicit polynomial-Gaussian kernel that depends on the level pair.
  This route is numerically stable at any truncation size.

The oscillator-route constants are not taken on faith: every assembly
validates a low-order corner against the separable route and refuses to
proceed on disagreement.  Wedge and phase matrices come from closed
polar factorizations (angular window integrals times Gamma factors),
never quadrature.  Real-polynomial symbols go through the exact algebra
module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import hermite as npherm
from scipy import special as sp

from . import algebra
from .symbols import (
    CompactProfile,
    HalfPlaneSwitch,
    Phase,
    RealPolynomial,
    SwitchProfile,
    SymbolSpec,
    Wedge,
    eta_moment,
    eta_moment_mp,
    gauss_moment,
)

__all__ = [
    "TruncationSpec", "OperatorMatrix", "toeplitz_lll", "toeplitz_level",
    "toeplitz_stacked", "rotation_conjugate", "assemble_switch_separable",
    "EntryCancellationError",
]

GUARD_RATIO = 1e12          # magnitude-ratio guard for the separable route
MP_ESCALATION_RATIO = 1e4   # above this, double precision loses > ~1e-12
CALIBRATION_ORDER = 6       # corner size checked between the two routes
CALIBRATION_TOL = 1e-9


class EntryCancellationError(ArithmeticError):
    """Separable-route entry lost to cancellation beyond the guard."""


class AssemblyConventionError(AssertionError):
    """Oscillator-route corner failed to match the separable route."""


# ---------------------------------------------------------------------------
# truncation and matrix containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationSpec:
    """Exposed dimension N per level, buffer B, and the level list."""

    N: int
    B: int = 0
    levels: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.N < 1 or self.B < 0:
            raise ValueError("need N >= 1 and B >= 0")
        if any(j < 0 for j in self.levels):
            raise ValueError("levels must be >= 0")

    @property
    def dim_per_level(self) -> int:
        return self.N + self.B

    @property
    def dim(self) -> int:
        return self.dim_per_level * len(self.levels)

    def exposed_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        d = self.dim_per_level
        for pos in range(len(self.levels)):
            mask[pos * d: pos * d + self.N] = True
        return mask

    def angular_offsets(self) -> np.ndarray:
        """k - j for each buffered basis vector, in storage order."""
        d = self.dim_per_level
        out = np.empty(self.dim)
        for pos, j in enumerate(self.levels):
            out[pos * d:(pos + 1) * d] = np.arange(d) - j
        return out

    @staticmethod
    def level(j: int, N: int, B: int = 0) -> "TruncationSpec":
        return TruncationSpec(N, B, (j,))

    @staticmethod
    def stacked(ell: int, N: int, B: int = 0) -> "TruncationSpec":
        return TruncationSpec(N, B, tuple(range(ell + 1)))


@dataclass(frozen=True)
class OperatorMatrix:
    """Buffered matrix with truncation metadata and symbol provenance."""

    data: np.ndarray
    trunc: TruncationSpec
    provenance: str = ""

    @property
    def exposed(self) -> np.ndarray:
        mask = self.trunc.exposed_mask()
        return self.data[np.ix_(mask, mask)]

    def block(self, row_pos: int, col_pos: int) -> np.ndarray:
        d = self.trunc.dim_per_level
        return self.data[row_pos * d:(row_pos + 1) * d,
                         col_pos * d:(col_pos + 1) * d]

    def basis_tag(self) -> str:
        levels = self.trunc.levels
        if len(levels) == 1:
            return f"level:{levels[0]}"
        return "stacked:" + ",".join(str(j) for j in levels)

    def to_csv(self, path) -> None:
        """Exposed block as text: header lines, then row,col,re,im."""
        exp = self.exposed
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# basis={self.basis_tag()}\n")
            fh.write(f"# N={self.trunc.N}\n")
            fh.write(f"# B={self.trunc.B}\n")
            fh.write(f"# symbol={self.provenance}\n")
            fh.write("row,col,re,im\n")
            for r in range(exp.shape[0]):
                for c in range(exp.shape[1]):
                    v = exp[r, c]
                    fh.write(f"{r},{c},{float(v.real)!r},{float(v.imag)!r}\n")


# ---------------------------------------------------------------------------
# Hermite-function machinery (oscillator route)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _quad_grid(kmax: int) -> tuple:
    """Composite Gauss-Legendre grid covering the oscillator support.

    One canonical grid serves every order up to 512, so exposed-block
    entries are bit-identical whatever the buffer; larger orders get a
    wider grid.
    """
    L = max(42.0, math.sqrt(2.0 * (kmax + 1)) + 10.0)
    panels = max(int(math.ceil(2 * L / 0.5)), 8)
    xs, ws = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(-L, L, panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes.append(mid + half * xs)
        weights.append(half * ws)
    return np.concatenate(nodes), np.concatenate(weights)


def hermite_functions(kmax: int, q: np.ndarray) -> np.ndarray:
    """Orthonormal oscillator eigenfunctions h_0..h_kmax on the grid q."""
    H = np.zeros((kmax + 1, q.size))
    H[0] = math.pi ** -0.25 * np.exp(-0.5 * q * q)
    if kmax >= 1:
        H[1] = math.sqrt(2.0) * q * H[0]
    for k in range(1, kmax):
        H[k + 1] = math.sqrt(2.0 / (k + 1)) * q * H[k] \
            - math.sqrt(k / (k + 1)) * H[k - 1]
    return H


@lru_cache(maxsize=32)
def _hermite_cache(kmax: int) -> tuple:
    q, w = _quad_grid(kmax)
    return q, w, hermite_functions(kmax, q)


@lru_cache(maxsize=256)
def _smoothing_kernel_hermite(row_level: int, col_level: int) -> tuple:
    """Hermite-basis coefficients of rho, where the level-pair smoothing
    kernel is R(x) = rho(x) e^{-x^2}.

    Derivation sketch: the generating function of the switch-symbol
    matrix between levels (i, j) factors as e^{st} (eta * kappa)((s+t)/2)
    with kappa(d) = Q(-d) e^{-d^2} / (pi sqrt(i! j!)) and
    Q(D) = int (D - iy)^j (D + iy)^i e^{-y^2} dy; matching against the
    Hermite-basis multiplication generating function and deconvolving
    gives the multiplier eta_tilde = eta(./sqrt 2) * R with R as below.
    """
    i, j = row_level, col_level
    deg = i + j
    # polynomial coefficients of Q(D)
    qc = np.zeros(deg + 1, dtype=complex)
    for p in range(j + 1):
        for r in range(i + 1):
            mexp = (j - p) + (i - r)
            if mexp % 2:
                continue
            qc[p + r] += (math.comb(j, p) * math.comb(i, r)
                          * (-1j) ** (j - p) * (1j) ** (i - r)
                          * gauss_moment(mexp))
    # kappa coefficients: Q(-d) / (pi sqrt(i! j!))
    norm = math.pi * math.exp(0.5 * (math.lgamma(i + 1) + math.lgamma(j + 1)))
    cc = qc * (-1.0) ** np.arange(deg + 1) / norm
    # p(zeta) = sum_r cc_r (-i/2)^r H_r(zeta / sqrt 2), in the power basis
    pcoef = np.zeros(deg + 1, dtype=complex)
    for r in range(deg + 1):
        if cc[r] == 0:
            continue
        e = np.zeros(r + 1)
        e[r] = 1.0
        hr = npherm.herm2poly(e)
        hr = hr * (1.0 / math.sqrt(2.0)) ** np.arange(hr.size)
        pcoef[:r + 1] += cc[r] * (-0.5j) ** r * hr
    # rho(x) = sum_n pcoef_n i^n H_n(x): Hermite coefficients directly
    rho_h = pcoef * (1j) ** np.arange(deg + 1)
    if np.abs(rho_h.imag).max() > 1e-10:
        raise AssemblyConventionError("smoothing kernel came out non-real")
    return tuple(rho_h.real)


def _kernel_cdf(rho_h: np.ndarray, q: np.ndarray) -> np.ndarray:
    """int_{-inf}^q rho(v) e^{-v^2} dv for rho given in the Hermite basis.

    Uses int H_n(v) e^{-v^2} dv = -H_{n-1}(v) e^{-v^2} for n >= 1.
    """
    out = rho_h[0] * math.sqrt(math.pi) * 0.5 * (1.0 + sp.erf(q))
    if len(rho_h) > 1:
        shifted = np.asarray(rho_h[1:], dtype=float)
        out = out - npherm.hermval(q, shifted) * np.exp(-q * q)
    return out


@lru_cache(maxsize=8)
def _profile_gl(nodes: int = 160) -> tuple:
    return np.polynomial.legendre.leggauss(nodes)


def _eta_tilde(profile: SwitchProfile, row_level: int, col_level: int,
               q: np.ndarray) -> np.ndarray:
    """Oscillator-route multiplier for the profile between two levels.

    The middle integral over [-a, a] is composite Gauss-Legendre, split
    at the profile's kinks so piecewise-linear kinds keep full accuracy.
    """
    rho_h = np.asarray(_smoothing_kernel_hermite(row_level, col_level))
    if profile.kind == "step":
        return _kernel_cdf(rho_h, q)
    a = profile.a
    root2 = math.sqrt(2.0)
    vals = _kernel_cdf(rho_h, q - root2 * a)       # tail where eta = 1
    if profile.kind in ("linear-ramp", "custom-sampled"):
        edges = sorted({x0 for (x0, _, _, _) in profile._linear_pieces()}
                       | {a, -a})
    else:
        edges = [-a, a]
    xs, ws = _profile_gl()
    for lo, hi in zip(edges[:-1], edges[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        xw = mid + half * xs
        ww = half * ws
        W = q[:, None] - root2 * xw[None, :]
        R = npherm.hermval(W, rho_h) * np.exp(-W * W)
        vals = vals + root2 * (R * (profile(xw) * ww)[None, :]).sum(axis=1)
    return vals


def _switch_block_hermite(profile: SwitchProfile, row_level: int,
                          col_level: int, dim: int) -> np.ndarray:
    q, w, H = _hermite_cache(dim - 1)
    mult = _eta_tilde(profile, row_level, col_level, q)
    return (H[:dim] * (w * mult)) @ H[:dim].T


# ---------------------------------------------------------------------------
# separable-moment route (validation oracle)
# ---------------------------------------------------------------------------

def _moment_tables(profile: SwitchProfile, max_order: int, mp_dps: Optional[int]):
    if mp_dps is None:
        eta = [eta_moment(profile, m) for m in range(max_order + 1)]
        gss = [gauss_moment(m) for m in range(max_order + 1)]
        return eta, gss
    import mpmath as mp

    with mp.workdps(mp_dps):
        eta = [eta_moment_mp(profile, m, mp_dps) for m in range(max_order + 1)]
        gss = [mp.gamma(mp.mpf(m + 1) / 2) if m % 2 == 0 else mp.mpf(0)
               for m in range(max_order + 1)]
    return eta, gss


def _pair_moment_integral(M: int, N: int, eta_tab, gss_tab, axis: str, mp_mode: bool):
    """(1/pi) int eta(coord) z^M zbar^N e^{-|z|^2} dA, termwise.

    axis 'x' places the profile on Re z, axis 'y' on Im z.  Terms are
    sorted into the four phase classes i^p so only real magnitudes are
    accumulated (fsum per bucket).  Returns (value, max_abs_term) so
    callers can apply the cancellation guard.
    """
    if mp_mode:
        import mpmath as mp
        buckets = ([], [], [], [])
        for i in range(M + 1):
            for jj in range(N + 1):
                if axis == "x":
                    mom = eta_tab[i + jj] * gss_tab[M + N - i - jj]
                else:
                    mom = gss_tab[i + jj] * eta_tab[M + N - i - jj]
                if mom == 0:
                    continue
                c = math.comb(M, i) * math.comb(N, jj)  # exact int
                buckets[(M - i - (N - jj)) % 4].append(mp.mpf(c) * mom)
        sums = [mp.fsum(b) if b else mp.mpf(0) for b in buckets]
        tot = mp.mpc(sums[0] - sums[2], sums[1] - sums[3]) / mp.pi
        peak = max((max(abs(t) for t in b) for b in buckets if b),
                   default=mp.mpf(0)) / mp.pi
        return tot, peak
    buckets = ([], [], [], [])
    peak = 0.0
    for i in range(M + 1):
        for jj in range(N + 1):
            if axis == "x":
                mom = eta_tab[i + jj] * gss_tab[M + N - i - jj]
            else:
                mom = gss_tab[i + jj] * eta_tab[M + N - i - jj]
            if mom == 0.0:
                continue
            t = math.comb(M, i) * math.comb(N, jj) * mom
            buckets[(M - i - (N - jj)) % 4].append(t)
            at = abs(t)
            if at > peak:
                peak = at
    sums = [math.fsum(b) if b else 0.0 for b in buckets]
    val = complex(sums[0] - sums[2], sums[1] - sums[3]) / math.pi
    return val, peak / math.pi


def assemble_switch_separable(profile: SwitchProfile, row_level: int,
                              col_level: int, nrows: int, ncols: int,
                              axis: str = "x",
                              allow_mp: bool = True) -> np.ndarray:
    """Separable-moment assembly of <f e_k^{(col)}, e_l^{(row)}>.

    axis 'x' is the plain profile on Re(zeta); axis 'y' realizes the
    quarter-turn rotated symbol directly, giving an independent check of
    rotation covariance.  Entries whose cancellation exceeds the double
    precision budget are recomputed at 50 digits; past the 1e12
    magnitude-ratio guard an EntryCancellationError is raised.
    """
    i_lv, j_lv = row_level, col_level
    max_order = (ncols - 1 + j_lv) + (nrows - 1 + i_lv) + 2
    eta_tab, gss_tab = _moment_tables(profile, max_order, None)
    mp_tabs = None

    col_coeffs = [algebra.level_monomial_log_coeffs(j_lv, k) for k in range(ncols)]
    row_coeffs = [algebra.level_monomial_log_coeffs(i_lv, l) for l in range(nrows)]

    out = np.zeros((nrows, ncols), dtype=complex)
    for l in range(nrows):
        for k in range(ncols):
            val, peak = _entry_separable(
                row_coeffs[l], col_coeffs[k], eta_tab, gss_tab, axis, False)
            # absolute rounding noise of the compensated double sum
            if peak * 1e-16 > 1e-10:
                if not allow_mp:
                    scale = max(abs(val), 1e-300)
                    if peak / scale > GUARD_RATIO:
                        raise EntryCancellationError(
                            f"entry ({l},{k}) cancellation ratio {peak / scale:.2e}"
                        )
                else:
                    import mpmath as mp
                    if mp_tabs is None:
                        mp_tabs = _moment_tables(profile, max_order, 50)
                    with mp.workdps(50):
                        val, peak = _entry_separable(
                            row_coeffs[l], col_coeffs[k], mp_tabs[0], mp_tabs[1],
                            axis, True)
                        if float(peak) * 1e-50 > 1e-13:
                            raise EntryCancellationError(
                                f"entry ({l},{k}) unstable even at 50 digits"
                            )
                        val = complex(val)
            out[l, k] = val
    return out


def _entry_separable(row_lc, col_lc, eta_tab, gss_tab, axis, mp_mode):
    if mp_mode:
        import mpmath as mp
        tot = mp.mpc(0)
        peak = mp.mpf(0)
    else:
        tot = 0.0 + 0.0j
        peak = 0.0
    for (m1, n1, lc1, s1) in col_lc:
        for (m2, n2, lc2, s2) in row_lc:
            S, pk = _pair_moment_integral(m1 + n2, n1 + m2, eta_tab, gss_tab,
                                          axis, mp_mode)
            w = s1 * s2 * math.exp(lc1 + lc2)
            tot = tot + w * S
            cand = abs(w) * pk
            peak = peak if peak >= cand else cand
    return tot, peak


# ---------------------------------------------------------------------------
# closed-form polar symbols (wedge, phase)
# ---------------------------------------------------------------------------

def _assemble_pair_integral(Sfunc, row_level: int, col_level: int,
                            dim: int, angular_shift=None) -> np.ndarray:
    """Assembly from a per-monomial-pair integral in the log domain.

    Sfunc(M, N) returns (logmag, unit phase) of
    (1/pi) int f z^M zbar^N e^{-|z|^2} dA, or None when it vanishes.
    angular_shift, when given, is the only value of
    (col ang. momentum) - (row ang. momentum) the symbol couples,
    letting whole entries be skipped by the selection rule.
    """
    col_lc = [algebra.level_monomial_log_coeffs(col_level, k) for k in range(dim)]
    row_lc = [algebra.level_monomial_log_coeffs(row_level, l) for l in range(dim)]
    out = np.zeros((dim, dim), dtype=complex)
    for l in range(dim):
        for k in range(dim):
            if angular_shift is not None and \
                    (k - col_level) - (l - row_level) != angular_shift:
                continue
            acc = 0.0 + 0.0j
            for (m1, n1, lc1, s1) in col_lc[k]:
                for (m2, n2, lc2, s2) in row_lc[l]:
                    res = Sfunc(m1 + n2, n1 + m2)
                    if res is None:
                        continue
                    logmag, phase = res
                    acc += s1 * s2 * math.exp(lc1 + lc2 + logmag) * phase
            out[l, k] = acc
    return out


def _wedge_Sfunc(s: float, t: float):
    def S(M: int, N: int):
        nu = M - N
        if nu == 0:
            ang = t - s
        else:
            ang = (np.exp(1j * nu * t) - np.exp(1j * nu * s)) / (1j * nu)
        mag = abs(ang)
        if mag == 0.0:
            return None
        logmag = math.lgamma((M + N) / 2 + 1) + math.log(mag / (2 * math.pi))
        return logmag, ang / mag

    return S


def _phase_Sfunc(conjugate: bool):
    def S(M: int, N: int):
        if conjugate:
            if M != N + 1:
                return None
            return math.lgamma(N + 1.5), 1.0 + 0.0j
        if N != M + 1:
            return None
        return math.lgamma(M + 1.5), 1.0 + 0.0j

    return S


def phase_shift_weights(j: int, kmax: int) -> np.ndarray:
    """Subdiagonal weights <Phi e_k^{(j)}, e_{k+1}^{(j)}> for k <= kmax.

    Level 0 reduces to Gamma(k + 3/2) / sqrt(k! (k+1)!); higher levels
    come from the exact monomial expansion, still in the log domain.
    """
    if j == 0:
        k = np.arange(kmax + 1, dtype=float)
        return np.exp(sp.gammaln(k + 1.5)
                      - 0.5 * (sp.gammaln(k + 1) + sp.gammaln(k + 2)))
    S = _phase_Sfunc(False)
    out = np.empty(kmax + 1)
    for k in range(kmax + 1):
        col = algebra.level_monomial_log_coeffs(j, k)
        row = algebra.level_monomial_log_coeffs(j, k + 1)
        acc = 0.0
        for (m1, n1, lc1, s1) in col:
            for (m2, n2, lc2, s2) in row:
                res = S(m1 + n2, n1 + m2)
                if res is None:
                    continue
                logmag, _ = res
                acc += s1 * s2 * math.exp(lc1 + lc2 + logmag)
        out[k] = acc
    return out


def _phase_block(part: str, row_level: int, col_level: int,
                 dim: int) -> np.ndarray:
    if part in ("full", "conj") and row_level == col_level:
        w = phase_shift_weights(row_level, dim - 2) if dim >= 2 else np.empty(0)
        M = np.zeros((dim, dim), dtype=complex)
        if dim >= 2:
            idx = np.arange(dim - 1)
            M[idx + 1, idx] = w
        return M if part == "full" else M.conj().T
    if part == "full":
        return _assemble_pair_integral(_phase_Sfunc(False), row_level, col_level,
                                       dim, angular_shift=-1)
    if part == "conj":
        return _assemble_pair_integral(_phase_Sfunc(True), row_level, col_level,
                                       dim, angular_shift=+1)
    full = _phase_block("full", row_level, col_level, dim)
    conj = _phase_block("conj", row_level, col_level, dim)
    if part == "re":
        return 0.5 * (full + conj)
    return -0.5j * (full - conj)  # "im"


# ---------------------------------------------------------------------------
# real-polynomial symbols via exact algebra
# ---------------------------------------------------------------------------

def _poly_block(sym: RealPolynomial, row_level: int, col_level: int,
                dim: int) -> np.ndarray:
    deg = sym.degree()
    budget = dim + max(row_level, col_level) + deg + 2
    if budget > 84:
        raise algebra.BudgetError(
            "polynomial-symbol assembly uses exact factorials; "
            f"requested dimension {dim} is too large"
        )
    fstate = algebra.poly_xy_to_state(sym.as_dict(), budget)
    cols = [algebra.level_basis(col_level, k, budget).state for k in range(dim)]
    rows = [algebra.level_basis(row_level, l, budget).state for l in range(dim)]
    out = np.zeros((dim, dim), dtype=complex)
    for k, ck in enumerate(cols):
        fk = fstate.multiply(ck)
        for l, rl in enumerate(rows):
            out[l, k] = algebra.inner_product(fk, rl)
    return out


# ---------------------------------------------------------------------------
# public assembly
# ---------------------------------------------------------------------------

_calibrated: dict = {}


def _calibrate_switch(profile: SwitchProfile, row_level: int, col_level: int):
    key = (profile.key(), row_level, col_level)
    if key in _calibrated:
        return
    n = CALIBRATION_ORDER
    herm = _switch_block_hermite(profile, row_level, col_level, n)
    sep = assemble_switch_separable(profile, row_level, col_level, n, n)
    err = np.abs(herm - sep).max()
    if err > CALIBRATION_TOL:
        raise AssemblyConventionError(
            f"oscillator route disagrees with separable route by {err:.3e} "
            f"for profile {profile.kind}, levels ({row_level},{col_level})"
        )
    _calibrated[key] = True


def _switch_block(profile: SwitchProfile, row_level: int, col_level: int,
                  dim: int) -> np.ndarray:
    _calibrate_switch(profile, row_level, col_level)
    return _switch_block_hermite(profile, row_level, col_level, dim)


def _assemble(sym: SymbolSpec, trunc: TruncationSpec) -> np.ndarray:
    d = trunc.dim_per_level
    data = np.zeros((trunc.dim, trunc.dim), dtype=complex)

    def fill(block_fn):
        for rp, i_lv in enumerate(trunc.levels):
            for cp, j_lv in enumerate(trunc.levels):
                data[rp * d:(rp + 1) * d, cp * d:(cp + 1) * d] = \
                    block_fn(i_lv, j_lv)

    if isinstance(sym, HalfPlaneSwitch):
        fill(lambda i, j: _switch_block(sym.profile, i, j, d))
        if sym.theta is not None:
            data[:] = _rotate_data(data, trunc, sym.theta)
        return data
    if isinstance(sym, Wedge):
        fill(lambda i, j: _assemble_pair_integral(_wedge_Sfunc(sym.s, sym.t), i, j, d))
        return data
    if isinstance(sym, Phase):
        fill(lambda i, j: _phase_block(sym.part, i, j, d))
        return data
    if isinstance(sym, RealPolynomial):
        fill(lambda i, j: _poly_block(sym, i, j, d))
        return data
    if isinstance(sym, CompactProfile):
        for coef, prof in sym.terms:
            fill_target = np.zeros_like(data)
            for rp, i_lv in enumerate(trunc.levels):
                for cp, j_lv in enumerate(trunc.levels):
                    fill_target[rp * d:(rp + 1) * d, cp * d:(cp + 1) * d] = \
                        _switch_block(prof, i_lv, j_lv, d)
            data += coef * fill_target
        if sym.theta is not None:
            data[:] = _rotate_data(data, trunc, sym.theta)
        return data
    raise ValueError(f"no assembly route for {type(sym).__name__}")


def toeplitz_level(sym: SymbolSpec, j: int, trunc: TruncationSpec) -> OperatorMatrix:
    """Matrix of the compression of M_f to the level-j family."""
    t = TruncationSpec.level(j, trunc.N, trunc.B)
    return OperatorMatrix(_assemble(sym, t), t, repr(sym.key()))


def toeplitz_lll(sym: SymbolSpec, trunc: TruncationSpec) -> OperatorMatrix:
    """Matrix of the classic compression on the holomorphic family."""
    return toeplitz_level(sym, 0, trunc)


def toeplitz_stacked(sym: SymbolSpec, ell: int,
                     trunc: TruncationSpec) -> OperatorMatrix:
    """Level-major stacked matrix over levels 0..ell, cross blocks included."""
    t = TruncationSpec.stacked(ell, trunc.N, trunc.B)
    return OperatorMatrix(_assemble(sym, t), t, repr(sym.key()))


def _rotate_data(data: np.ndarray, trunc: TruncationSpec,
                 theta: float) -> np.ndarray:
    # entry(l, k) -> e^{i (ang_k - ang_l) theta} entry(l, k)
    ang = trunc.angular_offsets()
    return np.exp(-1j * theta * ang)[:, None] * data \
        * np.exp(1j * theta * ang)[None, :]


def rotation_conjugate(mat: OperatorMatrix, theta: float) -> OperatorMatrix:
    """Matrix of the symbol rotated by theta: f -> f(e^{-i theta} .).

    Conjugation by the diagonal phase with e^{+/- i (k - j) theta} on the
    basis vector of angular index k - j; the sign convention is pinned by
    the quarter-turn agreement test against direct assembly.
    """
    return OperatorMatrix(_rotate_data(mat.data, mat.trunc, theta),
                          mat.trunc, mat.provenance + f"|rot({theta})")


def wedge_partition(theta: float):
    """The four quarter-turn wedges tied to the rotation angle theta."""
    s = theta / 2.0
    half = math.pi / 2.0
    return tuple(Wedge(s + k * half, s + (k + 1) * half) for k in range(4))
