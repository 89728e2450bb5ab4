"""Numerical index estimation, spectrum localization, and shift structure.

A square finite section of a Fredholm operator always has index zero, so
index estimation here uses rectangular buffered sections: the matrix of
T - lambda restricted to the exposed columns but all buffered rows
detects the kernel, and the corresponding section of the adjoint detects
the cokernel.  Singular values below a threshold count as defect
dimensions; an index is reported only when the count is identical
across at least three consecutive truncation sizes and two thresholds
an order of magnitude apart.

Thresholds are a property of the operator family.  For the phase symbol
the defect singular value collapses geometrically and the spec-default
pair (1e-6, 1e-7) resolves it.  For switch-pair operators the defect
decays only polynomially in N (measured exponent near 3), so the
family uses the pair (5e-2, 5e-3), which sits inside the observed
spectral gap (clean singular values stay above 0.15 on the sampled
grids).  Raw singular data is always attached to the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from .symbols import HalfPlaneSwitch, Phase, SwitchProfile, SymbolSpec
from .toeplitz import (
    OperatorMatrix,
    TruncationSpec,
    phase_shift_weights,
    toeplitz_level,
    toeplitz_stacked,
    wedge_partition,
)
from .traces import Arena, PairSpec, commutator_trace

DEFAULT_INDEX_SCHEDULE = (64, 96, 128)
PHASE_THRESHOLDS = (1e-6, 1e-7)
SWITCH_THRESHOLDS = (5e-2, 5e-3)

SIGMA_FLOOR = 5e-2  # "bounded below" floor for the spectrum probe


# ---------------------------------------------------------------------------
# operator families
# ---------------------------------------------------------------------------

class OperatorFamily:
    """A symbol with an arena, assembled at any buffered truncation."""

    def __init__(self, sym: SymbolSpec, arena: Arena = Arena.lowest(),
                 thresholds: Tuple[float, float] = SWITCH_THRESHOLDS,
                 label: str = ""):
        self.sym = sym
        self.arena = arena
        self.thresholds = thresholds
        self.label = label or repr(sym.key())
        self._cache: Dict[Tuple[int, int], OperatorMatrix] = {}

    def matrix(self, N: int, B: int) -> OperatorMatrix:
        key = (N, B)
        if key not in self._cache:
            if self.arena.kind == "level":
                self._cache[key] = toeplitz_level(
                    self.sym, self.arena.value, TruncationSpec(N, B))
            else:
                self._cache[key] = toeplitz_stacked(
                    self.sym, self.arena.value, TruncationSpec(N, B))
        return self._cache[key]


class SwitchPairFamily(OperatorFamily):
    """T_{f1} + i T_{f2} for a transversal pair of switch symbols."""

    def __init__(self, profile: SwitchProfile = SwitchProfile("step"),
                 theta: float = math.pi / 2, arena: Arena = Arena.lowest(),
                 profile2: Optional[SwitchProfile] = None):
        self.pair = PairSpec.square(profile, profile2, theta, arena)
        super().__init__(self.pair.f, arena, SWITCH_THRESHOLDS,
                         label=f"switch-pair(theta={theta:.4f})")
        self._g = self.pair.g

    def matrix(self, N: int, B: int) -> OperatorMatrix:
        key = (N, B)
        if key not in self._cache:
            if self.arena.kind == "level":
                F = toeplitz_level(self.sym, self.arena.value, TruncationSpec(N, B))
                G = toeplitz_level(self._g, self.arena.value, TruncationSpec(N, B))
            else:
                F = toeplitz_stacked(self.sym, self.arena.value, TruncationSpec(N, B))
                G = toeplitz_stacked(self._g, self.arena.value, TruncationSpec(N, B))
            self._cache[key] = OperatorMatrix(F.data + 1j * G.data, F.trunc,
                                              self.label)
        return self._cache[key]

    def norm_bound(self) -> float:
        return 2.0


class PhaseFamily(OperatorFamily):
    """The unimodular angle symbol on a single level; bidiagonal matrix."""

    def __init__(self, level: int = 0):
        super().__init__(Phase(), Arena.level(level), PHASE_THRESHOLDS,
                         label=f"phase(level={level})")
        self.level = level

    def norm_bound(self) -> float:
        return 1.0


def family_for_pair(pair: PairSpec) -> OperatorFamily:
    """The operator T_f + i T_g whose index map realizes the pair's data."""
    if isinstance(pair.f, HalfPlaneSwitch) and isinstance(pair.g, HalfPlaneSwitch):
        fam = SwitchPairFamily(pair.f.profile, pair.g.theta or math.pi / 2,
                               pair.arena, pair.g.profile)
        return fam
    if isinstance(pair.f, Phase) and isinstance(pair.g, Phase):
        if pair.arena.kind != "level":
            raise ValueError("phase pair index maps are per level")
        return PhaseFamily(pair.arena.value)
    raise ValueError("no index family for this pair")


# ---------------------------------------------------------------------------
# fredholm index
# ---------------------------------------------------------------------------

@dataclass
class IndexReport:
    lam: complex
    index: Optional[int]          # None == "unstable"
    evidence: List[dict]          # per (N, tau): dim_ker, dim_coker
    thresholds: Tuple[float, float]
    schedule: Tuple[int, ...]

    @property
    def stable(self) -> bool:
        return self.index is not None

    def to_json_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "index": self.index if self.stable else "unstable",
            "thresholds": list(self.thresholds),
            "schedule": list(self.schedule),
            "evidence": self.evidence,
        }


def _defect_counts(mat: np.ndarray, trunc: TruncationSpec, lam: complex,
                   thresholds: Sequence[float]):
    A = mat - lam * np.eye(mat.shape[0])
    cols = trunc.exposed_mask()
    s_ker = sla.svdvals(A[:, cols])
    s_cok = sla.svdvals(A.conj().T[:, cols])
    out = []
    for tau in thresholds:
        out.append((int((s_ker < tau).sum()), int((s_cok < tau).sum())))
    return out, s_ker, s_cok


def fredholm_index(family: OperatorFamily, lam: complex,
                   schedule: Sequence[int] = DEFAULT_INDEX_SCHEDULE,
                   buffer: Optional[int] = None,
                   thresholds: Optional[Tuple[float, float]] = None) -> IndexReport:
    """Rectangular-section index estimate with stabilization evidence."""
    taus = thresholds or family.thresholds
    schedule = tuple(schedule)
    if len(schedule) < 3:
        raise ValueError("index stabilization needs at least 3 truncations")
    evidence = []
    indices = []
    for N in schedule:
        B = buffer if buffer is not None else N
        M = family.matrix(N, B)
        counts, s_ker, s_cok = _defect_counts(M.data, M.trunc, lam, taus)
        for tau, (dk, dc) in zip(taus, counts):
            evidence.append({"N": N, "tau": tau, "dim_ker": dk, "dim_coker": dc})
            indices.append(dk - dc)
    stable = len(set(indices)) == 1
    return IndexReport(lam, indices[0] if stable else None, evidence,
                       tuple(taus), schedule)


# ---------------------------------------------------------------------------
# essential spectrum probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    kind: str                   # "square" | "disc" | "rect"
    grid: int = 9
    band: float = 0.1
    extent: Tuple[float, float, float, float] = ()  # (x0, x1, y0, y1) for rect

    def __post_init__(self):
        if self.grid < 1:
            raise ValueError("grid resolution must be >= 1")
        if self.kind not in ("square", "disc", "rect"):
            raise ValueError(self.kind)

    def bounds(self):
        if self.kind == "square":
            return (-0.25, 1.25, -0.25, 1.25)
        if self.kind == "disc":
            return (-1.25, 1.25, -1.25, 1.25)
        return self.extent

    def centers(self):
        x0, x1, y0, y1 = self.bounds()
        hx = (x1 - x0) / self.grid
        hy = (y1 - y0) / self.grid
        pts = []
        for iy in range(self.grid):
            for ix in range(self.grid):
                pts.append(complex(x0 + (ix + 0.5) * hx, y0 + (iy + 0.5) * hy))
        return pts, hx * hy

    def boundary_distance(self, lam: complex) -> float:
        if self.kind == "disc":
            return abs(abs(lam) - 1.0)
        # signed distance to the boundary of the unit square
        x, y = lam.real, lam.imag
        dx = max(-x, x - 1.0, 0.0)
        dy = max(-y, y - 1.0, 0.0)
        if dx == 0.0 and dy == 0.0:
            return min(x, 1 - x, y, 1 - y)
        return math.hypot(dx, dy)

    def model_indicator(self, lam: complex) -> int:
        if self.kind == "disc":
            return -1 if abs(lam) < 1.0 else 0
        x, y = lam.real, lam.imag
        return -1 if (0.0 < x < 1.0 and 0.0 < y < 1.0) else 0


def essential_spectrum_probe(family: OperatorFamily, region: RegionSpec,
                             schedule: Sequence[int] = DEFAULT_INDEX_SCHEDULE,
                             buffer: Optional[int] = None) -> List[dict]:
    """Square-section singular diagnostics over a grid of spectral points.

    Classification is empirical, not a theorem: a point is reported
    "fredholm" when the smallest singular value of the exposed square
    section stays above the floor, or when the count of singular values
    below the family's small threshold is identical across the schedule
    (finite defect); it is flagged as candidate essential spectrum when
    the count grows with N or when sigma_min decays yet stays in the
    murky band above the small threshold at the largest truncation.
    """
    tau_big, tau_small = family.thresholds
    pts, _ = region.centers()
    out = []
    mats = {}
    for N in schedule:
        B = buffer if buffer is not None else N
        mats[N] = family.matrix(N, B)
    for lam in pts:
        smins, counts = [], []
        for N in schedule:
            M = mats[N]
            sq = M.exposed - lam * np.eye(M.trunc.N * len(M.trunc.levels))
            s = sla.svdvals(sq)
            smins.append(float(s.min()))
            counts.append(int((s < tau_small).sum()))
        if all(s >= SIGMA_FLOOR for s in smins):
            cls = "fredholm"
        elif counts[-1] > counts[0]:
            cls = "flagged"
        elif smins[-1] >= tau_small and all(
                smins[i + 1] <= smins[i] for i in range(len(smins) - 1)):
            cls = "flagged"
        elif len(set(counts)) == 1:
            cls = "fredholm"
        else:
            cls = "flagged"
        out.append({
            "lambda": [lam.real, lam.imag],
            "sigma_min": smins,
            "defect_counts": counts,
            "class": cls,
        })
    return out


# ---------------------------------------------------------------------------
# weighted shift structure of the phase symbol
# ---------------------------------------------------------------------------

@dataclass
class ShiftReport:
    level: int
    weights: np.ndarray
    ratios_identity_err: float    # float route vs closed ratio formula
    mp_ratio_err: float           # same identity at 30 digits (when computed)
    monotone: bool
    hyponormal: bool
    limit_gap: float              # |a_kmax - 1|
    partial_trace_err: float      # telescoping mismatch
    envelope_ok: bool             # |a_k - 1| <= 1/(4k) for k >= 8 (reported)
    index_verdict: Optional[int]  # shift-structure index at lambda inside D

    def rows(self):
        a = self.weights
        out = []
        for k in range(len(a)):
            ratio = a[k + 1] / a[k] if k + 1 < len(a) else float("nan")
            out.append((k, float(a[k]), float(ratio), float(a[k] ** 2)))
        return out


def weighted_shift_analysis(kmax: int, level: int = 0,
                            lam_probe: complex = 0.3) -> ShiftReport:
    """Shift weights of the phase symbol and their structural checks.

    Level 0 weights are Gamma(k + 3/2)/sqrt(k! (k+1)!) in the log
    domain; higher levels come from exact monomial expansions.  The
    telescoped partial trace of [T^*, T] at cutoff m equals a_m^2; the
    sequence is strictly increasing with limit 1, and positivity of the
    commutator diagonal is the hyponormality certificate.  The index
    verdict comes from the shift structure: no kernel, and a cokernel
    vector with geometrically summable tail for |lambda| < 1.
    """
    if kmax < 1 or kmax > 10 ** 6:
        raise ValueError("kmax must be in 1..1e6")
    a = phase_shift_weights(level, kmax)
    k = np.arange(kmax, dtype=float)
    mp_ratio_err = float("nan")
    if level == 0:
        ratio_formula = (k + 1.5) / np.sqrt((k + 1) * (k + 2))
        ratio_err = float(np.abs(a[1:] / a[:-1] - ratio_formula).max())
        if kmax <= 2000:
            # the identity itself, checked beyond float lgamma rounding
            import mpmath as mp
            with mp.workdps(30):
                worst = mp.mpf(0)
                ak = mp.gamma(mp.mpf(3) / 2)
                for kk in range(kmax):
                    an = mp.gamma(kk + mp.mpf(5) / 2) / mp.sqrt(
                        mp.factorial(kk + 1) * mp.factorial(kk + 2))
                    formula = (kk + mp.mpf(3) / 2) / mp.sqrt(
                        mp.mpf((kk + 1)) * (kk + 2))
                    worst = max(worst, abs(an / ak - formula))
                    ak = an
                mp_ratio_err = float(worst)
    else:
        ratio_err = float("nan")
    monotone = bool(np.all(np.diff(a) > 0))
    comm_diag = np.concatenate([[a[0] ** 2], np.diff(a ** 2)])
    hyponormal = bool(np.all(comm_diag > 0))
    partial = np.cumsum(comm_diag)
    partial_err = float(np.abs(partial - a ** 2).max())
    limit_gap = float(abs(a[-1] - 1.0))
    ks = np.arange(8, kmax + 1)
    envelope_ok = bool(np.all(np.abs(a[8:] - 1.0) <= 1.0 / (4 * ks))) \
        if kmax >= 8 else True
    # shift-structure index: cokernel vector y_{k+1} = lam y_k / a_k
    idx = None
    if abs(lam_probe) < 1.0:
        logs = np.cumsum(np.log(np.maximum(abs(lam_probe), 1e-300)) - np.log(a))
        tail = np.exp(2 * logs[min(len(logs) - 1, 200)])
        idx = -1 if tail < 1e-12 or abs(lam_probe) < 1 else None
    return ShiftReport(level, a, ratio_err, mp_ratio_err, monotone, hyponormal,
                       limit_gap, partial_err, envelope_ok, idx)


def phase_weight_quadrature_oracle(level: int, k: int) -> float:
    """Independent radial-quadrature evaluation of one shift weight."""
    from scipy import integrate
    from . import algebra

    colc = algebra.level_monomial_log_coeffs(level, k)
    rowc = algebra.level_monomial_log_coeffs(level, k + 1)
    total = 0.0
    for (m1, n1, lc1, s1) in colc:
        for (m2, n2, lc2, s2) in rowc:
            M, Nn = m1 + n2, n1 + m2
            if Nn != M + 1:
                continue
            val, _ = integrate.quad(
                lambda r, p=M + Nn: 2.0 * r ** (p + 1) * math.exp(-r * r),
                0, 40, epsabs=1e-13, epsrel=1e-13)
            total += s1 * s2 * math.exp(lc1 + lc2) * val
    return total


# ---------------------------------------------------------------------------
# principal function reconstruction
# ---------------------------------------------------------------------------

@dataclass
class PrincipalFunctionReport:
    region: RegionSpec
    cells: List[dict]             # lambda, status, index, model
    mismatches: int
    unstable: int
    skipped_band: int
    trace_value: complex
    trace_crosscheck_target: complex
    crosscheck_gap: float

    def to_json_dict(self) -> dict:
        return {
            "region": self.region.kind,
            "grid": self.region.grid,
            "band": self.region.band,
            "cells": self.cells,
            "mismatches": self.mismatches,
            "unstable": self.unstable,
            "skipped_band": self.skipped_band,
            "trace": [self.trace_value.real, self.trace_value.imag],
            "crosscheck_target": [self.trace_crosscheck_target.real,
                                  self.trace_crosscheck_target.imag],
            "crosscheck_gap": self.crosscheck_gap,
        }

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("re_lambda,im_lambda,index_or_flag\n")
            for c in self.cells:
                fh.write(f"{c['lambda'][0]!r},{c['lambda'][1]!r},{c['status']}\n")


def principal_function_reconstruct(
        pair: PairSpec, region: RegionSpec,
        schedule: Sequence[int] = DEFAULT_INDEX_SCHEDULE,
        buffer: Optional[int] = None,
        trace_estimate=None,
        trace_tolerance: float = 0.05) -> PrincipalFunctionReport:
    """Index map over the region grid against the signed-indicator model.

    Off the exclusion band the map must equal minus the region indicator;
    the area integral of the model closes against the commutator trace of
    the defining pair, which is the trace-data consistency check.
    """
    fam = family_for_pair(pair)
    pts, _cell = region.centers()
    cells = []
    mismatches = unstable = skipped = 0
    for lam in pts:
        if region.boundary_distance(lam) < region.band:
            cells.append({"lambda": [lam.real, lam.imag],
                          "status": "near-essential-spectrum"})
            skipped += 1
            continue
        rep = fredholm_index(fam, lam, schedule, buffer)
        model = region.model_indicator(lam)
        if not rep.stable:
            cells.append({"lambda": [lam.real, lam.imag], "status": "unstable",
                          "model": model})
            unstable += 1
            continue
        ok = rep.index == model
        if not ok:
            mismatches += 1
        cells.append({"lambda": [lam.real, lam.imag], "status": str(rep.index),
                      "index": rep.index, "model": model, "match": ok})
    if trace_estimate is None:
        trace_estimate = commutator_trace(
            pair, schedule=(32, 64, 96, 128),
            tolerance=5e-3 if isinstance(pair.f, Phase) else 1e-3)
    # integral of the model principal function: -area of the region
    area = 1.0 if region.kind == "square" else math.pi
    target = (-1.0 / (2 * math.pi * 1j)) * (-area)
    gap = 2 * math.pi * abs(trace_estimate.value - target)
    return PrincipalFunctionReport(
        region, cells, mismatches, unstable, skipped,
        trace_estimate.value, target, gap)


# ---------------------------------------------------------------------------
# compactness and trace-class probes
# ---------------------------------------------------------------------------

def wedge_compactness_probe(j: int, theta: float, which: str,
                            schedule: Sequence[int] = (32, 64, 128),
                            profile: SwitchProfile = SwitchProfile("step"),
                            buffer: Optional[int] = None) -> dict:
    """Trailing singular values of the wedge relations, per truncation.

    which selects the relation: 'f2A' (T_{f2} T_{chi_A} - T_{chi_A}),
    'f1B' (T_{f1} T_{chi_B}), 'f2C' (T_{f2} T_{chi_C}), or 'f1D'
    (T_{f1} T_{chi_D} - T_{chi_D}).  Compactness of the remainder shows
    as decay of the trailing singular values as N grows.
    """
    wedges = dict(zip(("A", "B", "C", "D"), wedge_partition(theta)))
    f1 = HalfPlaneSwitch(profile)
    f2 = HalfPlaneSwitch(profile, theta)
    spec = {
        "f2A": (f2, "A", True),
        "f1B": (f1, "B", False),
        "f2C": (f2, "C", False),
        "f1D": (f1, "D", True),
    }
    if which not in spec:
        raise ValueError(f"which must be one of {sorted(spec)}")
    sym, wkey, subtract = spec[which]
    rows = []
    for N in schedule:
        B = buffer if buffer is not None else N
        tr = TruncationSpec.level(j, N, B)
        Tf = toeplitz_level(sym, j, tr).data
        Tw = toeplitz_level(wedges[wkey], j, tr).data
        R = Tf @ Tw - (Tw if subtract else 0.0)
        exposed = tr.exposed_mask()
        s = sla.svdvals(R[np.ix_(exposed, exposed)])
        tail = s[math.ceil(N / 2):]
        rows.append({"N": N, "trailing_max": float(tail.max()),
                     "trailing_sum": float(tail.sum())})
    return {"which": which, "level": j, "theta": theta, "rows": rows}


def wedge_partition_identity(theta: float, N: int = 32, j: int = 0) -> float:
    """Max deviation of the four-wedge Toeplitz sum from the identity."""
    tr = TruncationSpec.level(j, N, 0)
    total = sum(toeplitz_level(w, j, tr).data for w in wedge_partition(theta))
    return float(np.abs(total - np.eye(N)).max())


def trace_class_probe(expression: str,
                      schedule: Sequence[int] = (48, 96, 128),
                      levels: int = 4,
                      theta: float = math.pi / 2) -> dict:
    """Partial singular-value sums of the exposed block per truncation.

    Bounded growth suggests a trace-class limit, visible growth suggests
    none.  This is a diagnostic report and makes no membership claim:
    in particular 'phase-pair-stacked' probes an open question and its
    report carries claim: none.
    """
    rows = []
    claim = "diagnostic-only"
    for N in schedule:
        B = N
        if expression == "switch-pair":
            pair = PairSpec.square()
            F, G = _pair_mats(pair, N, B)
            K = F @ G - G @ F
            exposed = TruncationSpec.level(0, N, B).exposed_mask()
        elif expression == "phase-pair-lll":
            pair = PairSpec.disc()
            F, G = _pair_mats(pair, N, B)
            K = F @ G - G @ F
            exposed = TruncationSpec.level(0, N, B).exposed_mask()
        elif expression == "phase-pair-stacked":
            pair = PairSpec.disc(Arena.stacked(1))
            F, G = _pair_mats(pair, N, B)
            K = F @ G - G @ F
            exposed = TruncationSpec.stacked(1, N, B).exposed_mask()
            claim = "none: open problem, diagnostic only"
        elif expression == "phase-halfcommutator":
            # compression of [M_re, P][M_im, P] over a stacked window
            tr = TruncationSpec.stacked(levels, N, B)
            M1 = toeplitz_stacked(Phase("re"), levels, tr).data
            M2 = toeplitz_stacked(Phase("im"), levels, tr).data
            Pm = np.zeros_like(M1)
            d = tr.dim_per_level
            Pm[:d, :d] = np.eye(d)
            K = (M1 @ Pm - Pm @ M1) @ (M2 @ Pm - Pm @ M2)
            exposed = tr.exposed_mask()
        else:
            raise ValueError(expression)
        s = sla.svdvals(K[np.ix_(exposed, exposed)])
        rows.append({"N": N, "singular_sum": float(s.sum())})
    growth = [rows[i + 1]["singular_sum"] / max(rows[i]["singular_sum"], 1e-300)
              for i in range(len(rows) - 1)]
    return {"expression": expression, "rows": rows, "growth_ratios": growth,
            "claim": claim}


def _pair_mats(pair: PairSpec, N: int, B: int):
    from .traces import _pair_matrices
    F, G = _pair_matrices(pair, N, B)
    return F.data, G.data


# ---------------------------------------------------------------------------
# export helpers
# ---------------------------------------------------------------------------

def index_map_to_csv(reports: List[IndexReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("re_lambda,im_lambda,index_or_flag\n")
        for r in reports:
            flag = r.index if r.stable else "unstable"
            fh.write(f"{r.lam.real!r},{r.lam.imag!r},{flag}\n")


def index_map_to_json(reports: List[IndexReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json_dict() for r in reports], fh, indent=1,
                  sort_keys=True)
