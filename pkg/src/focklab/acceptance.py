"""Acceptance criteria, runnable as suites from the CLI and from pytest.

Each criterion is a function returning a CriterionResult with a pass
flag, a one-line detail, and the raw evidence.  Tolerances are pinned
here, not configurable: these are the exit criteria of the build.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import algebra, fredholm, symbols, toeplitz, traces
from .symbols import HalfPlaneSwitch, Phase, SwitchProfile
from .traces import Arena, PairSpec, parse_polynomial

TRACE_SCHEDULE = (32, 64, 96, 128)
INDEX_SCHEDULE_PHASE = (64, 96, 128)
INDEX_SCHEDULE_SWITCH = (96, 128, 160)
MAP_SCHEDULE_SQUARE = (96, 128, 160)
MAP_SCHEDULE_DISC = (144, 176, 208)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)


_memo: Dict[str, object] = {}


def _memoized(key: str, thunk: Callable):
    if key not in _memo:
        _memo[key] = thunk()
    return _memo[key]


def _step_pair(arena=Arena.lowest(), profile=SwitchProfile("step")) -> PairSpec:
    return PairSpec.square(profile, None, math.pi / 2, arena)


def _trace(key: str, pair: PairSpec, tolerance: float = 1e-3):
    return _memoized(
        "trace:" + key,
        lambda: traces.commutator_trace(pair, TRACE_SCHEDULE, None, tolerance))


# ---------------------------------------------------------------------------
# criterion 1: exact ladder algebra
# ---------------------------------------------------------------------------

def criterion_01_exact_algebra() -> CriterionResult:
    rng = np.random.default_rng(20240917)
    tol = 1e-12
    worst = 0.0

    def rand_state(budget=40, deg=8, terms=6):
        coeffs = {}
        for _ in range(terms):
            m, n = int(rng.integers(0, deg)), int(rng.integers(0, deg))
            coeffs[(m, n)] = complex(rng.normal(), rng.normal())
        return algebra.PolyState(coeffs, budget)

    def dist(u, v):
        d = u - v
        scale = max(u.max_coeff(), v.max_coeff(), 1.0)
        return d.max_coeff() / scale

    for _ in range(120):
        u = rand_state()
        v = rand_state()
        comm = algebra.apply_A(algebra.apply_C(u)) - algebra.apply_C(algebra.apply_A(u))
        worst = max(worst, dist(comm, u))
        lhs = algebra.inner_product(algebra.apply_C(u), v)
        rhs = algebra.inner_product(u, algebra.apply_A(v))
        # rounding is relative to the mass of the sesquilinear form
        scale = max(algebra.state_norm(algebra.apply_C(u)) * algebra.state_norm(v),
                    1.0)
        worst = max(worst, abs(lhs - rhs) / scale)
    for j in range(5):
        for _ in range(20):
            u = rand_state(budget=40, deg=6)
            worst = max(worst, dist(algebra.apply_Vj_adjoint(algebra.apply_Vj(u, j), j),
                                    algebra.apply_P(u)))
            worst = max(worst, dist(algebra.apply_Vj(algebra.apply_Vj_adjoint(u, j), j),
                                    algebra.apply_Pj(u, j)))
    for j in range(5):
        for k in range(13):
            e = algebra.level_basis(j, k, budget=40)
            worst = max(worst, dist(algebra.number_op(e.state), e.state.scale(j)))
    passed = worst <= tol
    return CriterionResult(
        "01-exact-algebra", passed,
        f"max relative deviation {worst:.2e} (tol {tol:.0e})",
        {"worst": worst})


# ---------------------------------------------------------------------------
# criterion 2: closing 4D Gaussian integral
# ---------------------------------------------------------------------------

def criterion_02_gaussian_integral() -> CriterionResult:
    t0 = time.time()
    val = traces.kubo_integral_direct(48)
    elapsed = time.time() - t0
    target = -1j / (2 * math.pi)
    err = abs(val - target)
    passed = err <= 1e-6 and elapsed < 5.0
    return CriterionResult(
        "02-gaussian-integral", passed,
        f"value {val:.12f}, |err| {err:.2e} (tol 1e-6), {elapsed:.2f}s",
        {"err": err, "elapsed": elapsed})


# ---------------------------------------------------------------------------
# criterion 3: strip-overlap inner integral
# ---------------------------------------------------------------------------

def criterion_03_inner_integral() -> CriterionResult:
    step = SwitchProfile("step")
    samples = [
        (1j, 1.0), (0.5 + 0.2j, 0.3 - 0.9j), (-0.7 + 1.1j, -0.4 + 0.2j),
        (1.0 + 0.0j, 1.0), (2j, 0.5 + 0.5j), (0.25 - 0.75j, -1.0),
        (-1.5 + 0.5j, 0.8 + 0.1j), (0.1 + 0.9j, 1.2 - 0.3j),
        (1.1 - 0.2j, -0.6 - 0.6j), (0.33 + 0.77j, 0.4),
    ]
    worst = 0.0
    for theta in (math.pi / 2, math.pi / 3):
        cot = math.cos(theta) / math.sin(theta)
        for x, y in samples:
            got = traces.inner_integral_check(step, step, theta, x, y)
            want = -y.real * (x.imag + cot * x.real)
            worst = max(worst, abs(got - want))
    passed = worst <= 1e-10
    return CriterionResult(
        "03-inner-integral", passed,
        f"max |polygon - analytic| {worst:.2e} (tol 1e-10)", {"worst": worst})


# ---------------------------------------------------------------------------
# criteria 4-7: commutator traces
# ---------------------------------------------------------------------------

def _trace_check(name, est, target_mod_2pi, rel_tol):
    mod = 2 * math.pi * abs(est.value)
    re_frac = abs(est.value.real) / abs(est.value)
    ok = (abs(mod - target_mod_2pi) <= rel_tol * target_mod_2pi
          and est.stabilized and re_frac <= 0.05)
    detail = (f"2pi|tr| = {mod:.6f} (target {target_mod_2pi}, tol {rel_tol:.0%}), "
              f"stabilized={est.stabilized} gap={est.gap:.1e}, re/|v|={re_frac:.1e}")
    return ok, detail, {"mod2pi": mod, "gap": est.gap, "stabilized": est.stabilized}


def criterion_04_lowest_level_trace() -> CriterionResult:
    est = _trace("step-lll", _step_pair())
    ok, detail, data = _trace_check("lll", est, 1.0, 0.05)
    return CriterionResult("04-lowest-level-trace", ok, detail, data)


def criterion_05_level1_trace() -> CriterionResult:
    est = _trace("step-level1", _step_pair(Arena.level(1)))
    ok, detail, data = _trace_check("level1", est, 1.0, 0.05)
    return CriterionResult("05-level-1-trace", ok, detail, data)


def criterion_06_stacked_traces() -> CriterionResult:
    est1 = _trace("step-stacked1", _step_pair(Arena.stacked(1)))
    ok1, d1, _ = _trace_check("stacked1", est1, 2.0, 0.07)
    est2 = _trace("step-stacked2", _step_pair(Arena.stacked(2)))
    ok2, d2, _ = _trace_check("stacked2", est2, 3.0, 0.10)
    rep = traces.cross_term_traces(1, _step_pair(Arena.stacked(1)), N=96)
    cross = 2 * math.pi * abs(rep.total)
    ok3 = cross <= 0.05
    passed = ok1 and ok2 and ok3
    return CriterionResult(
        "06-stacked-traces", passed,
        f"l=1: {d1}; l=2: {d2}; |2pi cross| = {cross:.2e} (tol 0.05)",
        {"cross": cross})


def criterion_07_switch_independence() -> CriterionResult:
    base = _trace("step-lll", _step_pair())
    worst = 0.0
    details = []
    for kind, a in (("smooth-erf", 1.0), ("linear-ramp", 1.0)):
        est = _trace(f"{kind}-lll", _step_pair(profile=SwitchProfile(kind, a)))
        delta = 2 * math.pi * abs(est.value - base.value)
        worst = max(worst, delta)
        details.append(f"{kind}: stabilized={est.stabilized} shift={delta:.2e}")
    passed = worst <= traces.DEFAULT_TOLERANCE
    return CriterionResult(
        "07-switch-independence", passed,
        "; ".join(details) + f" (tol {traces.DEFAULT_TOLERANCE})",
        {"worst_shift": worst})


# ---------------------------------------------------------------------------
# criterion 8: shift weights
# ---------------------------------------------------------------------------

def criterion_08_shift_weights() -> CriterionResult:
    rep = fredholm.weighted_shift_analysis(1001)
    a = rep.weights
    checks = {
        "a0": abs(a[0] - math.sqrt(math.pi) / 2) <= 1e-12,
        "ratio-identity": rep.mp_ratio_err <= 1e-12,
        "strictly-increasing": rep.monotone,
        "a500-limit": abs(a[500] - 1.0) <= 1.5e-3,
        "telescoped-partial-trace": rep.partial_trace_err <= 1e-12,
        "a500sq-limit": abs(a[500] ** 2 - 1.0) <= 3e-3,
        "hyponormal": rep.hyponormal,
    }
    passed = all(checks.values())
    bad = [k for k, v in checks.items() if not v]
    return CriterionResult(
        "08-shift-weights", passed,
        ("all checks pass" if passed else f"failing: {bad}")
        + f"; |a500-1|={abs(a[500]-1):.2e}, identity err {rep.mp_ratio_err:.1e}"
          f" (float route {rep.ratios_identity_err:.1e})",
        {"checks": {k: bool(v) for k, v in checks.items()}})


# ---------------------------------------------------------------------------
# criterion 9: index values
# ---------------------------------------------------------------------------

def criterion_09_index_values() -> CriterionResult:
    results = []
    ph = fredholm.PhaseFamily(0)
    for lam in (0.0, 0.3, 0.5j):
        r = fredholm.fredholm_index(ph, lam, INDEX_SCHEDULE_PHASE)
        results.append(("phase", lam, r.index, -1))
    sw = _memoized("family:switch", fredholm.SwitchPairFamily)
    for lam in (0.5 + 0.5j, 0.35 + 0.35j, 0.3 + 0.6j, 0.65 + 0.4j):
        r = fredholm.fredholm_index(sw, lam, INDEX_SCHEDULE_SWITCH)
        results.append(("switch", lam, r.index, -1))
    for lam in (2 + 2j, -0.5 - 0.5j):
        r = fredholm.fredholm_index(sw, lam, INDEX_SCHEDULE_SWITCH)
        results.append(("switch", lam, r.index, 0))
    ph1 = fredholm.PhaseFamily(1)
    r = fredholm.fredholm_index(ph1, 0.3, INDEX_SCHEDULE_PHASE)
    results.append(("phase-level-1", 0.3, r.index, -1))
    bad = [(f, str(lam), got, want) for (f, lam, got, want) in results
           if got != want]
    passed = not bad
    return CriterionResult(
        "09-index-values", passed,
        "all stable and correct" if passed else f"mismatches: {bad}",
        {"results": [(f, str(l), g, w) for (f, l, g, w) in results]})


# ---------------------------------------------------------------------------
# criterion 10: principal-function maps
# ---------------------------------------------------------------------------

def criterion_10_principal_function() -> CriterionResult:
    sq = fredholm.principal_function_reconstruct(
        _step_pair(), fredholm.RegionSpec("square", 9, 0.1),
        MAP_SCHEDULE_SQUARE, trace_estimate=_trace("step-lll", _step_pair()))
    disc = fredholm.principal_function_reconstruct(
        PairSpec.disc(), fredholm.RegionSpec("disc", 9, 0.1),
        MAP_SCHEDULE_DISC,
        trace_estimate=_trace("disc-lll", PairSpec.disc(), tolerance=5e-3))
    # cross-check tolerance: 5% of the 2pi-scaled target modulus
    sq_ok = (sq.mismatches == 0 and sq.unstable == 0
             and sq.crosscheck_gap <= 0.05 * 1.0)
    disc_ok = (disc.mismatches == 0 and disc.unstable == 0
               and disc.crosscheck_gap <= 0.05 * math.pi)
    passed = sq_ok and disc_ok
    return CriterionResult(
        "10-principal-function-maps", passed,
        f"square: {sq.mismatches} mismatch/{sq.unstable} unstable, "
        f"gap {sq.crosscheck_gap:.1e}; "
        f"disc: {disc.mismatches} mismatch/{disc.unstable} unstable, "
        f"gap {disc.crosscheck_gap:.1e}",
        {"square": sq.to_json_dict(), "disc": disc.to_json_dict()})


# ---------------------------------------------------------------------------
# criterion 11: polynomial trace functional
# ---------------------------------------------------------------------------

def criterion_11_helton_howe() -> CriterionResult:
    x, y = parse_polynomial("x"), parse_polynomial("y")
    cases = [
        ("x,y,square", x, y, _step_pair(), 1.0 / (2 * math.pi)),
        ("x^2,y,square", parse_polynomial("x^2"), y, _step_pair(),
         1.0 / (2 * math.pi)),
        ("xy,x+y,square", parse_polynomial("x*y"), parse_polynomial("x+y"),
         _step_pair(), 0.0),
        ("x,y,disc", x, y, PairSpec.disc(), 0.5),
    ]
    rows, passed = [], True
    for name, p, q, pair, target_mod in cases:
        # the phase pair converges like 1/N; its declared tolerance and
        # schedule account for that
        tol = 5e-3 if isinstance(pair.f, Phase) else 1e-3
        sched = (32, 64, 96, 128) if isinstance(pair.f, Phase) else (32, 64, 96)
        est = traces.helton_howe_trace(p, q, pair, schedule=sched,
                                       tolerance=tol)
        got = abs(est.value)
        if target_mod == 0.0:
            ok = got <= 0.01 / (2 * math.pi) and est.stabilized
        else:
            ok = abs(got - target_mod) <= 0.07 * target_mod and est.stabilized
        passed = passed and ok
        rows.append(f"{name}: |tr|={got:.6f} target={target_mod:.6f} ok={ok}")
    return CriterionResult("11-helton-howe", passed, "; ".join(rows), {})


# ---------------------------------------------------------------------------
# criterion 12: conjugation-expansion coefficients
# ---------------------------------------------------------------------------

# frozen from the exact-algebra oracle ahead of the build (j = 2 run of
# conjugated_symbol_expansion on f = x^2 y^2 at kmax 10, budget 30)
FROZEN_J2_COEFFS = (2.0, 0.5)


def criterion_12_conjugation_expansion() -> CriterionResult:
    f = parse_polynomial("x^2*y^2")
    c1, r1 = traces.conjugated_symbol_expansion(1, f, kmax=10)
    ok1 = abs(c1[0] - 1.0) <= 1e-10 and r1 <= 1e-10
    c2, r2 = traces.conjugated_symbol_expansion(2, f, kmax=10)
    ok2 = (max(abs(c2.real - np.array(FROZEN_J2_COEFFS))) <= 1e-10
           and abs(c2.imag).max() <= 1e-10 and r2 <= 1e-10)
    extra_ok = True
    for poly_text in ("x^2", "y^2", "x*y"):
        _, r = traces.conjugated_symbol_expansion(2, parse_polynomial(poly_text),
                                                  kmax=10)
        extra_ok = extra_ok and r <= 1e-10
    passed = ok1 and ok2 and extra_ok
    return CriterionResult(
        "12-conjugation-expansion", passed,
        f"j=1: c={c1.real.round(12).tolist()} res={r1:.1e}; "
        f"j=2: c={c2.real.round(12).tolist()} res={r2:.1e} "
        f"(frozen {FROZEN_J2_COEFFS})",
        {"c1": c1.real.tolist(), "c2": c2.real.tolist()})


# ---------------------------------------------------------------------------
# criterion 13: kernel estimates
# ---------------------------------------------------------------------------

def criterion_13_kernel_estimates() -> CriterionResult:
    rhos = np.linspace(0.0, 6.0, 25)
    tail_ok = True
    consts = {}
    for j in range(4):
        vals = np.array([symbols.kernel_tail_norm(j, r) for r in rhos])
        env = vals * np.exp(rhos ** 2 / 3.0)
        consts[j] = float(env.max())
        # bounded, and decaying once past the bulge
        tail_ok = tail_ok and np.isfinite(env).all() and env[-1] < env.max()
    overlap_ok = True
    seps = np.linspace(0.0, 6.0, 13)
    worst_tail = -math.inf
    for (j, k) in ((0, 0), (1, 0), (1, 1), (2, 1)):
        vals = np.array([symbols.kernel_overlap(j, k, 0.0, complex(d))
                         for d in seps])
        env = np.log(vals) + seps ** 2 / 8.0
        # envelope bounded above; attained away from the far end
        overlap_ok = overlap_ok and bool(env.argmax() < len(seps) - 2)
        worst_tail = max(worst_tail, float(env[-1] - env.max()))
    passed = tail_ok and overlap_ok
    return CriterionResult(
        "13-kernel-estimates", passed,
        f"tail envelope constants {consts}; overlap envelope max attained "
        f"in the bulk, end gap {worst_tail:.2f}",
        {"tail_constants": consts})


# ---------------------------------------------------------------------------
# criterion 14: dual-route assembly agreement
# ---------------------------------------------------------------------------

def criterion_14_dual_route() -> CriterionResult:
    worst = 0.0
    for kind, a in (("step", 0.0), ("smooth-erf", 0.5), ("linear-ramp", 0.5)):
        prof = SwitchProfile(kind, a)
        sep = toeplitz.assemble_switch_separable(prof, 0, 0, 41, 41)
        herm = toeplitz._switch_block_hermite(prof, 0, 0, 41)
        worst = max(worst, float(np.abs(sep - herm).max()))
    step = SwitchProfile("step")
    sep_y = toeplitz.assemble_switch_separable(step, 0, 0, 21, 21, axis="y")
    mat_x = toeplitz.toeplitz_lll(HalfPlaneSwitch(step),
                                  toeplitz.TruncationSpec(21, 0))
    rot = toeplitz.rotation_conjugate(mat_x, math.pi / 2)
    rot_err = float(np.abs(sep_y - rot.exposed).max())
    passed = worst <= 1e-8 and rot_err <= 1e-10
    return CriterionResult(
        "14-dual-route", passed,
        f"separable vs oscillator max err {worst:.2e} (tol 1e-8); "
        f"rotation covariance err {rot_err:.2e} (tol 1e-10)",
        {"dual": worst, "rotation": rot_err})


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

CRITERIA: Dict[str, Callable[[], CriterionResult]] = {
    "01-exact-algebra": criterion_01_exact_algebra,
    "02-gaussian-integral": criterion_02_gaussian_integral,
    "03-inner-integral": criterion_03_inner_integral,
    "04-lowest-level-trace": criterion_04_lowest_level_trace,
    "05-level-1-trace": criterion_05_level1_trace,
    "06-stacked-traces": criterion_06_stacked_traces,
    "07-switch-independence": criterion_07_switch_independence,
    "08-shift-weights": criterion_08_shift_weights,
    "09-index-values": criterion_09_index_values,
    "10-principal-function-maps": criterion_10_principal_function,
    "11-helton-howe": criterion_11_helton_howe,
    "12-conjugation-expansion": criterion_12_conjugation_expansion,
    "13-kernel-estimates": criterion_13_kernel_estimates,
    "14-dual-route": criterion_14_dual_route,
}

SUITES: Dict[str, List[str]] = {
    "algebra": ["01-exact-algebra", "12-conjugation-expansion"],
    "traces": ["02-gaussian-integral", "03-inner-integral",
               "04-lowest-level-trace", "05-level-1-trace",
               "06-stacked-traces", "07-switch-independence",
               "11-helton-howe"],
    "index": ["08-shift-weights", "09-index-values",
              "10-principal-function-maps"],
    "kernels": ["13-kernel-estimates"],
    "toeplitz": ["14-dual-route"],
    "all": list(CRITERIA),
}


def run_criterion(name: str) -> CriterionResult:
    return CRITERIA[name]()


def run_suite(suite: str) -> List[CriterionResult]:
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; have {sorted(SUITES)}")
    return [run_criterion(name) for name in SUITES[suite]]
