"""Bounded symbols on the plane and the 1D moment engine behind them.

Switch profiles eta are monotone-style interpolants with values in [0, 1],
identically 0 left of -a and identically 1 right of +a.  A half-plane
switch symbol is eta(Re(e^{-i theta} zeta)).  The catalog also covers
wedge indicators, the unimodular phase z/|z|, real polynomials, and
compactly supported bump profiles written as differences of switch
profiles.

All catalog profiles have closed-form Gaussian moments

    eta_moment(m) = int eta(x) x^m e^{-x^2} dx,

assembled from (incomplete) Gamma functions; the analytic tail beyond +a
is Gamma((m+1)/2, a^2)/2 in every case.  A quadrature cross-check lives
in the test suite.  The same closed forms are available through mpmath
for the high-precision assembly oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import special as sp

ERF_STEEPNESS = 6.0  # transition erf(6 x / a); erfc(6)/2 ~ 1e-17, below double rounding
MAX_MOMENT_ORDER = 200

PROFILE_KINDS = ("step", "linear-ramp", "smooth-erf", "smooth-cubic", "custom-sampled")


class MomentRangeError(ValueError):
    """Moment order beyond the stable evaluation range."""


# ---------------------------------------------------------------------------
# switch profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwitchProfile:
    """1D switch interpolant: 0 for x < -a, 1 for x > a, values in [0, 1]."""

    kind: str = "step"
    a: float = 0.0
    samples: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "step":
            if self.a != 0.0:
                raise ValueError("step profile has half-width a = 0")
        elif self.a <= 0.0:
            raise ValueError(f"{self.kind} profile requires half-width a > 0")
        if self.kind == "custom-sampled":
            xs = [x for x, _ in self.samples]
            if xs != sorted(xs):
                raise ValueError("custom samples must be sorted by x")
            if any(abs(x) > self.a for x in xs):
                raise ValueError("custom samples must lie within [-a, a]")

    def key(self) -> tuple:
        return ("profile", self.kind, self.a, self.samples)

    # -- pointwise evaluation (clamped to [0, 1] by construction) ----------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a = self.a
        if self.kind == "step":
            return np.where(x > 0, 1.0, np.where(x < 0, 0.0, 0.5))
        if self.kind == "linear-ramp":
            return np.clip((x + a) / (2 * a), 0.0, 1.0)
        if self.kind == "smooth-erf":
            return 0.5 * (1.0 + sp.erf(ERF_STEEPNESS * x / a))
        if self.kind == "smooth-cubic":
            t = np.clip((x + a) / (2 * a), 0.0, 1.0)
            return t * t * (3.0 - 2.0 * t)
        # custom-sampled: piecewise-linear through (-a, 0), samples, (a, 1)
        xs = [-a] + [p[0] for p in self.samples] + [a]
        ys = [0.0] + [min(max(p[1], 0.0), 1.0) for p in self.samples] + [1.0]
        return np.interp(x, xs, ys)

    # -- exact segment pieces ----------------------------------------------

    def _linear_pieces(self):
        """Profile restricted to [-a, a] as linear pieces (x0, x1, c0, c1).

        Valid for the piecewise-linear kinds (step has no middle part).
        """
        a = self.a
        if self.kind == "linear-ramp":
            return [(-a, a, 0.5, 0.5 / a)]
        if self.kind == "custom-sampled":
            xs = [-a] + [p[0] for p in self.samples] + [a]
            ys = [0.0] + [min(max(p[1], 0.0), 1.0) for p in self.samples] + [1.0]
            pieces = []
            for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
                if x1 <= x0:
                    continue
                slope = (y1 - y0) / (x1 - x0)
                pieces.append((x0, x1, y0 - slope * x0, slope))
            return pieces
        raise ValueError(f"{self.kind} is not piecewise linear")

    def antiderivative(self, x) -> float:
        """Exact antiderivative of the profile (zero at x = -a)."""
        a = self.a
        x = float(x)
        if self.kind == "step":
            return max(x, 0.0)
        if x <= -a:
            return 0.0
        if self.kind == "smooth-erf":
            c = ERF_STEEPNESS / a

            def F(t):
                return 0.5 * t + 0.5 * (t * sp.erf(c * t)
                                        + math.exp(-(c * t) ** 2) / (c * math.sqrt(math.pi)))

            return F(x) - F(-a)
        if self.kind == "smooth-cubic":
            # antiderivative of (-t^3 + 3 a^2 t + 2 a^3) / (4 a^3) on [-a, a]
            def H(t):
                return (-t ** 4 / 4 + 1.5 * a * a * t * t + 2 * a ** 3 * t) / (4 * a ** 3)

            return H(min(x, a)) - H(-a) + max(x - a, 0.0)
        # piecewise-linear kinds
        total = 0.0
        for (x0, x1, c0, c1) in self._linear_pieces():
            lo, hi = max(x0, -a), min(x1, x)
            if hi > lo:
                total += c0 * (hi - lo) + 0.5 * c1 * (hi * hi - lo * lo)
        if x > a:
            total += x - a
        return total


# ---------------------------------------------------------------------------
# Gaussian moments
# ---------------------------------------------------------------------------

def gauss_moment(m: int) -> float:
    """int_R y^m e^{-y^2} dy: zero for odd m, Gamma((m+1)/2) for even m."""
    if m < 0:
        raise ValueError("moment order must be >= 0")
    if m > MAX_MOMENT_ORDER:
        raise MomentRangeError(f"moment order {m} beyond cap {MAX_MOMENT_ORDER}")
    if m % 2:
        return 0.0
    return math.gamma((m + 1) / 2)


def _upper_tail(m: int, a: float) -> float:
    # int_a^inf x^m e^{-x^2} dx = Gamma((m+1)/2, a^2) / 2
    s = (m + 1) / 2
    return 0.5 * sp.gammaincc(s, a * a) * math.gamma(s)


def _segment_moment(m: int, x0: float, x1: float) -> float:
    """int_{x0}^{x1} x^m e^{-x^2} dx by signed incomplete-gamma pieces."""
    s = (m + 1) / 2

    def one_sided(c):  # int_0^c, c >= 0
        return 0.5 * sp.gammainc(s, c * c) * math.gamma(s)

    def signed(c):  # int_0^c for any sign of c
        if c >= 0:
            return one_sided(c)
        return (-1.0) ** (m + 1) * one_sided(-c)

    return signed(x1) - signed(x0)


def eta_moment(profile: SwitchProfile, m: int) -> float:
    """int eta(x) x^m e^{-x^2} dx, exact per profile kind.

    Always the analytic tail Gamma((m+1)/2, a^2)/2 plus a closed-form
    middle part on [-a, a].
    """
    if m < 0:
        raise ValueError("moment order must be >= 0")
    if m > MAX_MOMENT_ORDER:
        raise MomentRangeError(f"moment order {m} beyond cap {MAX_MOMENT_ORDER}")
    a = profile.a
    if profile.kind == "step":
        return 0.5 * math.gamma((m + 1) / 2)
    tail = _upper_tail(m, a)
    if profile.kind in ("linear-ramp", "custom-sampled"):
        mid = 0.0
        for (x0, x1, c0, c1) in profile._linear_pieces():
            mid += c0 * _segment_moment(m, x0, x1) + c1 * _segment_moment(m + 1, x0, x1)
        return tail + mid
    if profile.kind == "smooth-erf":
        c = ERF_STEEPNESS / a
        # middle over all of R: (1/2) gauss_moment + (1/2) int erf(cx) x^m e^{-x^2};
        # then swap the [a, inf) part for the exact tail (difference is
        # below double rounding for steepness 6 but we keep it tidy).
        half_sym = 0.5 * gauss_moment(m)
        if m % 2 == 0:
            odd_part = 0.0
        else:
            # int_R erf(cx) x^m e^{-x^2} dx
            #   = (2/sqrt(pi)) Gamma((m+2)/2) * c * 2F1(1/2, (m+2)/2; 3/2; -c^2)
            odd_part = (2.0 / math.sqrt(math.pi)) * math.gamma((m + 2) / 2) \
                * c * sp.hyp2f1(0.5, (m + 2) / 2, 1.5, -c * c)
        return half_sym + 0.5 * odd_part
    if profile.kind == "smooth-cubic":
        # eta(x) = (-x^3 + 3 a^2 x + 2 a^3) / (4 a^3) on [-a, a]
        mid = (-_segment_moment(m + 3, -a, a)
               + 3 * a * a * _segment_moment(m + 1, -a, a)
               + 2 * a ** 3 * _segment_moment(m, -a, a)) / (4 * a ** 3)
        return tail + mid
    raise ValueError(profile.kind)


def eta_moment_mp(profile: SwitchProfile, m: int, dps: int = 50):
    """mpmath version of eta_moment for the high-precision assembly oracle."""
    import mpmath as mp

    with mp.workdps(dps):
        a = mp.mpf(profile.a)
        s = mp.mpf(m + 1) / 2
        if profile.kind == "step":
            return mp.gamma(s) / 2

        def seg(mm, x0, x1):
            ss = mp.mpf(mm + 1) / 2

            def signed(c):
                c = mp.mpf(c)
                if c >= 0:
                    return mp.gammainc(ss, 0, c * c) / 2
                return (-1) ** (mm + 1) * mp.gammainc(ss, 0, c * c) / 2

            return signed(x1) - signed(x0)

        tail = mp.gammainc(s, a * a, mp.inf) / 2
        if profile.kind in ("linear-ramp", "custom-sampled"):
            mid = mp.mpf(0)
            for (x0, x1, c0, c1) in profile._linear_pieces():
                mid += c0 * seg(m, x0, x1) + c1 * seg(m + 1, x0, x1)
            return tail + mid
        if profile.kind == "smooth-erf":
            c = mp.mpf(ERF_STEEPNESS) / a
            half_sym = mp.gamma(s) / 2 if m % 2 == 0 else mp.mpf(0)
            if m % 2 == 0:
                return half_sym
            odd = (2 / mp.sqrt(mp.pi)) * mp.gamma(mp.mpf(m + 2) / 2) * c \
                * mp.hyp2f1(mp.mpf("0.5"), mp.mpf(m + 2) / 2, mp.mpf("1.5"), -c * c)
            return half_sym + odd / 2
        if profile.kind == "smooth-cubic":
            mid = (-seg(m + 3, -a, a) + 3 * a * a * seg(m + 1, -a, a)
                   + 2 * a ** 3 * seg(m, -a, a)) / (4 * a ** 3)
            return tail + mid
        raise ValueError(profile.kind)


def gauss_moment_mp(m: int, dps: int = 50):
    import mpmath as mp

    with mp.workdps(dps):
        if m % 2:
            return mp.mpf(0)
        return mp.gamma(mp.mpf(m + 1) / 2)


# ---------------------------------------------------------------------------
# symbol specifications
# ---------------------------------------------------------------------------

class SymbolSpec:
    """Base for bounded-symbol specifications; see the concrete variants."""

    tag = "abstract"

    def key(self) -> tuple:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class HalfPlaneSwitch(SymbolSpec):
    """eta(Re(e^{-i theta} zeta)); theta None means the fixed x-axis case."""

    profile: SwitchProfile = SwitchProfile("step")
    theta: Optional[float] = None

    tag = "half-plane-switch"

    def key(self):
        return (self.tag, self.profile.key(), self.theta)

    def to_dict(self):
        return {"type": self.tag, "profile": self.profile.kind,
                "a": self.profile.a, "theta": self.theta}


@dataclass(frozen=True)
class Wedge(SymbolSpec):
    """Indicator of the wedge s <= arg zeta <= t, with s < t < s + pi."""

    s: float
    t: float

    tag = "wedge"

    def __post_init__(self):
        if not (self.s < self.t < self.s + math.pi + 1e-12):
            raise ValueError("wedge requires s < t < s + pi")

    def key(self):
        return (self.tag, self.s, self.t)

    def to_dict(self):
        return {"type": self.tag, "s": self.s, "t": self.t}


@dataclass(frozen=True)
class Phase(SymbolSpec):
    """The unit-modulus symbol zeta/|zeta|, or its real/imaginary part."""

    part: str = "full"  # full | re | im | conj

    tag = "phase"

    def __post_init__(self):
        if self.part not in ("full", "re", "im", "conj"):
            raise ValueError("phase part must be full, re, im or conj")

    def key(self):
        return (self.tag, self.part)

    def to_dict(self):
        return {"type": self.tag, "part": self.part}


@dataclass(frozen=True)
class RealPolynomial(SymbolSpec):
    """Real polynomial sum c_{ab} x^a y^b, stored as ((a, b), c) pairs."""

    coeffs: Tuple[Tuple[Tuple[int, int], float], ...]

    tag = "real-polynomial"

    @staticmethod
    def from_dict_coeffs(d) -> "RealPolynomial":
        return RealPolynomial(tuple(sorted((tuple(k), float(v)) for k, v in d.items())))

    def as_dict(self) -> dict:
        return {k: v for k, v in self.coeffs}

    def degree(self) -> int:
        return max((a + b for (a, b), _ in self.coeffs), default=0)

    def key(self):
        return (self.tag, self.coeffs)

    def to_dict(self):
        return {"type": self.tag,
                "coeffs": {f"{a},{b}": c for (a, b), c in self.coeffs}}


@dataclass(frozen=True)
class CompactProfile(SymbolSpec):
    """Profile difference symbol sum_i c_i eta_i(Re(e^{-i theta} zeta)).

    Built from switch profiles so that compactly supported bump symbols
    reuse the validated switch machinery; a bump v with 0 <= v <= c
    supported in (-rho, rho) is c (xi_1 - xi_2) for switch profiles
    xi_1, xi_2 that agree outside the support.
    """

    terms: Tuple[Tuple[float, SwitchProfile], ...]
    theta: Optional[float] = None

    tag = "compact-profile"

    def key(self):
        return (self.tag, tuple((c, p.key()) for c, p in self.terms), self.theta)

    def to_dict(self):
        return {"type": self.tag, "theta": self.theta,
                "terms": [{"coef": c, "profile": p.kind, "a": p.a}
                          for c, p in self.terms]}


def tent_bump(rho: float, height: float = 1.0,
              theta: Optional[float] = None) -> CompactProfile:
    """Tent of the given height supported in (-rho, rho) as a profile difference."""
    xi1 = SwitchProfile("custom-sampled", rho, ((0.0, 1.0),))   # rises on [-rho, 0]
    xi2 = SwitchProfile("custom-sampled", rho, ((0.0, 0.0),))   # rises on [0, rho]
    return CompactProfile(((height, xi1), (-height, xi2)), theta)


def symbol_from_dict(d: dict) -> SymbolSpec:
    t = d["type"]
    if t == "half-plane-switch":
        prof = SwitchProfile(d.get("profile", "step"), float(d.get("a", 0.0)))
        return HalfPlaneSwitch(prof, d.get("theta"))
    if t == "wedge":
        return Wedge(float(d["s"]), float(d["t"]))
    if t == "phase":
        return Phase(d.get("part", "full"))
    if t == "real-polynomial":
        coeffs = {tuple(int(x) for x in k.split(",")): float(v)
                  for k, v in d["coeffs"].items()}
        return RealPolynomial.from_dict_coeffs(coeffs)
    if t == "compact-profile":
        terms = tuple((float(e["coef"]), SwitchProfile(e["profile"], float(e["a"])))
                      for e in d["terms"])
        return CompactProfile(terms, d.get("theta"))
    raise ValueError(f"unknown symbol type {t!r}")


# ---------------------------------------------------------------------------
# physical scale mapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LandauParameters:
    """Magnetic strength b > 0 and Fermi energy E."""

    b: float
    E: float = 0.0

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("magnetic strength b must be positive")


class LandauLevelError(ValueError):
    """Fermi energy does not sit strictly inside a spectral gap."""


def level_count(params: LandauParameters) -> int:
    """The unique l >= 0 with (2l+1) b < E < (2l+3) b."""
    b, E = params.b, params.E
    if E <= b:
        raise LandauLevelError(f"E = {E} is not above the lowest gap edge b = {b}")
    t = (E / b - 1.0) / 2.0
    ell = int(math.floor(t))
    if abs(t - round(t)) < 1e-12 and round(t) >= 0:
        raise LandauLevelError(f"E = {E} sits at the eigenvalue (2*{int(round(t))}+1) b")
    return ell


def scale_physical(sym: SymbolSpec, params: LandauParameters) -> SymbolSpec:
    """Map a physical symbol f to the dimensionless picture f((2/b)^{1/2} .).

    A switch window of half-width a becomes a * (b/2)^{1/2}: the rescaled
    symbol is constant wherever |(2/b)^{1/2} x| > a.  Scale-free symbols
    (step switches, wedges, the phase) are unchanged.
    """
    factor = math.sqrt(params.b / 2.0)
    if isinstance(sym, HalfPlaneSwitch):
        p = sym.profile
        if p.kind == "step":
            return sym
        new_samples = tuple((x * factor, y) for x, y in p.samples)
        return HalfPlaneSwitch(SwitchProfile(p.kind, p.a * factor, new_samples),
                               sym.theta)
    if isinstance(sym, CompactProfile):
        terms = tuple((c, SwitchProfile(p.kind, p.a * factor,
                                        tuple((x * factor, y) for x, y in p.samples)))
                      for c, p in sym.terms)
        return CompactProfile(terms, sym.theta)
    if isinstance(sym, (Wedge, Phase)):
        return sym
    raise ValueError(f"no physical scaling rule for {type(sym).__name__}")


# ---------------------------------------------------------------------------
# kernel estimates
# ---------------------------------------------------------------------------

def kernel_tail_norm(j: int, rho: float) -> float:
    """Norm of the level-j kernel vector outside a disc of radius rho.

    || chi_{C \\ B(z, rho)} k_z^{(j)} || = Gamma(j+1, rho^2)^{1/2},
    independent of z by translation structure of the integrand.
    """
    if rho < 0:
        raise ValueError("radius must be >= 0")
    return math.sqrt(sp.gammaincc(j + 1, rho * rho) * math.gamma(j + 1))


class QuadratureError(RuntimeError):
    pass


def _overlap_gauss_hermite(j: int, k: int, delta: float, nodes: int) -> float:
    x, w = np.polynomial.hermite.hermgauss(nodes)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    r1sq = (X - delta) ** 2 + Y ** 2
    r2sq = (X + delta) ** 2 + Y ** 2
    vals = r1sq ** (j / 2.0) * r2sq ** (k / 2.0)
    return float((W * vals).sum()) / math.pi


def kernel_overlap(j: int, k: int, z: complex, w: complex,
                   rtol: float = 5e-3) -> float:
    """<|k_z^{(j)}|, |k_w^{(k)}|>, by Gauss-Hermite quadrature centered
    between z and w.  The value depends on z, w only through |z - w|.

    Odd powers put half-integer kinks in the integrand, so convergence
    of the tensor rule is algebraic; the nested-rule error estimate is
    checked against the (per-mille scale) default tolerance and reported
    on failure.
    """
    delta = abs(z - w) / 2.0
    coarse = _overlap_gauss_hermite(j, k, delta, 96)
    fine = _overlap_gauss_hermite(j, k, delta, 144)
    damp = math.exp(-delta * delta)
    err = abs(fine - coarse) * damp
    value = fine * damp
    if err > max(rtol * abs(value), 1e-8):
        raise QuadratureError(
            f"kernel overlap quadrature achieved error estimate {err:.3e}"
        )
    return value
