"""Triangle, trapezoid and nonnegative kernels on the circle.

Closed forms (n != 0)::

    triangle   D(n) = sin(pi n h)^2 / (h pi^2 n^2),   D(0) = h
    trapezoid  T(n) = D(n) (1 + 2 cos 2 pi n h)
    phi        F(n) = [n == 0] + D(n) (6 - (1 + 2 cos 2 pi n h) 2 cos 2 pi n a)

The triangle coefficient is the square of the box coefficient divided by h,
since the triangle of half-width h is (1/h) * box_h convolved with itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import BoundViolated
from .trigpoly import TrigPoly


class Kind(str, enum.Enum):
    TRIANGLE = "triangle"
    TRAPEZOID = "trapezoid"
    NONNEG_PHI = "nonneg"


@dataclass(frozen=True)
class KernelSpec:
    kind: Kind
    h: Fraction
    a: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "h", Fraction(self.h))
        if self.a is not None:
            object.__setattr__(self, "a", Fraction(self.a))
        h = self.h
        if self.kind is Kind.TRIANGLE and not 0 < h < Fraction(1, 2):
            raise ValueError("triangle kernel needs 0 < h < 1/2")
        if self.kind is Kind.TRAPEZOID and not 0 < h < Fraction(1, 4):
            raise ValueError("trapezoid kernel needs 0 < h < 1/4")
        if self.kind is Kind.NONNEG_PHI:
            if not 0 < h < Fraction(1, 8):
                raise ValueError("nonnegative kernel needs 0 < h < 1/8")
            if self.a is None:
                object.__setattr__(self, "a", Fraction(1, 4))
            if not 2 * h < self.a < Fraction(1, 2) - 2 * h:
                raise ValueError("nonnegative kernel needs 2h < a < 1/2 - 2h")

    @property
    def tail_factor(self) -> int:
        """Multiple of the triangle coefficient that dominates |coefficient| for n != 0."""
        return {Kind.TRIANGLE: 1, Kind.TRAPEZOID: 3, Kind.NONNEG_PHI: 12}[self.kind]


def triangle(h) -> KernelSpec:
    return KernelSpec(Kind.TRIANGLE, h)


def trapezoid(h) -> KernelSpec:
    return KernelSpec(Kind.TRAPEZOID, h)


def nonneg_phi(h, a=Fraction(1, 4)) -> KernelSpec:
    return KernelSpec(Kind.NONNEG_PHI, h, a)


def coeff(spec: KernelSpec, n: int, prec: int = 128):
    """Fourier coefficient ``n`` of the kernel as an mpmath float."""
    with mpmath.workprec(prec):
        h = mpmath.mpf(spec.h.numerator) / spec.h.denominator
        if n == 0:
            tri = h
        else:
            tri = mpmath.sinpi(n * h) ** 2 / (h * mpmath.pi**2 * n**2)
        if spec.kind is Kind.TRIANGLE:
            return +tri
        trap_factor = 1 + 2 * mpmath.cospi(2 * n * h)
        if spec.kind is Kind.TRAPEZOID:
            return tri * trap_factor
        a = mpmath.mpf(spec.a.numerator) / spec.a.denominator
        nu_hat = trap_factor * 2 * mpmath.cospi(2 * n * a)
        return (1 if n == 0 else 0) + tri * (6 - nu_hat)


def _frac_mod1(n: np.ndarray, x: Fraction) -> np.ndarray:
    # n*x mod 1 evaluated exactly in integers before converting to float
    num, den = x.numerator, x.denominator
    return ((n * num) % den) / den


def triangle_coeffs(h: Fraction, n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=np.int64)
    hf = float(h)
    s = np.sin(np.pi * _frac_mod1(n, Fraction(h)))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = s * s / (hf * np.pi**2 * n.astype(float) ** 2)
    return np.where(n == 0, hf, out)


def coeffs(spec: KernelSpec, n) -> np.ndarray:
    """Vectorized float64 coefficients for integer array ``n``."""
    n = np.asarray(n, dtype=np.int64)
    tri = triangle_coeffs(spec.h, n)
    if spec.kind is Kind.TRIANGLE:
        return tri
    trap_factor = 1 + 2 * np.cos(2 * np.pi * _frac_mod1(n, spec.h))
    if spec.kind is Kind.TRAPEZOID:
        return tri * trap_factor
    nu_hat = trap_factor * 2 * np.cos(2 * np.pi * _frac_mod1(n, spec.a))
    return np.where(n == 0, 1.0, 0.0) + tri * (6 - nu_hat)


def tail_bound_A(spec: KernelSpec, d: int) -> float:
    """Bound on sum_{|n|>d} |coefficient|, from D(n) <= 1/(h pi^2 n^2)."""
    return spec.tail_factor * 2.0 / (float(spec.h) * math.pi**2 * d)


def tail_bound_p(spec: KernelSpec, d: int, p: float) -> float:
    """Bound on the l^p norm of the coefficients with |n| > d (integral comparison)."""
    if p == 1:
        return tail_bound_A(spec, d)
    hp = float(spec.h) * math.pi**2
    log_pow = math.log(2.0) - p * math.log(hp) + (1 - 2 * p) * math.log(d) - math.log(2 * p - 1)
    return spec.tail_factor * math.exp(log_pow / p)


@dataclass(frozen=True)
class Truncation:
    spec: KernelSpec
    degree: int
    poly: TrigPoly
    tail_A: float

    def tail_p(self, p: float) -> float:
        return tail_bound_p(self.spec, self.degree, p)


def truncate(spec: KernelSpec, d: int) -> Truncation:
    """Partial sum S_d of the kernel with a certified bound on the discarded tail."""
    if d < 1:
        raise ValueError("truncation degree must be >= 1")
    n = np.arange(-d, d + 1)
    c = coeffs(spec, n)
    poly = TrigPoly({int(k): float(v) for k, v in zip(n, c) if v != 0.0})
    return Truncation(spec, d, poly, tail_bound_A(spec, d))


def closed_form_bound(spec: KernelSpec, p: float) -> float:
    """Closed-form A^p bound: h^{(p-1)/p} times 1, 3 or 12."""
    return spec.tail_factor * float(spec.h) ** ((p - 1) / p)


def _default_degree(spec: KernelSpec) -> int:
    return max(4096, int(math.ceil(64 / spec.h)))


@dataclass(frozen=True)
class NormReport:
    kind: str
    h: Fraction
    p: float
    degree: int
    lower: float
    upper: float
    bound: float
    sharp_lower: float | None
    ok: bool

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "h": str(self.h),
            "p": self.p,
            "degree": self.degree,
            "computed_lower": self.lower,
            "computed_upper": self.upper,
            "closed_form_bound": self.bound,
            "sharp_lower": self.sharp_lower,
            "ok": self.ok,
        }


def truncated_norm(spec: KernelSpec, p: float, d: int) -> float:
    """l^p norm of the coefficients |n| <= d (of phi - 1 for the nonnegative kernel)."""
    n = np.arange(-d, d + 1)
    c = np.abs(coeffs(spec, n))
    if spec.kind is Kind.NONNEG_PHI:
        c[d] = abs(c[d] - 1.0)
    return math.fsum((c**p).tolist()) ** (1.0 / p)


def norm_bound_check(spec: KernelSpec, p: float, d: int | None = None, strict: bool = True) -> NormReport:
    """Compare the truncated-series norm (plus tail) with the closed-form bound.

    ``lower`` is the norm of S_d, a certified lower bound for the full norm;
    ``upper`` adds the tail bound.  A lower value above the closed-form bound
    can only be an implementation bug and raises :class:`BoundViolated`.
    """
    d = d or _default_degree(spec)
    lower = truncated_norm(spec, p, d)
    tail = tail_bound_p(spec, d, p)
    upper = (lower**p + tail**p) ** (1.0 / p)
    bound = closed_form_bound(spec, p)
    slack = 1e-12 * bound
    ok = lower <= bound + slack
    sharp = None
    if spec.kind is Kind.NONNEG_PHI:
        sharp = float(spec.h) ** ((p - 1) / p)
        ok = ok and upper >= sharp
    if strict and not ok:
        raise BoundViolated(f"{spec.kind.value} h={spec.h} p={p}: norm in [{lower}, {upper}], bound {bound}")
    return NormReport(spec.kind.value, spec.h, p, d, lower, upper, bound, sharp, ok)


# -- time-domain evaluation (exact, rational arguments) ---------------------

def _wrap(t: Fraction) -> Fraction:
    t = t - math.floor(t)
    return t - 1 if t >= Fraction(1, 2) else t


def triangle_at(h: Fraction, t) -> Fraction:
    t = abs(_wrap(Fraction(t)))
    return max(Fraction(0), 1 - t / h)


def trapezoid_at(h: Fraction, t) -> Fraction:
    t = abs(_wrap(Fraction(t)))
    if t <= h:
        return Fraction(1)
    return max(Fraction(0), 2 - t / h)


def phi_at(spec: KernelSpec, t) -> Fraction:
    t = Fraction(t)
    h, a = spec.h, spec.a
    return 1 + 6 * triangle_at(h, t) - trapezoid_at(h, t + a) - trapezoid_at(h, t - a)


def breakpoints(spec: KernelSpec) -> list[Fraction]:
    h, a = spec.h, spec.a
    pts = {Fraction(0), h, -h, a, -a}
    for s in (a, -a):
        for off in (-2 * h, -h, h, 2 * h):
            pts.add(s + off)
    return sorted(pts)


@dataclass(frozen=True)
class NonnegReport:
    breakpoint_values: dict
    min_value: Fraction
    vanishes_on_windows: bool
    coeff_range: int
    min_coeff: float
    min_factor: float
    zero_coeff: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "breakpoints": [{"t": str(t), "phi": str(v)} for t, v in self.breakpoint_values.items()],
            "min_value": str(self.min_value),
            "vanishes_on_windows": self.vanishes_on_windows,
            "coeff_range": self.coeff_range,
            "min_coeff": self.min_coeff,
            "min_factor": self.min_factor,
            "zero_coeff": self.zero_coeff,
            "ok": self.ok,
        }


def nonneg_check(spec: KernelSpec, n_max: int = 10_000, strict: bool = True) -> NonnegReport:
    """Certify phi >= 0 at its breakpoints, phi = 0 on [+-a-h, +-a+h], and phi_hat >= 0.

    phi is piecewise linear with breakpoints among those listed, so
    nonnegativity at the breakpoints is global nonnegativity.
    """
    if spec.kind is not Kind.NONNEG_PHI:
        raise ValueError("nonneg_check applies to the nonnegative kernel only")
    h, a = spec.h, spec.a
    values = {t: phi_at(spec, t) for t in breakpoints(spec)}
    min_value = min(values.values())
    vanishes = all(phi_at(spec, s + off) == 0 for s in (a, -a) for off in (-h, 0, h))
    # no breakpoint strictly inside a window besides its centre
    inside = [t for t in values if any(s - h < t < s + h and t != s for s in (a, -a))]
    vanishes = vanishes and not inside

    n = np.arange(-n_max, n_max + 1)
    tri = triangle_coeffs(h, n)
    trap_factor = 1 + 2 * np.cos(2 * np.pi * _frac_mod1(n, h))
    factor = 6 - trap_factor * 2 * np.cos(2 * np.pi * _frac_mod1(n, a))
    c = np.where(n == 0, 1.0, 0.0) + tri * factor
    # sign argument: triangle coefficients >= 0 and 6 - nu_hat >= 0 (|nu_hat| <= 6)
    min_factor = float(factor.min())
    min_coeff = float(c.min())
    coef_ok = bool((tri >= 0).all()) and min_factor >= -1e-12
    ok = min_value >= 0 and vanishes and coef_ok and c[n_max] == 1.0
    if strict and not ok:
        raise BoundViolated(f"nonnegative kernel check failed for h={h}, a={a}")
    return NonnegReport(values, min_value, vanishes, n_max, min_coeff, min_factor, float(c[n_max]), ok)
