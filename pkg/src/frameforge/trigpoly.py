"""Sparse trigonometric polynomials with exact rational frequencies.

A polynomial is stored as a map ``Fraction -> coefficient``.  Coefficients may
be any numeric type closed under ``+`` and ``*`` (float, complex, int,
Fraction, mpmath numbers); exact types stay exact through every operation,
which is what the brute-force identity checks in :mod:`frameforge.localization`
rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import mpmath
import numpy as np

from .errors import CapExceeded

# FFT fast path: both spectra integer, combined support above this many terms.
FFT_MIN_TERMS = 512
# Relative pruning threshold after floating-point convolution (53-bit mantissa).
FFT_PRUNE = 2.0 ** -(53 - 8)
DEFAULT_EXPANSION_CAP = 10**6


def as_freq(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are accepted only when they are exactly representable
        return Fraction(x)
    raise TypeError(f"frequency must be rational, got {type(x).__name__}")


def _is_zero(c) -> bool:
    return c == 0


class TrigPoly:
    """Immutable finite sum  sum_j a_j exp(2 pi i sigma_j t)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Fraction, object] = {}
        for freq, coef in items:
            f = as_freq(freq)
            acc[f] = acc[f] + coef if f in acc else coef
        self._terms = {f: c for f, c in acc.items() if not _is_zero(c)}

    @classmethod
    def _trusted(cls, terms: dict) -> "TrigPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        return obj

    @classmethod
    def constant(cls, c=1) -> "TrigPoly":
        return cls({0: c})

    # -- accessors -------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms))

    def __getitem__(self, freq):
        return self._terms.get(as_freq(freq), 0)

    coefficient = __getitem__

    @property
    def spectrum(self) -> list[Fraction]:
        return sorted(self._terms)

    @property
    def degree(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        return max(abs(f) for f in self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def has_integer_spectrum(self) -> bool:
        return all(f.denominator == 1 for f in self._terms)

    @property
    def is_analytic(self) -> bool:
        return all(f >= 0 for f in self._terms)

    @property
    def is_real(self) -> bool:
        for f, c in self._terms.items():
            other = self._terms.get(-f, 0)
            if other != _conj(c):
                return False
        return True

    def coefficients(self) -> np.ndarray:
        return np.array([complex(self._terms[f]) for f in self.spectrum])

    def map_coefficients(self, fn) -> "TrigPoly":
        return TrigPoly({f: fn(c) for f, c in self._terms.items()})

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly._trusted({f: -c for f, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return mul(self, other)
        return TrigPoly({f: c * other for f, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        body = ", ".join(f"{f}: {c!r}" for f, c in sorted(self._terms.items()))
        return f"TrigPoly({{{body}}})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for f, c in self._terms.items():
            out += complex(c) * np.exp(2j * np.pi * float(f) * t)
        return out

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        terms = []
        for f in self.spectrum:
            c = complex(self._terms[f])
            terms.append({"freq": str(f), "re": c.real, "im": c.imag})
        return {"terms": terms}

    @classmethod
    def from_json(cls, obj: dict) -> "TrigPoly":
        terms = {}
        for t in obj["terms"]:
            c = complex(t["re"], t["im"])
            terms[Fraction(t["freq"])] = c.real if c.imag == 0 else c
        return cls(terms)


def _conj(c):
    conj = getattr(c, "conjugate", None)
    return conj() if conj is not None else c


def add(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    out = dict(a._terms)
    for f, c in b._terms.items():
        if f in out:
            s = out[f] + c
            if _is_zero(s):
                del out[f]
            else:
                out[f] = s
        else:
            out[f] = c
    return TrigPoly._trusted(out)


def _is_floating(poly: TrigPoly) -> bool:
    return any(isinstance(c, (float, complex, np.floating, np.complexfloating)) for _, c in poly.items())


def _all_real(poly: TrigPoly) -> bool:
    return all(not isinstance(c, (complex, np.complexfloating)) or c.imag == 0 for _, c in poly.items())


def _dense(poly: TrigPoly):
    freqs = [int(f) for f in poly._terms]
    lo, hi = min(freqs), max(freqs)
    arr = np.zeros(hi - lo + 1, dtype=complex)
    for f, c in poly._terms.items():
        arr[int(f) - lo] = complex(c)
    return lo, arr


def _use_fft(a: TrigPoly, b: TrigPoly) -> bool:
    if len(a) + len(b) <= FFT_MIN_TERMS:
        return False
    if not (a.has_integer_spectrum and b.has_integer_spectrum):
        return False
    if not (_is_floating(a) or _is_floating(b)):
        return False
    span_a = int(max(a._terms) - min(a._terms)) + 1
    span_b = int(max(b._terms) - min(b._terms)) + 1
    # dense enough that an FFT of the combined span beats the sparse product
    return span_a + span_b <= 8 * (len(a) + len(b)) + 64


def mul_direct(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    integer = a.has_integer_spectrum and b.has_integer_spectrum
    # int keys are much cheaper than Fraction keys in the inner loop
    ta = [(int(f) if integer else f, c) for f, c in a._terms.items()]
    tb = [(int(f) if integer else f, c) for f, c in b._terms.items()]
    out: dict = {}
    get = out.get
    for fa, ca in ta:
        for fb, cb in tb:
            f = fa + fb
            prev = get(f)
            out[f] = ca * cb if prev is None else prev + ca * cb
    return TrigPoly._trusted({Fraction(f): c for f, c in out.items() if not _is_zero(c)})


def mul_fft(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    lo_a, xa = _dense(a)
    lo_b, xb = _dense(b)
    n = len(xa) + len(xb) - 1
    size = 1 << (n - 1).bit_length()
    prod = np.fft.ifft(np.fft.fft(xa, size) * np.fft.fft(xb, size))[:n]
    real = _all_real(a) and _all_real(b)
    mags = np.abs(prod)
    cut = FFT_PRUNE * mags.max() if n else 0.0
    keep = np.nonzero(mags > cut)[0]
    lo = lo_a + lo_b
    if real:
        return TrigPoly._trusted({Fraction(lo + int(i)): float(prod[i].real) for i in keep})
    return TrigPoly._trusted({Fraction(lo + int(i)): complex(prod[i]) for i in keep})


def mul(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    """Product of two polynomials (exact convolution of the coefficient maps)."""
    if a.is_zero or b.is_zero:
        return TrigPoly()
    if _use_fft(a, b):
        return mul_fft(a, b)
    return mul_direct(a, b)


def dilate(P: TrigPoly, nu) -> TrigPoly:
    nu = as_freq(nu)
    if nu <= 0:
        raise ValueError("dilation factor must be positive")
    return TrigPoly._trusted({f * nu: c for f, c in P._terms.items()})


def partial_sum(P: TrigPoly, r) -> TrigPoly:
    r = as_freq(r)
    return TrigPoly._trusted({f: c for f, c in P._terms.items() if abs(f) <= r})


def coeff_norm(P: TrigPoly, p) -> float:
    """l^p norm of the coefficient multiset (sup norm for ``p = inf``)."""
    mags = [abs(complex(c)) for c in P._terms.values()]
    if not mags:
        return 0.0
    if p == math.inf:
        return max(mags)
    if p < 1:
        raise ValueError("p must be >= 1")
    return math.fsum(m**p for m in mags) ** (1.0 / p)


@dataclass(frozen=True)
class FactoredProduct:
    """Unexpanded product  prod_j P_j(base**j t)  over integer-spectrum factors."""

    factors: tuple
    base: int

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if int(self.base) != self.base or self.base < 1:
            raise ValueError("base must be a positive integer")
        object.__setattr__(self, "base", int(self.base))
        for j, P in enumerate(self.factors):
            if not P.has_integer_spectrum:
                raise ValueError(f"factor {j} does not have integer spectrum")
            if not self.base > 2 * P.degree:
                raise ValueError(f"base {self.base} must exceed 2*deg(factor {j}) = {2 * P.degree}")

    def __len__(self):
        return len(self.factors)

    @property
    def term_estimate(self) -> int:
        out = 1
        for P in self.factors:
            out *= len(P)
        return out

    @property
    def degree(self) -> int:
        return sum(int(P.degree) * self.base**j for j, P in enumerate(self.factors))

    def zero_coefficient(self):
        """The constant term, equal to the product of the factors' constant terms."""
        out = 1
        for P in self.factors:
            out = out * P[0]
        return out


def expand(F: FactoredProduct, cap: int = DEFAULT_EXPANSION_CAP) -> TrigPoly:
    """Fully expand a factored product; frequencies are distinct by construction."""
    if F.term_estimate > cap:
        raise CapExceeded(f"expansion needs {F.term_estimate} terms, cap is {cap}")
    freqs = [0]
    coefs = [1]
    scale = 1
    for P in F.factors:
        pf = [int(f) * scale for f in P._terms]
        pc = list(P._terms.values())
        freqs = [a + b for a in freqs for b in pf]
        coefs = [a * b for a in coefs for b in pc]
        scale *= F.base
    return TrigPoly({Fraction(f): c for f, c in zip(freqs, coefs)})


def factored_norm(F: FactoredProduct, p, prec: int = 128):
    """prod_j ||P_j||_{A^p}, accumulated in the log domain."""
    with mpmath.workprec(prec):
        log_total = mpmath.mpf(0)
        for P in F.factors:
            mags = [mpmath.mpf(abs(complex(c))) for c in P._terms.values()]
            if not mags:
                return mpmath.mpf(0)
            if p == math.inf:
                log_total += mpmath.log(max(mags))
            else:
                log_total += mpmath.log(mpmath.fsum(m**p for m in mags)) / p
        return mpmath.exp(log_total)

