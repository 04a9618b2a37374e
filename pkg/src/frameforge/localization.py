"""Parameter solver, inequality-chain certificate, tiny-instance brute force, threshold scan.

The localization pair is

    gamma(t) = prod_{j<N} f(nu^j t),      P(t) = (1/N) sum_{j<N} g(nu^j t)

with f, g partial sums of two kernel expressions (``1 - trapezoid`` and
``1 - triangle/h`` in standard mode; ``phi`` and ``1 - triangle/h * cos(2 pi a .)``
in nonnegative mode).  Certification never builds f, g, gamma or P: every
quantity is a closed-form bound evaluated with interval arithmetic, so N and
the degrees may be arbitrarily large integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import iv

from .errors import CapExceeded, ChainBroken, Infeasible, MismatchDetected
from .trigpoly import FactoredProduct, TrigPoly, coeff_norm, dilate, expand, factored_norm, mul, partial_sum

GOLDEN = (1 + math.sqrt(5)) / 2
DEFAULT_PREC = 256
# Search caps for solve_params; N is located by doubling, so the cap is on bits.
MAX_N_BITS = 4096
MIN_H_LOG2 = -20000


@dataclass(frozen=True)
class LocalizationParams:
    p: float
    eps: float
    delta: float
    h: mpmath.mpf
    N: int
    deg_f: int
    deg_g: int
    nu: int
    nonneg: bool = False
    a: Fraction | None = None

    @property
    def p_eff(self) -> float:
        # A^p norms decrease in p, so every bound is certified at min(p, 2)
        return min(self.p, 2.0)

    @property
    def kernel_factor(self) -> int:
        return 12 if self.nonneg else 3

    @property
    def f_sup_factor(self) -> int:
        return 13 if self.nonneg else 4

    def to_json(self) -> dict:
        # mpf(...) would round to the context precision; keep the stored mantissa
        h = self.h if isinstance(self.h, mpmath.mpf) else mpmath.mpf(self.h)
        man, exp = h.man_exp
        return {
            "p": self.p,
            "eps": self.eps,
            "delta": self.delta,
            "h": f"{man}:{exp}",
            "h_approx": mpmath.nstr(self.h, 17),
            "N": str(self.N),
            "deg_f": str(self.deg_f),
            "deg_g": str(self.deg_g),
            "nu": str(self.nu),
            "nonneg": self.nonneg,
            "a": None if self.a is None else str(self.a),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LocalizationParams":
        man, exp = (int(x) for x in obj["h"].split(":"))
        with mpmath.workprec(max(53, abs(man).bit_length())):
            h = mpmath.mpf((man, exp))
        return cls(
            p=float(obj["p"]),
            eps=float(obj["eps"]),
            delta=float(obj["delta"]),
            h=h,
            N=int(obj["N"]),
            deg_f=int(obj["deg_f"]),
            deg_g=int(obj["deg_g"]),
            nu=int(obj["nu"]),
            nonneg=bool(obj["nonneg"]),
            a=None if obj.get("a") is None else Fraction(obj["a"]),
        )


# -- delta selection ---------------------------------------------------------

def delta_margins_hold(delta: float, eps: float, p: float) -> bool:
    """The two smallness requirements on delta, in exact-ish float arithmetic."""
    with mpmath.workprec(128):
        d = mpmath.mpf(delta)
        half = mpmath.mpf(eps) / 2
        gamma_part = (1 + d) - (1 - d) ** p + d**p < half**p
        product_part = d * (1 + d) ** (1 / mpmath.mpf(p)) < half
        return bool(gamma_part and product_part)


def choose_delta(eps: float, p: float, shrink: float = 0.9) -> float:
    """Bisect for the largest admissible delta, then step back by ``shrink``."""
    lo, hi = 0.0, min(1.0, eps / 2)
    if delta_margins_hold(hi, eps, p):
        return hi * shrink
    for _ in range(80):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if delta_margins_hold(mid, eps, p):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise Infeasible(f"no delta satisfies the margins for eps={eps}, p={p}")
    return lo * shrink


# -- the parameter system ----------------------------------------------------

def _system_holds(p: float, eps: float, delta: float, h, N: int, nonneg: bool) -> bool:
    """Float-domain (mpmath) check of the parameter system, used by the solver."""
    p = mpmath.mpf(p)
    d = mpmath.mpf(delta)
    if N <= 1 / mpmath.mpf(eps):
        return False
    k = 12 if nonneg else 3
    c = 13 if nonneg else 4
    if N * mpmath.log1p(k**p * h ** (p - 1)) >= mpmath.log1p(d):
        return False
    if not nonneg and N * mpmath.log1p(-3 * h) <= mpmath.log1p(-d):
        return False
    if nonneg and not h < mpmath.mpf(1) / 8:
        return False
    # c^p N^-p h^-1 < 1 - delta, in logs
    return p * mpmath.log(c) - p * mpmath.log(N) - mpmath.log(h) < mpmath.log1p(-d)


def _h_for(N: int, eta, p: float):
    return mpmath.exp((mpmath.log(eta) - mpmath.log(N)) / (p - 1))


def degrees_for(h, delta: float, nonneg: bool) -> tuple[int, int]:
    """Truncation orders making the certified product defect below delta.

    The defect bound is tail(f)(||g||_A + 1) + ||F||_A tail(g) with
    ||g||_A + 1 <= 1/h; each half is given delta/2.
    """
    k = 12 if nonneg else 3
    c = 13 if nonneg else 4
    scale = mpmath.mpf(1) / (h * h * mpmath.pi**2 * mpmath.mpf(delta))
    deg_f = int(mpmath.ceil(4 * k * scale)) + 1
    deg_g = int(mpmath.ceil(4 * c * scale)) + 1
    return deg_f, deg_g


def solve_params(p: float, eps: float, nonneg: bool = False, *, prec: int = DEFAULT_PREC,
                 max_n_bits: int = MAX_N_BITS) -> LocalizationParams:
    """Smallest N (and matching h, degrees, nu) satisfying the parameter system."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not 0 < eps < Fraction(2, 3):
        raise ValueError("eps must lie in (0, 2/3)")
    q = min(p, 2.0)
    if q * (q - 1) <= 1:
        raise Infeasible(f"p={p} is not above the golden-ratio threshold {GOLDEN:.6f}")
    delta = choose_delta(eps, q)
    with mpmath.workprec(prec):
        k = 12 if nonneg else 3
        eta = mpmath.log1p(mpmath.mpf(delta)) / mpmath.mpf(k) ** q

        def ok(N):
            return _system_holds(q, eps, delta, _h_for(N, eta, q), N, nonneg)

        hi = max(2, math.floor(1 / eps) + 1)
        while not ok(hi):
            hi *= 2
            if hi.bit_length() > max_n_bits:
                raise Infeasible(f"no N below 2^{max_n_bits} satisfies the system at p={p}")
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        N = hi
        h = _h_for(N, eta, q)
        if mpmath.log(h, 2) < MIN_H_LOG2:
            raise Infeasible("h underflows the configured floor")
        deg_f, deg_g = degrees_for(h, delta, nonneg)
    return LocalizationParams(
        p=p, eps=eps, delta=delta, h=h, N=N, deg_f=deg_f, deg_g=deg_g,
        nu=2 * (deg_f + deg_g) + 1, nonneg=nonneg, a=Fraction(1, 4) if nonneg else None,
    )


# -- certificate ---------------------------------------------------------------

@dataclass(frozen=True)
class ChainEntry:
    id: str
    lhs: object
    rhs: object
    margin: object

    @property
    def holds(self) -> bool:
        return self.margin > 0

    def to_json(self) -> dict:
        return {"id": self.id, "lhs": _fmt(self.lhs), "rhs": _fmt(self.rhs), "margin": _fmt(self.margin)}


def _fmt(x) -> str:
    if isinstance(x, (int, Fraction)):
        return str(x)
    return mpmath.nstr(x, 20)


@dataclass
class LocalizationCertificate:
    params: LocalizationParams
    chain: list = field(default_factory=list)
    conditions: dict = field(default_factory=dict)
    valid: bool = False
    prec: int = DEFAULT_PREC

    @property
    def failed(self) -> list[str]:
        return [e.id for e in self.chain if not e.holds]

    def entry(self, id_: str) -> ChainEntry:
        for e in self.chain:
            if e.id == id_:
                return e
        raise KeyError(id_)

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "chain": [e.to_json() for e in self.chain],
            "conditions": {k: (v if isinstance(v, bool) else _fmt(v)) for k, v in self.conditions.items()},
            "valid": self.valid,
            "failed": self.failed,
            "precision_bits": self.prec,
        }


class _Chain:
    """Collects 'lhs < rhs' entries with pessimistic interval margins."""

    def __init__(self):
        self.entries: list[ChainEntry] = []

    def less(self, id_, lhs, rhs):
        lhs_hi = lhs if isinstance(lhs, (int, Fraction)) else mpmath.mpf(iv.mpf(lhs).b)
        rhs_lo = rhs if isinstance(rhs, (int, Fraction)) else mpmath.mpf(iv.mpf(rhs).a)
        if isinstance(lhs_hi, Fraction) or isinstance(rhs_lo, Fraction):
            margin = _exact_margin(rhs_lo, lhs_hi)
        else:
            margin = rhs_lo - lhs_hi
        self.entries.append(ChainEntry(id_, lhs_hi, rhs_lo, margin))


def _exact_margin(rhs, lhs):
    def frac(x):
        if isinstance(x, (int, Fraction)):
            return Fraction(x)
        man, exp = mpmath.mpf(x).man_exp
        return Fraction(man) * Fraction(2) ** exp
    return frac(rhs) - frac(lhs)


def _ivpow(x, y):
    return iv.exp(y * iv.log(x))


def bounds(params: LocalizationParams, prec: int = DEFAULT_PREC) -> dict:
    """Interval enclosures of every closed-form quantity the chain uses.

    Shared by :func:`certify` and the tiny-instance soundness check, so both
    evaluate the same formulas.
    """
    iv.prec = prec
    q = iv.mpf(params.p_eff)
    h = iv.mpf(params.h)
    N = iv.mpf(params.N)
    k = iv.mpf(params.kernel_factor)
    pi2 = iv.pi**2
    one = iv.mpf(1)

    # sum_{n != 0} |kernel(n)|^p <= k^p h^{p-1}
    side = _ivpow(k, q) * _ivpow(h, q - 1)
    if params.nonneg:
        f0 = one
        F_A = 13 - 12 * h
    else:
        f0 = 1 - 3 * h
        F_A = 4 - 6 * h
    f_pp = _ivpow(f0, q) + side                   # ||f||_p^p upper bound
    log_f_pp = iv.log(f_pp)
    gamma_pp = iv.exp(N * log_f_pp)                # ||gamma||_p^p
    gamma0 = iv.exp(N * iv.log(f0))                # gamma_hat(0)
    g_pp = 1 / h - 1                               # ||g||_p^p
    g_A = (1 - h) / h
    tail_f = k * 2 / (h * pi2 * iv.mpf(params.deg_f))
    tail_g = 2 / (h * h * pi2 * iv.mpf(params.deg_g))
    defect = tail_f * (g_A + 1) + F_A * tail_g     # ||f g - f||_A
    f_pow_rest = iv.exp((N - 1) / (N * q) * log_f_pp)  # ||f||_p^{N-1}
    return {
        "p": q, "h": h, "N": N, "side": side, "f0": f0, "F_A": F_A, "f_pp": f_pp,
        "gamma_pp": gamma_pp, "gamma0": gamma0, "g_pp": g_pp, "g_A": g_A,
        "tail_f": tail_f, "tail_g": tail_g, "defect": defect, "f_pow_rest": f_pow_rest,
        "f_pp_rest": iv.exp((N - 1) / N * log_f_pp),
    }


def certify(params: LocalizationParams, prec: int | None = None, strict: bool = False) -> LocalizationCertificate:
    """Evaluate the whole inequality chain; valid iff every margin is positive."""
    prec = prec or DEFAULT_PREC
    old = iv.prec
    try:
        with mpmath.workprec(prec):
            cert = _certify(params, prec)
    finally:
        iv.prec = old
    if strict and not cert.valid:
        raise ChainBroken(f"chain fails at {', '.join(cert.failed) or 'structural check'}", cert)
    return cert


def _certify(params: LocalizationParams, prec: int) -> LocalizationCertificate:
    b = bounds(params, prec)
    q, h, N = b["p"], b["h"], b["N"]
    delta = iv.mpf(params.delta)
    eps = iv.mpf(params.eps)
    half = eps / 2
    one = iv.mpf(1)
    c = iv.mpf(params.f_sup_factor)
    ch = _Chain()

    # parameter system
    ch.less("N_exceeds_inverse_eps", one / eps, params.N)
    ch.less("gamma_growth_below_1_plus_delta", iv.exp(N * iv.log(1 + b["side"])), 1 + delta)
    if params.nonneg:
        ch.less("h_below_one_eighth", h, iv.mpf(1) / 8)
        a = Fraction(params.a)
        ch.less("a_window_lower", 2 * h, iv.mpf(a.numerator) / a.denominator)
        ch.less("a_window_upper", iv.mpf(a.numerator) / a.denominator, one / 2 - 2 * h)
    else:
        ch.less("zero_coefficient_above_1_minus_delta", 1 - delta, b["gamma0"])
    ch.less("block_term_system", _ivpow(c, q) * _ivpow(N, -q) / h, 1 - delta)
    ch.less("delta_margin_gamma", (1 + delta) - _ivpow(1 - delta, q) + _ivpow(delta, q), _ivpow(half, q))
    ch.less("delta_margin_product", delta * _ivpow(1 + delta, 1 / q), half)
    ch.less("product_defect_below_delta", b["defect"], delta)
    ch.less("dilation_separates_spectra", 2 * (params.deg_f + params.deg_g), params.nu)

    # (i): sup of P_hat is (1/N) sup_{n != 0} |g_hat(n)| <= 1/N
    cond_i = Fraction(1, params.N)
    ch.less("sup_coefficient_of_P", cond_i, eps)

    # (ii)
    if not params.nonneg:
        # in nonnegative mode f_hat(0) = 1 and this is an identity
        ch.less("f_norm_power", b["f_pp"], 1 + b["side"])
    ch.less("gamma_norm_power", b["gamma_pp"], 1 + delta)
    if params.nonneg:
        ii_pp = b["gamma_pp"] - 1
    else:
        g0 = b["gamma0"]
        ii_pp = b["gamma_pp"] - _ivpow(g0, q) + _ivpow(1 - g0, q)
    ch.less("gamma_minus_one", ii_pp, _ivpow(half, q))
    cond_ii = _ivpow(ii_pp, 1 / q)

    # (iii)
    prod_term = b["defect"] * b["f_pow_rest"]
    ch.less("gamma_times_P_minus_one_part", prod_term, half)
    cond_iii = prod_term + cond_ii
    ch.less("gamma_P_minus_one", cond_iii, eps)

    # (iv): S_l(P) = A + B, worst case s/N = 1 for the A part
    a_part = prod_term + _ivpow(b["gamma_pp"], 1 / q)
    ch.less("partial_sum_head", a_part, iv.mpf(2))
    ch.less("f_wiener_norm", b["F_A"], c)
    ch.less("g_norm_power", b["g_pp"], 1 / h)
    b_pp = _ivpow(N, -q) * _ivpow(b["F_A"], q) * b["g_pp"] * b["f_pp_rest"]
    ch.less("partial_sum_tail_power", b_pp, one)
    cond_iv = a_part + _ivpow(b_pp, 1 / q)
    ch.less("partial_sum_bound", cond_iv, iv.mpf(3))

    conditions = {
        "i": cond_i,
        "ii": mpmath.mpf(cond_ii.b),
        "iii": mpmath.mpf(cond_iii.b),
        "iv": mpmath.mpf(cond_iv.b),
    }
    structural = True
    if params.nonneg:
        # gamma_hat(0) = f_hat(0)^N = 1 exactly; nonnegativity follows from
        # phi_hat >= 0 and multiplicativity over disjoint dilated spectra.
        conditions["gamma_zero_is_one"] = True
        conditions["gamma_coefficients_nonnegative"] = True
        structural = params.nu > 2 * (params.deg_f + params.deg_g)
    cert = LocalizationCertificate(params, ch.entries, conditions, False, prec)
    cert.valid = structural and not cert.failed and conditions["iv"] <= 3
    return cert


def params_for(p: float, eps: float, N: int, nonneg: bool = False, prec: int = DEFAULT_PREC) -> LocalizationParams:
    """Parameters for a prescribed N, with h and the degrees from the same recipe as solve_params."""
    q = min(p, 2.0)
    delta = choose_delta(eps, q)
    with mpmath.workprec(prec):
        k = 12 if nonneg else 3
        eta = mpmath.log1p(mpmath.mpf(delta)) / mpmath.mpf(k) ** q
        h = _h_for(int(N), eta, q)
        deg_f, deg_g = degrees_for(h, delta, nonneg)
    return LocalizationParams(p, eps, delta, h, int(N), deg_f, deg_g, 2 * (deg_f + deg_g) + 1,
                              nonneg, Fraction(1, 4) if nonneg else None)


# -- tiny instances ------------------------------------------------------------

TINY_MAX_N = 4
TINY_MAX_DEG = 64


def tiny_params(p: float, N: int, h, deg_f: int, deg_g: int, *, eps: float = 0.5,
                delta: float = 0.01, nu: int | None = None, nonneg: bool = False) -> LocalizationParams:
    """Small parameter sets for brute-force checks; the parameter system is not required."""
    h = Fraction(h)
    if nu is None:
        nu = 2 * (deg_f + deg_g) + 1
    with mpmath.workprec(DEFAULT_PREC):
        h_mp = mpmath.mpf(h.numerator) / h.denominator
    return LocalizationParams(p, eps, delta, h_mp, N, deg_f, deg_g, nu, nonneg,
                              Fraction(1, 4) if nonneg else None)


def _h_fraction(h) -> Fraction:
    if isinstance(h, Fraction):
        return h
    man, exp = mpmath.mpf(h).man_exp
    return Fraction(man) * Fraction(2) ** exp


def _kernel_pair(params: LocalizationParams):
    """Coefficient arrays of f and g on [-deg, deg] (float64)."""
    from . import kernels

    h = _h_fraction(params.h)
    nf = np.arange(-params.deg_f, params.deg_f + 1)
    ng = np.arange(-params.deg_g, params.deg_g + 1)
    tri_g = kernels.triangle_coeffs(h, ng) / float(h)
    if params.nonneg:
        f = kernels.coeffs(kernels.nonneg_phi(h, params.a), nf)
        cos_a = np.cos(2 * np.pi * kernels._frac_mod1(ng, params.a))
        g = np.where(ng == 0, 1.0, 0.0) - tri_g * cos_a
    else:
        f = np.where(nf == 0, 1.0, 0.0) - kernels.coeffs(kernels.trapezoid(h), nf)
        g = np.where(ng == 0, 1.0, 0.0) - tri_g
    # the zero coefficient of g vanishes identically: h^-1 * h = 1
    g[ng == 0] = 0.0
    return nf, f, ng, g


@dataclass(frozen=True)
class TinyInstance:
    params: LocalizationParams
    f: TrigPoly
    g: TrigPoly
    gamma: FactoredProduct
    P: TrigPoly
    scale_bits: int
    f_int: TrigPoly
    g_int: TrigPoly


def materialize(params: LocalizationParams) -> TinyInstance:
    """Build f, g, gamma (factored) and P (expanded) for a tiny parameter set.

    Alongside the float polynomials, f and g are kept as exact integers scaled
    by 2^scale_bits, so polynomial identities can be checked exactly.
    """
    if params.N > TINY_MAX_N or max(params.deg_f, params.deg_g) > TINY_MAX_DEG:
        raise CapExceeded(f"tiny instances need N <= {TINY_MAX_N} and degrees <= {TINY_MAX_DEG}")
    nf, fc, ng, gc = _kernel_pair(params)
    f = TrigPoly({int(n): float(c) for n, c in zip(nf, fc)})
    g = TrigPoly({int(n): float(c) for n, c in zip(ng, gc)})
    bits = 0
    for c in list(fc) + list(gc):
        den = Fraction(float(c)).denominator
        bits = max(bits, den.bit_length() - 1)
    f_int = TrigPoly({k: int(Fraction(c) * 2**bits) for k, c in f.items()})
    g_int = TrigPoly({k: int(Fraction(c) * 2**bits) for k, c in g.items()})
    gamma = FactoredProduct([f] * params.N, params.nu)
    P = TrigPoly()
    for j in range(params.N):
        P = P + dilate(g, params.nu**j)
    P = P * (1.0 / params.N)
    return TinyInstance(params, f, g, gamma, P, bits, f_int, g_int)


def _blocks(inst: TinyInstance, l: int) -> tuple[int, int]:
    """(s, m) with S_l(P) = (1/N) sum_{j<s} g(nu^j t) + (1/N) S_m(g)(nu^s t)."""
    N, nu, d = inst.params.N, inst.params.nu, inst.params.deg_g
    s = 0
    while s < N - 1 and d * nu**s <= l:
        s += 1
    m = min(l // nu**s, d)
    return s, m


def _sparse_product_norm(gamma_f: np.ndarray, gamma_c: np.ndarray, Q: TrigPoly, p: float) -> float:
    if Q.is_zero:
        return 0.0
    qf = np.array([int(k) for k in Q.spectrum], dtype=np.int64)
    qc = np.array([float(Q[k]) for k in Q.spectrum])
    freqs = (gamma_f[:, None] + qf[None, :]).ravel()
    vals = (gamma_c[:, None] * qc[None, :]).ravel()
    uniq, inv = np.unique(freqs, return_inverse=True)
    summed = np.bincount(inv, weights=vals, minlength=uniq.size)
    return math.fsum((np.abs(summed) ** p).tolist()) ** (1 / p)


@dataclass
class BruteReport:
    norm_rel_error: float
    zero_coefficient_match: bool
    identity_holds: bool
    splits_checked: int
    splits_exact: bool
    worst_ratio: float
    bound_violations: list
    ok: bool = False


def brute_check(inst: TinyInstance, p: float | None = None, strict: bool = True) -> BruteReport:
    """Full-expansion cross-check of the factorization, the product identity, the split and the bound."""
    prm = inst.params
    p = prm.p if p is None else p
    N, nu, E = prm.N, prm.nu, inst.scale_bits

    # norm factorization and zero coefficient
    gamma = expand(inst.gamma)
    direct = coeff_norm(gamma, p)
    factored = float(factored_norm(inst.gamma, p))
    rel = abs(direct - factored) / factored
    zero_match = gamma[0] == inst.gamma.zero_coefficient()

    # gamma (P - 1) identity, everything scaled by N * 2^{E (N+1)}
    one = 2**E
    gamma_int = expand(FactoredProduct([inst.f_int] * N, nu))
    P_int = TrigPoly()
    for j in range(N):
        P_int = P_int + dilate(inst.g_int, nu**j)
    lhs = mul(gamma_int, P_int - N * one)
    defect_int = mul(inst.f_int, inst.g_int) - inst.f_int * one
    rhs = TrigPoly()
    for j in range(N):
        factors = [inst.f_int] * N
        factors[j] = defect_int
        rhs = rhs + expand(FactoredProduct(factors, nu))
    identity = lhs == rhs

    # partial-sum splits and the pointwise-in-l bound
    b = bounds(prm)
    with mpmath.workprec(DEFAULT_PREC):
        defect_term = float(mpmath.mpf((b["defect"] * b["f_pow_rest"]).b))
        gamma_norm = float(mpmath.mpf(iv.exp(iv.log(b["gamma_pp"]) / b["p"]).b))
        tail_coef = float(mpmath.mpf((b["F_A"] * iv.exp(iv.log(b["g_pp"]) / b["p"]) * b["f_pow_rest"]).b))
    gf = np.array([int(k) for k in gamma.spectrum], dtype=np.int64)
    gc = np.array([float(gamma[k]) for k in gamma.spectrum])
    levels = sorted({abs(int(k)) for k in P_int.spectrum} | {0})
    splits_exact = True
    worst = 0.0
    violations = []
    for l in levels:
        s, m = _blocks(inst, l)
        A = TrigPoly()
        for j in range(s):
            A = A + dilate(inst.g_int, nu**j)
        B = dilate(partial_sum(inst.g_int, m), nu**s)
        S = partial_sum(P_int, l)
        if S != A + B:
            splits_exact = False
        S_float = S * (1.0 / (N * one))
        value = _sparse_product_norm(gf, gc, S_float, p)
        bound = s / N * (defect_term + gamma_norm) + (tail_coef / N if m > 0 else 0.0)
        if value > bound:
            violations.append((l, value, bound))
        if bound > 0:
            worst = max(worst, value / bound)

    rep = BruteReport(rel, zero_match, identity, len(levels), splits_exact, worst, violations)
    rep.ok = rel <= 1e-12 and zero_match and identity and splits_exact and not violations
    if strict and not (identity and splits_exact):
        raise MismatchDetected("polynomial identity or split reassembly failed")
    return rep


# -- threshold scan ------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    p: float
    feasible: bool
    log_N: float | None = None
    delta: float | None = None
    h: float | None = None

    @property
    def N_min(self) -> int | None:
        if self.log_N is None:
            return None
        with mpmath.workprec(64 + int(self.log_N * 1.5)):
            return int(mpmath.nint(mpmath.exp(self.log_N)))


@dataclass
class ScanResult:
    eps: float
    rows: list
    log_N_cap: float
    h_min: float

    @property
    def transitions(self) -> int:
        flags = [r.feasible for r in self.rows]
        return sum(1 for a, b in zip(flags, flags[1:]) if a != b)

    @property
    def monotone(self) -> bool:
        seen = False
        for r in self.rows:
            if r.feasible:
                seen = True
            elif seen:
                return False
        return True

    @property
    def bracket(self) -> tuple[float, float] | None:
        for a, b in zip(self.rows, self.rows[1:]):
            if not a.feasible and b.feasible:
                return a.p, b.p
        return None

    def to_csv(self) -> str:
        lines = ["p,feasible,N_min"]
        for r in self.rows:
            n = str(r.N_min) if r.feasible else "cap"
            lines.append(f"{r.p:.6g},{int(r.feasible)},{n}")
        return "\n".join(lines) + "\n"


def _scan_point(p: float, eps: float, log_N_cap: float, h_min: float, delta_steps: int) -> ScanRow:
    q = min(p, 2.0)
    try:
        delta_max = choose_delta(eps, q, shrink=1.0)
    except Infeasible:
        return ScanRow(p, False)
    n_eps = math.floor(1 / eps) + 1
    best = None
    k_max = math.floor(-math.log2(h_min))
    log3 = math.log(3.0)
    for i in range(delta_steps):
        delta = delta_max * 2.0 ** (-i / 4)
        if not delta_margins_hold(delta, eps, q):
            continue
        lb = math.log(math.log1p(delta))
        lc = math.log(-math.log1p(-delta))
        for k in range(2, k_max + 1):
            log_h = -k * math.log(2.0)
            # minimal N from c^p N^-p h^-1 < 1 - delta
            log_nd = (q * math.log(4.0) - log_h - math.log1p(-delta)) / q
            if log_nd < 40:
                log_n = math.log(max(n_eps, math.floor(math.exp(log_nd)) + 1))
            else:
                log_n = max(math.log(n_eps), log_nd)
            if log_n > log_N_cap:
                continue
            x = math.exp(q * log3 + (q - 1) * log_h)
            if log_n + math.log(math.log1p(x)) >= lb:
                continue
            if log_n + math.log(-math.log1p(-3 * math.exp(log_h))) >= lc:
                continue
            if best is None or log_n < best.log_N:
                best = ScanRow(p, True, log_n, delta, math.exp(log_h))
    return best or ScanRow(p, False)


def scan_threshold(eps: float, p_grid, *, log_N_cap: float = 1e9, h_min: float = 1e-46,
                   delta_steps: int = 40) -> ScanResult:
    """Feasibility of the parameter system over a log grid of (delta, h), N minimal.

    ``log_N_cap`` bounds log N (natural log); h runs over powers of two down to h_min.
    """
    p_grid = [float(p) for p in p_grid]
    if any(not 1 < p <= 3 for p in p_grid):
        raise ValueError("p_grid must lie in (1, 3]")
    rows = [_scan_point(p, eps, log_N_cap, h_min, delta_steps) for p in p_grid]
    return ScanResult(eps, rows, log_N_cap, h_min)
