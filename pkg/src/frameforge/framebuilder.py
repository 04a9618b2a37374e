"""Finite-stage construction of a frame of weighted exponentials {w(t) e^{2 pi i lambda t}}.

Stage k fits Q_k (frequencies sigma(n), N_k < n < N'_k) so that u_{k-1} Q_k
approximates the k-th Haar function, builds a small localization pair
(gamma_k, P_k), dilates both by nu_k and sets u_k = u_{k-1} gamma_k(nu_k t).
The frame spectrum is the union of spec(P_k(nu_k t) Q_k(t)); coefficient
functionals come from a finite-section inversion of the perturbed basis.

Everything lives on the Fourier side as grid samples.  Desk-scale pairs are
far from the regime where every target can be met, so by default missed
targets are recorded as diagnostics ("demo-grade") rather than raised;
``strict=True`` turns each miss into :class:`StageFailed`.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import apspace
from . import localization as loc
from .apspace import (
    Grid,
    SampledSpectrum,
    haar_dual,
    haar_dual_norm,
    haar_phi,
    lp_sum,
    mul_periodic,
    norm_ap,
    seminorm_triple,
)
from .errors import CollisionDetected, NotDiagonallyDominant, SingularSystem, StageFailed
from .trigpoly import TrigPoly, coeff_norm, dilate, expand as expand_product, mul, partial_sum

SIGMA_BITS = 20
COND_LIMIT = 1e12


@dataclass(frozen=True)
class BuildConfig:
    p: float = 1.8
    stages: int = 2
    grid_step: Fraction = Fraction(1, 64)
    fit_half_width: int = 32
    bump_radius: float = 1.0
    bump_center: float = -1.5
    bump_scale: float = 0.25
    window: int = 16
    tiny_N: int = 1
    tiny_h: Fraction = Fraction(1, 8)
    tiny_deg_f: int = 4
    tiny_deg_g: int = 4
    irls_tol: float = 1e-6
    irls_max_iter: int = 500
    strict: bool = False

    def to_json(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = str(v) if isinstance(v, Fraction) else v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "BuildConfig":
        kw = dict(obj)
        for k in ("grid_step", "tiny_h"):
            kw[k] = Fraction(kw[k])
        return cls(**kw)


def sigma(n: int, bits: int = SIGMA_BITS) -> Fraction:
    """n + 1/(10(n+1)), rounded down to a multiple of 2^-bits (so |sigma(n) - n| < 1/(10(n+1)))."""
    return n + Fraction((1 << bits) // (10 * (n + 1)), 1 << bits)


def eta_target(k: int, p: float) -> float:
    """Fit targets with 3 sum_k ||phi*_k|| eta_k < 1."""
    return 2.0**-k / (3 * haar_dual_norm(k, p)) * (1 - 2.0**-20)


def bump_u0(grid: Grid, radius: float, scale: float, center: float = 0.0) -> SampledSpectrum:
    """scale * exp(1 - 1/(1 - ((x - center)/radius)^2)) near center: smooth, compactly supported."""
    x = grid.nodes - center
    out = np.zeros(x.shape)
    inside = np.abs(x) < radius
    out[inside] = scale * np.exp(1 - 1 / (1 - (x[inside] / radius) ** 2))
    return SampledSpectrum(grid, out, math.inf)


# -- shifting on a fixed grid --------------------------------------------------

def shift_samples(u: SampledSpectrum, lam: Fraction, grid: Grid) -> np.ndarray:
    """Samples of u_hat(x - lam) on ``grid`` with linear interpolation for the off-grid part."""
    base = u.on_grid(grid).samples if u.grid != grid else u.samples
    steps = Fraction(lam) / grid.step
    a = math.floor(steps)
    t = float(steps - a)
    out = _roll(base, a)
    if t:
        out = (1 - t) * out + t * _roll(base, a + 1)
    return out


def _roll(s: np.ndarray, a: int) -> np.ndarray:
    out = np.zeros_like(s)
    n = s.size
    if a >= n or -a >= n:
        return out
    if a >= 0:
        out[a:] = s[:n - a]
    else:
        out[:n + a] = s[-a:]
    return out


def weighted_exponential_sum(u: SampledSpectrum, terms: dict, grid: Grid) -> np.ndarray:
    """Fourier samples of u(t) * sum_lam c_lam e^{2 pi i lam t}."""
    out = np.zeros(grid.size, dtype=complex)
    for lam in sorted(terms):
        out += complex(terms[lam]) * shift_samples(u, lam, grid)
    return out


# -- fitting ---------------------------------------------------------------------

@dataclass
class FitResult:
    Q: TrigPoly
    achieved: float
    iterations: int
    condition: float
    history: list


def fit_Q(u_prev: SampledSpectrum, phi: SampledSpectrum, freqs, p: float, eta: float | None = None, *,
          tol: float = 1e-6, max_iter: int = 500, x0=None) -> FitResult:
    """Minimize ||phi - u_prev * sum_n d_n e^{2 pi i freq_n t}||_{A^p(R)} by IRLS."""
    freqs = [Fraction(f) for f in freqs]
    if not freqs or any(f <= 0 for f in freqs) or len(set(freqs)) != len(freqs):
        raise ValueError("freqs must be nonempty, positive and distinct")
    lo = min(phi.grid.x_min, u_prev.grid.x_min + min(freqs))
    hi = max(phi.grid.x_max, u_prev.grid.x_max + max(freqs) + 1)
    step = phi.grid.step
    grid = Grid(math.floor(lo / step) * step, math.ceil(hi / step) * step, step)
    B = np.stack([shift_samples(u_prev, f, grid) for f in freqs], axis=1)
    target = phi.on_grid(grid).samples
    rows = np.nonzero(np.any(B != 0, axis=1) | (target != 0))[0]
    B, target = B[rows], target[rows]
    real = not np.iscomplexobj(B) or (np.all(B.imag == 0) and np.all(target.imag == 0))
    if real:
        B, target = B.real, target.real
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem("shifted copies are numerically dependent on the grid", cond)
    w_step = float(step)

    def objective(d):
        return (w_step * lp_sum(target - B @ d, p)) ** (1 / p)

    d = np.linalg.lstsq(B, target, rcond=None)[0] if x0 is None else np.asarray(x0, dtype=B.dtype)
    best_d, best = d, objective(d)
    history = [best]
    it = 0
    if p != 2:
        prev = best
        for it in range(1, max_iter + 1):
            r = np.abs(target - B @ d)
            floor = max(1e-12, 1e-8 * float(r.max(initial=0.0)))
            wts = np.maximum(r, floor) ** (p - 2)
            sw = np.sqrt(wts)
            d = np.linalg.lstsq(B * sw[:, None], target * sw, rcond=None)[0]
            val = objective(d)
            history.append(val)
            if val < best:
                best, best_d = val, d
            if prev - val < tol * prev and val >= prev * (1 - tol):
                break
            prev = val
    Q = TrigPoly({f: (float(c) if real else complex(c)) for f, c in zip(freqs, best_d)})
    return FitResult(Q, best, it, cond, history)


# -- parameter choices -----------------------------------------------------------

def choose_eps_k(eta_k: float, k: int, triple_norm: float, q_l1: float, history: float = 0.0) -> Fraction:
    """Largest power of two eps with eps (1 + |||u|||)(1 + ||Q_k||_1 + history) < 2^-k eta_k."""
    rhs = Fraction(eta_k) / 2**k
    factor = (1 + Fraction(triple_norm)) * (1 + Fraction(q_l1) + Fraction(history))
    eps = Fraction(1)
    while eps * factor >= rhs:
        eps /= 2
    return eps


def choose_nu_k(Q: TrigPoly, P: TrigPoly, R_k: Fraction, support_diameter: Fraction) -> tuple[int, Fraction]:
    """Smallest nu ordering the sub-blocks, clearing (-R_k, R_k) and separating shifted supports."""
    spec_q = Q.spectrum
    qmin, qmax = spec_q[0], spec_q[-1]
    ms = sorted({abs(int(m)) for m in P.spectrum})
    m_min, m_max = ms[0], ms[-1]
    # integer part of |lambda| must be distinct across sub-blocks: nu > 2 max n
    nu = max(math.floor(2 * qmax) + 1, math.floor(qmax - qmin) + 1, math.floor(support_diameter) + 1)
    while m_min * nu - qmax <= R_k + 1:
        nu += 1
    R_next = m_max * nu + qmax + 1
    return nu, Fraction(R_next)


def lemma_conditions(inst: loc.TinyInstance, p: float) -> dict:
    """Directly measured conditions of the localization pair (brute force)."""
    gamma = expand_product(inst.gamma)
    P = inst.P
    one = TrigPoly.constant(1.0)
    levels = sorted({abs(int(k)) for k in P.spectrum} | {0})
    cond_iv = max(coeff_norm(mul(gamma, partial_sum(P, l)), p) for l in levels)
    return {
        "P_hat_zero": float(P[0]) if P[0] else 0.0,
        "i": coeff_norm(P, math.inf),
        "ii": coeff_norm(gamma - one, p),
        "iii": coeff_norm(mul(gamma, P) - one, p),
        "iv": cond_iv,
    }


# -- stages ------------------------------------------------------------------

@dataclass
class FrameStage:
    k: int
    eta_k: float
    eps_k: Fraction
    nu_k: int
    N_k: int
    N_prime_k: int
    Q_k: TrigPoly
    gamma_k_params: loc.LocalizationParams
    P_k: TrigPoly
    gamma_k: TrigPoly
    achieved_error: float
    R_k: Fraction
    lemma: dict
    u_step: float
    u_step_bound: float
    triple_norm_prev: float
    misses: list = field(default_factory=list)

    @property
    def d(self) -> dict:
        return {int(math.floor(f)): c for f, c in self.Q_k.items()}

    def to_json(self) -> dict:
        return {
            "k": self.k, "eta_k": self.eta_k, "eps_k": str(self.eps_k), "nu_k": str(self.nu_k),
            "N_k": self.N_k, "N_prime_k": self.N_prime_k, "Q_k": self.Q_k.to_json(),
            "gamma_k_params": self.gamma_k_params.to_json(), "P_k": self.P_k.to_json(),
            "gamma_k": self.gamma_k.to_json(), "achieved_error": self.achieved_error,
            "R_k": str(self.R_k), "lemma": self.lemma, "u_step": self.u_step,
            "u_step_bound": self.u_step_bound, "triple_norm_prev": self.triple_norm_prev,
            "misses": self.misses,
        }

    @classmethod
    def from_json(cls, o: dict) -> "FrameStage":
        return cls(
            k=o["k"], eta_k=o["eta_k"], eps_k=Fraction(o["eps_k"]), nu_k=int(o["nu_k"]),
            N_k=o["N_k"], N_prime_k=o["N_prime_k"], Q_k=TrigPoly.from_json(o["Q_k"]),
            gamma_k_params=loc.LocalizationParams.from_json(o["gamma_k_params"]),
            P_k=TrigPoly.from_json(o["P_k"]), gamma_k=TrigPoly.from_json(o["gamma_k"]),
            achieved_error=o["achieved_error"], R_k=Fraction(o["R_k"]), lemma=o["lemma"],
            u_step=o["u_step"], u_step_bound=o["u_step_bound"],
            triple_norm_prev=o["triple_norm_prev"], misses=list(o["misses"]),
        )


@dataclass
class LambdaEntry:
    lam: Fraction
    n_j: int
    k: int
    m: int
    n: int
    coefficient: complex   # d_{n,k} * P_hat_k(m)


@dataclass
class FramePlan:
    config: BuildConfig
    u0: SampledSpectrum
    stages: list
    w: SampledSpectrum
    lambdas: list = field(default_factory=list)
    G: np.ndarray | None = None
    G_inv: np.ndarray | None = None
    deviation: float = math.nan
    K_hat: float = math.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def grade(self) -> str:
        return "demo-grade" if any(s.misses for s in self.stages) or self.diagnostics.get("misses") else "targets-met"

    def sigma(self, n: int) -> Fraction:
        return sigma(n)


def _misses(k: int, checks: list[tuple[str, bool]], strict: bool) -> list[str]:
    out = [name for name, ok in checks if not ok]
    if out and strict:
        raise StageFailed(k, "missed " + ", ".join(out))
    return out


def advance_stage(state: dict, k: int, cfg: BuildConfig) -> FrameStage:
    """One induction step; ``state`` carries u_prev, R_k and the running l^1 history."""
    u_prev: SampledSpectrum = state["u"]
    p = cfg.p
    fit_grid = Grid(-cfg.fit_half_width, cfg.fit_half_width, cfg.grid_step)
    phi = haar_phi(k, fit_grid, p)
    eta = eta_target(k, p)
    # the window starts at n = N_k + 1 >= k, so |sigma(n) - n| < 1/(10 (n+1)) < 1/(10 k)
    N_k = max(1, k - 1)
    N_prime = N_k + cfg.window + 1
    freqs = [sigma(n) for n in range(N_k + 1, N_prime)]
    fit = fit_Q(u_prev, phi, freqs, p, eta, tol=cfg.irls_tol, max_iter=cfg.irls_max_iter)
    Q = fit.Q
    q_l1 = coeff_norm(Q, 1)
    triple = seminorm_triple(u_prev)
    eps_k = choose_eps_k(eta, k, triple, q_l1, state["history"])

    params = loc.tiny_params(p, cfg.tiny_N, cfg.tiny_h, cfg.tiny_deg_f, cfg.tiny_deg_g)
    inst = loc.materialize(params)
    lemma = lemma_conditions(inst, p)
    gamma = expand_product(inst.gamma)
    P = inst.P

    sup = u_prev.support()
    diam = (sup[1] - sup[0]) + max(freqs) - min(freqs) if sup else Fraction(0)
    nu, R_next = choose_nu_k(Q, P, state["R"], diam)

    u_next = mul_periodic(u_prev, dilate(gamma, nu))
    step_norm = norm_ap(u_next - u_prev, p).value
    step_bound = triple * lemma["ii"]

    checks = [
        ("fit_error_below_eta", fit.achieved < eta),
        ("P_hat_zero_vanishes", lemma["P_hat_zero"] == 0),
        ("sup_P_below_eps", lemma["i"] < eps_k),
        ("gamma_minus_one_below_eps", lemma["ii"] < eps_k),
        ("gamma_P_minus_one_below_eps", lemma["iii"] < eps_k),
        ("partial_sums_below_3", lemma["iv"] < 3),
        ("u_step_below_2^-k", step_norm < 2.0**-k),
        ("u_step_within_seminorm_bound", step_norm <= step_bound * (1 + 1e-9) + u_next.error),
    ]
    misses = _misses(k, checks, cfg.strict)
    stage = FrameStage(k, eta, eps_k, nu, N_k, N_prime, Q, params, P, gamma, fit.achieved, state["R"],
                       lemma, step_norm, step_bound, triple, misses)
    state["u"] = u_next
    state["R"] = R_next
    state["history"] += coeff_norm(P, 1) * q_l1
    return stage


def build(cfg: BuildConfig | None = None) -> FramePlan:
    cfg = cfg or BuildConfig()
    half = max(cfg.fit_half_width, math.ceil(cfg.bump_radius + abs(cfg.bump_center)) + 1)
    grid = Grid(-half, half, cfg.grid_step)
    u0 = bump_u0(grid, cfg.bump_radius, cfg.bump_scale, cfg.bump_center)
    state = {"u": u0, "R": Fraction(1), "history": 0.0}
    stages = [advance_stage(state, k, cfg) for k in range(1, cfg.stages + 1)]
    plan = FramePlan(cfg, u0, stages, state["u"])
    plan.lambdas = enumerate_lambda(plan)
    functionals(plan)
    return plan


# -- spectrum ------------------------------------------------------------------

@dataclass
class LambdaReport:
    count: int
    min_gap: Fraction
    n_increasing: bool
    max_offset_ratio: float   # max over j of ||lambda_j| - n_j| * 10 k


def enumerate_lambda(plan: FramePlan) -> list[LambdaEntry]:
    """All lambda = m nu_k + sigma(n), sorted by |lambda|; checks distinctness and integer labels."""
    entries = []
    for st in plan.stages:
        for m in st.P_k.spectrum:
            m = int(m)
            pm = st.P_k[m]
            for f, dn in st.Q_k.items():
                n = int(math.floor(f))
                lam = m * st.nu_k + f
                n_j = abs(m) * st.nu_k + (1 if m > 0 else -1) * n
                entries.append(LambdaEntry(lam, n_j, st.k, m, n, complex(pm) * complex(dn)))
    entries.sort(key=lambda e: (abs(e.lam), e.lam))
    seen = set()
    for e in entries:
        if e.lam in seen:
            raise CollisionDetected(f"lambda {e.lam} occurs twice")
        seen.add(e.lam)
    return entries


def lambda_report(entries: list[LambdaEntry]) -> LambdaReport:
    lams = sorted(e.lam for e in entries)
    gap = min((b - a for a, b in zip(lams, lams[1:])), default=Fraction(0))
    ns = [e.n_j for e in entries]
    inc = all(a < b for a, b in zip(ns, ns[1:])) and (not ns or ns[0] > 0)
    ratio = max((float(abs(abs(e.lam) - e.n_j)) * 10 * e.k for e in entries), default=0.0)
    return LambdaReport(len(entries), gap, inc, ratio)


# -- functionals ---------------------------------------------------------------

def _plan_grid(plan: FramePlan) -> Grid:
    sup = plan.w.support()
    reach = max((abs(e.lam) for e in plan.lambdas), default=Fraction(0))
    ext = max(abs(sup[0]), abs(sup[1])) if sup else Fraction(0)
    half = math.ceil(reach + ext) + 2
    half = max(half, plan.config.fit_half_width)
    return Grid(-half, half, plan.config.grid_step)


def perturbed_element(plan: FramePlan, k: int, grid: Grid | None = None) -> np.ndarray:
    """Fourier samples of w * P_k(nu_k t) * Q_k(t), summed term by term in |lambda| order."""
    grid = grid or _plan_grid(plan)
    out = np.zeros(grid.size, dtype=complex)
    for e in plan.lambdas:
        if e.k == k:
            out += e.coefficient * shift_samples(plan.w, e.lam, grid)
    return out


def haar_analysis(samples: np.ndarray, grid: Grid, K: int, p: float) -> np.ndarray:
    """(phi*_1(f), ..., phi*_K(f)) for f given by Fourier samples on ``grid``."""
    step = float(grid.step)
    local = Grid(0, 1, grid.step)
    i0 = grid.index(0)
    seg = samples[i0:i0 + local.size]
    return np.array([step * np.sum(haar_dual(j, local, p) * seg) for j in range(1, K + 1)])


def functionals(plan: FramePlan, strict: bool | None = None) -> FramePlan:
    """psi_k = rows of G^{-1} applied to Haar analysis; G_jk = phi*_j(w P_k(nu_k .) Q_k)."""
    strict = plan.config.strict if strict is None else strict
    K = len(plan.stages)
    p = plan.config.p
    grid = _plan_grid(plan)
    cols = [haar_analysis(perturbed_element(plan, k, grid), grid, K, p) for k in range(1, K + 1)]
    G = np.stack(cols, axis=1)
    D = G - np.eye(K)
    deviation = float(np.abs(D).sum(axis=0).max())
    plan.G = G
    plan.deviation = deviation
    misses = plan.diagnostics.setdefault("misses", [])
    if deviation >= 1:
        if strict:
            raise NotDiagonallyDominant(f"||G - I|| = {deviation:.3g} >= 1", deviation)
        misses.append("neumann_dominance")
        G_inv = np.linalg.inv(G)
    else:
        G_inv = np.eye(K, dtype=G.dtype)
        term = np.eye(K, dtype=G.dtype)
        for _ in range(10_000):
            term = -D @ term
            G_inv = G_inv + term
            if np.abs(term).max() < 1e-17:
                break
    plan.G_inv = G_inv
    duals = np.array([haar_dual_norm(j, p) for j in range(1, K + 1)])
    plan.K_hat = float(np.max(np.abs(G_inv) @ duals))
    plan.diagnostics["perturbation_budget"] = float(3 * sum(duals[k] * st.eta_k for k, st in enumerate(plan.stages)))
    return plan


def psi(plan: FramePlan, f_samples: np.ndarray, grid: Grid) -> np.ndarray:
    K = len(plan.stages)
    return plan.G_inv @ haar_analysis(f_samples, grid, K, plan.config.p)


# -- expansion -------------------------------------------------------------

@dataclass
class TraceRow:
    J: int
    error: float
    k: int
    l: int
    r: float
    rest_norm: float        # ||f - S'||
    s2_norm: float          # ||S''||
    s3_norm: float          # ||S'''||
    s3_bound: float         # 2 eta_k |psi_k(f)| ||w||
    s3_bound_sup: float     # 2 |psi_k(f)| ||P_hat_k||_inf ||Q_hat_k||_1 ||w||
    block_end: bool


def _norm(samples: np.ndarray, grid: Grid, p: float) -> float:
    # same rule as norm_ap, with numpy summation instead of fsum for speed
    mags = np.abs(samples)
    if not mags.any():
        return 0.0
    return float((float(grid.step) * np.sum(mags**p)) ** (1.0 / p))


def expand(plan: FramePlan, f: SampledSpectrum, J: int | None = None) -> list[TraceRow]:
    """Error trace of the partial sums sum_{j <= J} h*_{lambda_j}(f) w e^{2 pi i lambda_j t}."""
    grid = _plan_grid(plan)
    p = plan.config.p
    total = len(plan.lambdas)
    J = total if J is None else min(J, total)
    if f.grid.step != grid.step:
        raise ValueError("input must share the plan grid step")
    fs = f.on_grid(grid).samples
    coords = psi(plan, fs, grid)
    w_norm = _norm(plan.w.on_grid(grid).samples, grid, p)
    stages = {st.k: st for st in plan.stages}
    zero = np.zeros(grid.size, dtype=complex)
    partial = zero.copy()
    prefix = zero.copy()       # S1: all earlier stages
    complete = zero.copy()     # S2: finished levels of the current stage
    level = zero.copy()        # S3: the level in progress
    rest_norm = s2_norm = 0.0
    rows = []
    current_k = current_level = None
    for j, e in enumerate(plan.lambdas[:J], start=1):
        if e.k != current_k:
            prefix = prefix + complete + level
            complete, level = zero.copy(), zero.copy()
            current_k, current_level = e.k, abs(e.m)
            rest_norm = _norm(fs - prefix, grid, p)
            s2_norm = 0.0
        elif abs(e.m) != current_level:
            complete = complete + level
            level = zero.copy()
            current_level = abs(e.m)
            s2_norm = _norm(complete, grid, p)
        term = coords[e.k - 1] * e.coefficient * shift_samples(plan.w, e.lam, grid)
        partial += term
        level += term
        st = stages[e.k]
        nxt = plan.lambdas[j] if j < total else None
        block_end = nxt is None or nxt.k != e.k
        level_end = block_end or abs(nxt.m) != abs(e.m)
        if level_end:
            l = abs(e.m)
            row_s2, row_s3 = _norm(complete + level, grid, p), 0.0
        else:
            below = [abs(int(m)) for m in st.P_k.spectrum if abs(int(m)) < abs(e.m)]
            l = max(below) if below else 0
            row_s2, row_s3 = s2_norm, _norm(level, grid, p)
        psik = abs(coords[e.k - 1])
        rows.append(TraceRow(
            J=j,
            error=_norm(fs - partial, grid, p),
            k=e.k, l=l, r=float(abs(e.lam)),
            rest_norm=rest_norm,
            s2_norm=row_s2,
            s3_norm=row_s3,
            s3_bound=float(2 * st.eta_k * psik * w_norm),
            s3_bound_sup=float(2 * psik * coeff_norm(st.P_k, math.inf) * coeff_norm(st.Q_k, 1) * w_norm),
            block_end=block_end,
        ))
    return rows


def trace_csv(rows: list[TraceRow]) -> str:
    head = "J,error,k,l,r,f_minus_S1,S2,S3,S3_bound,S3_bound_sup,block_end"
    lines = [head]
    for r in rows:
        lines.append(f"{r.J},{r.error!r},{r.k},{r.l},{r.r!r},{r.rest_norm!r},{r.s2_norm!r},"
                     f"{r.s3_norm!r},{r.s3_bound!r},{r.s3_bound_sup!r},{int(r.block_end)}")
    return "\n".join(lines) + "\n"


def trace_svg(rows: list[TraceRow], width: int = 640, height: int = 320) -> str:
    """Static log-scale plot of the error trace."""
    if not rows:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>'
    ys = [math.log10(max(r.error, 1e-300)) for r in rows]
    lo, hi = min(ys), max(ys)
    span = hi - lo or 1.0
    pts = []
    for i, y in enumerate(ys):
        px = 40 + (width - 60) * (i / max(1, len(ys) - 1))
        py = 20 + (height - 40) * (1 - (y - lo) / span)
        pts.append(f"{px:.1f},{py:.1f}")
    marks = "".join(
        f'<line x1="{40 + (width - 60) * (i / max(1, len(ys) - 1)):.1f}" y1="20" '
        f'x2="{40 + (width - 60) * (i / max(1, len(ys) - 1)):.1f}" y2="{height - 20}" stroke="#ccc"/>'
        for i, r in enumerate(rows) if r.block_end
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'{marks}<polyline fill="none" stroke="black" points="{" ".join(pts)}"/>'
        f'<text x="4" y="16" font-size="11">log10 error [{lo:.2f}, {hi:.2f}]</text></svg>'
    )


# -- persistence ---------------------------------------------------------------

def save_plan(plan: FramePlan, path: str) -> None:
    base = os.path.splitext(path)[0]
    apspace.save(plan.u0, base + ".u0.json", base + ".u0.bin")
    apspace.save(plan.w, base + ".w.json", base + ".w.bin")
    doc = {
        "config": plan.config.to_json(),
        "grade": plan.grade,
        "u0": os.path.basename(base + ".u0.json"),
        "w": os.path.basename(base + ".w.json"),
        "stages": [s.to_json() for s in plan.stages],
        "lambda": [
            {"lambda": str(e.lam), "n_j": e.n_j, "k": e.k, "m": e.m, "n": e.n,
             "scale": [e.coefficient.real, e.coefficient.imag], "psi_index": e.k}
            for e in plan.lambdas
        ],
        "G": _cplx_matrix(plan.G),
        "G_inv": _cplx_matrix(plan.G_inv),
        "deviation": plan.deviation,
        "K_hat": plan.K_hat,
        "diagnostics": plan.diagnostics,
    }
    _atomic_write(path, json.dumps(doc, indent=1))


def load_plan(path: str) -> FramePlan:
    with open(path) as fh:
        doc = json.load(fh)
    d = os.path.dirname(path)
    plan = FramePlan(
        BuildConfig.from_json(doc["config"]),
        apspace.load(os.path.join(d, doc["u0"])),
        [FrameStage.from_json(s) for s in doc["stages"]],
        apspace.load(os.path.join(d, doc["w"])),
    )
    plan.lambdas = [
        LambdaEntry(Fraction(e["lambda"]), e["n_j"], e["k"], e["m"], e["n"], complex(*e["scale"]))
        for e in doc["lambda"]
    ]
    plan.G = _from_cplx(doc["G"])
    plan.G_inv = _from_cplx(doc["G_inv"])
    plan.deviation = doc["deviation"]
    plan.K_hat = doc["K_hat"]
    plan.diagnostics = doc["diagnostics"]
    return plan


def _cplx_matrix(M):
    if M is None:
        return None
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _from_cplx(obj):
    if obj is None:
        return None
    return np.array(obj["re"]) + 1j * np.array(obj["im"])


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
