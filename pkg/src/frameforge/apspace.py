"""Elements of A^p(R) represented by Fourier-transform samples on a uniform grid.

Only the Fourier side is ever materialized.  Every operation carries an
error budget (``SampledSpectrum.error``) that bounds, in A^p norm, what the
discretization dropped: mass outside the grid (from the declared decay rate)
and interpolation error for off-grid shifts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import DecayTooWeak, OutOfRange
from .trigpoly import TrigPoly, dilate


@dataclass(frozen=True)
class Grid:
    x_min: Fraction
    x_max: Fraction
    step: Fraction

    def __post_init__(self):
        for name in ("x_min", "x_max", "step"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        span = (self.x_max - self.x_min) / self.step
        if span.denominator != 1 or span <= 0:
            raise ValueError("(x_max - x_min)/step must be a positive integer")
        if (1 / self.step).denominator != 1:
            raise ValueError("grid step must divide 1")
        if ((self.x_min) / self.step).denominator != 1:
            raise ValueError("grid nodes must include the integers")

    @classmethod
    def default(cls) -> "Grid":
        return cls(Fraction(-256), Fraction(256), Fraction(1, 64))

    @property
    def size(self) -> int:
        return int((self.x_max - self.x_min) / self.step) + 1

    @property
    def nodes(self) -> np.ndarray:
        return float(self.x_min) + float(self.step) * np.arange(self.size)

    def index(self, x) -> int:
        """Index of grid node ``x`` (must lie on the grid)."""
        k = (Fraction(x) - self.x_min) / self.step
        if k.denominator != 1:
            raise ValueError(f"{x} is not a grid node")
        return int(k)

    def contains(self, x) -> bool:
        return self.x_min <= Fraction(x) <= self.x_max

    def extended(self, lo, hi) -> "Grid":
        """Grid with the same step covering [x_min + lo, x_max + hi]."""
        lo = Fraction(math.floor(Fraction(lo) / self.step)) * self.step
        hi = Fraction(math.ceil(Fraction(hi) / self.step)) * self.step
        return Grid(self.x_min + min(lo, 0), self.x_max + max(hi, 0), self.step)

    def to_json(self) -> dict:
        return {"x_min": str(self.x_min), "x_max": str(self.x_max), "step": str(self.step)}

    @classmethod
    def from_json(cls, obj) -> "Grid":
        return cls(Fraction(obj["x_min"]), Fraction(obj["x_max"]), Fraction(obj["step"]))


@dataclass(frozen=True)
class SampledSpectrum:
    grid: Grid
    samples: np.ndarray
    decay_exponent: float = math.inf
    error: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} samples, got {s.shape}")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, fn, grid: Grid, decay_exponent: float = math.inf) -> "SampledSpectrum":
        return cls(grid, fn(grid.nodes), decay_exponent)

    @classmethod
    def zero(cls, grid: Grid) -> "SampledSpectrum":
        return cls(grid, np.zeros(grid.size, dtype=complex))

    def __add__(self, other: "SampledSpectrum") -> "SampledSpectrum":
        a, b = _common(self, other)
        return SampledSpectrum(a.grid, a.samples + b.samples, min(a.decay_exponent, b.decay_exponent), a.error + b.error)

    def __sub__(self, other: "SampledSpectrum") -> "SampledSpectrum":
        return self + other.scale(-1)

    def scale(self, c) -> "SampledSpectrum":
        return replace(self, samples=self.samples * c, error=self.error * abs(c))

    __mul__ = scale
    __rmul__ = scale

    def on_grid(self, grid: Grid) -> "SampledSpectrum":
        """Re-embed on a grid with the same step (zero padding or truncation)."""
        if grid.step != self.grid.step:
            raise ValueError("grids must share the step")
        out = np.zeros(grid.size, dtype=complex)
        off = int((self.grid.x_min - grid.x_min) / grid.step)
        src_lo = max(0, -off)
        src_hi = min(self.grid.size, grid.size - off)
        if src_hi > src_lo:
            out[src_lo + off:src_hi + off] = self.samples[src_lo:src_hi]
        return SampledSpectrum(grid, out, self.decay_exponent, self.error)

    def support(self) -> tuple[Fraction, Fraction] | None:
        nz = np.nonzero(self.samples)[0]
        if nz.size == 0:
            return None
        g = self.grid
        return g.x_min + int(nz[0]) * g.step, g.x_min + int(nz[-1]) * g.step


def _common(a: SampledSpectrum, b: SampledSpectrum):
    if a.grid == b.grid:
        return a, b
    if a.grid.step != b.grid.step:
        raise ValueError("grids must share the step")
    g = Grid(min(a.grid.x_min, b.grid.x_min), max(a.grid.x_max, b.grid.x_max), a.grid.step)
    return a.on_grid(g), b.on_grid(g)


# -- Haar test basis -----------------------------------------------------

def haar_index(k: int) -> tuple[int, int] | None:
    """Map k >= 1 to (level, position); k = 1 is the indicator of [0, 1)."""
    if k < 1:
        raise ValueError("Haar index starts at 1")
    if k == 1:
        return None
    j = (k - 1).bit_length() - 1
    return j, k - 1 - (1 << j)


def haar_function(k: int, p: float):
    """Piecewise-constant k-th Haar function on [0, 1), unit L^p norm."""
    idx = haar_index(k)
    if idx is None:
        return [(Fraction(0), Fraction(1), 1.0)]
    j, m = idx
    width = Fraction(1, 2**j)
    amp = 2.0 ** (j / p)
    lo = m * width
    return [(lo, lo + width / 2, amp), (lo + width / 2, lo + width, -amp)]


def haar_phi(k: int, grid: Grid, p: float = 2.0) -> SampledSpectrum:
    """The k-th normalized Haar function, used as a Fourier transform."""
    pieces = haar_function(k, p)
    if pieces[0][0] < grid.x_min or pieces[-1][1] > grid.x_max:
        raise OutOfRange(f"Haar function {k} does not fit in the grid")
    samples = np.zeros(grid.size, dtype=complex)
    for lo, hi, val in pieces:
        if ((hi - lo) / grid.step).denominator != 1:
            raise OutOfRange(f"Haar function {k} is finer than the grid step")
        samples[grid.index(lo):grid.index(hi)] = val
    return SampledSpectrum(grid, samples, math.inf)


def haar_dual(k: int, grid: Grid, p: float = 2.0) -> np.ndarray:
    """Sample weights w with  phi*_k(f) = step * sum(w * f_hat)  on the grid."""
    phi = haar_phi(k, grid, p).samples.real
    l2 = float(grid.step) * float(np.sum(phi * phi))
    return phi / l2


def haar_dual_norm(k: int, p: float) -> float:
    """Norm of the k-th biorthogonal functional, the L^{p'} norm of its kernel."""
    if p == 1:
        return max(abs(v) for *_, v in haar_function(k, p)) / _haar_l2sq(k, p)
    q = p / (p - 1)
    total = sum(float(hi - lo) * abs(v) ** q for lo, hi, v in haar_function(k, p))
    return total ** (1 / q) / _haar_l2sq(k, p)


def _haar_l2sq(k: int, p: float) -> float:
    return sum(float(hi - lo) * v * v for lo, hi, v in haar_function(k, p))


def haar_coefficients(u: SampledSpectrum, count: int, p: float = 2.0) -> np.ndarray:
    step = float(u.grid.step)
    return np.array([step * np.sum(haar_dual(k, u.grid, p) * u.samples) for k in range(1, count + 1)])


# -- norms ---------------------------------------------------------------

@dataclass(frozen=True)
class NormEstimate:
    value: float
    error: float

    def __float__(self):
        return self.value

    def __iter__(self):
        return iter((self.value, self.error))


def _tail_constant(u: SampledSpectrum) -> float:
    """C with |u_hat(x)| <= C (1+x^2)^(-s/2) off the grid, fitted at the grid ends."""
    s = u.decay_exponent
    x = u.grid.nodes
    return max(abs(u.samples[0]) * (1 + x[0] ** 2) ** (s / 2), abs(u.samples[-1]) * (1 + x[-1] ** 2) ** (s / 2))


def tail_norm(u: SampledSpectrum, p: float) -> float:
    s = u.decay_exponent
    if s == math.inf:
        return 0.0
    if abs(u.samples[0]) == 0 and abs(u.samples[-1]) == 0:
        return 0.0
    if s * p <= 1:
        return math.inf
    C = _tail_constant(u)
    sp = s * p
    mass = 0.0
    for X in (abs(float(u.grid.x_min)), abs(float(u.grid.x_max))):
        # (1+x^2)^(-sp/2) <= min(x^-sp, 2^(sp/2) (1+x)^-sp)
        b = 2 ** (sp / 2) * (1 + X) ** (1 - sp) / (sp - 1)
        if X > 0:
            b = min(b, X ** (1 - sp) / (sp - 1))
        mass += C**p * b
    return mass ** (1 / p)


# relative rounding of |s|^p, the correctly rounded sum and the final root, with slack
ROUNDING = 2.0**-48


def lp_sum(values: np.ndarray, p: float) -> float:
    """Correctly rounded sum of |values|^p (order independent)."""
    return math.fsum((np.abs(values) ** p).tolist())


def norm_ap(u: SampledSpectrum, p: float) -> NormEstimate:
    """||u||_{A^p(R)} = ||u_hat||_{L^p}, samples read as constant on [x_i, x_i + step)."""
    value = (float(u.grid.step) * lp_sum(u.samples, p)) ** (1 / p)
    return NormEstimate(value, tail_norm(u, p) + u.error + ROUNDING * value)


def seminorm_triple(u: SampledSpectrum) -> float:
    """10 * sup (1 + x^2) |u_hat(x)|; the off-grid part is bounded via the decay rate."""
    if u.decay_exponent < 2:
        raise DecayTooWeak(f"decay exponent {u.decay_exponent} < 2")
    x = u.grid.nodes
    on_grid = float(np.max((1 + x * x) * np.abs(u.samples)))
    if u.decay_exponent == math.inf:
        return 10 * on_grid
    # (1+x^2) C (1+x^2)^(-s/2) <= C for s >= 2
    return 10 * max(on_grid, _tail_constant(u))


def separation_nu(u: SampledSpectrum) -> int:
    """Smallest integer shift making integer-spaced copies of u_hat disjoint on the grid."""
    sup = u.support()
    if sup is None:
        return 1
    width = sup[1] - sup[0]
    return math.floor(width) + 1


# -- products with trigonometric polynomials --------------------------------

def _shift_grid(u: SampledSpectrum, P: TrigPoly, extend: bool) -> Grid:
    if not extend or P.is_zero:
        return u.grid
    return u.grid.extended(min(P.spectrum[0], 0), max(P.spectrum[-1], 0))


def mul_periodic(u: SampledSpectrum, f: TrigPoly, extend: bool = True) -> SampledSpectrum:
    """Fourier transform of u*f:  sum_n f_hat(n) u_hat(x - n)  for integer-spectrum f."""
    if not f.has_integer_spectrum:
        raise ValueError("mul_periodic needs an integer-spectrum polynomial")
    return _shift_sum(u, f, extend)


def _shift_sum(u: SampledSpectrum, P: TrigPoly, extend: bool) -> SampledSpectrum:
    grid = _shift_grid(u, P, extend)
    base = u.on_grid(grid) if grid != u.grid else u
    out = np.zeros(grid.size, dtype=complex)
    n = grid.size
    l1 = 0.0
    for freq, c in P.items():
        k = freq / grid.step
        if k.denominator != 1:
            raise ValueError("shift is not grid aligned")
        k = int(k)
        c = complex(c)
        l1 += abs(c)
        if k >= 0:
            out[k:] += c * base.samples[:n - k]
        else:
            out[:n + k] += c * base.samples[-k:]
    err = l1 * (u.error + _tail_only(u))
    return SampledSpectrum(grid, out, u.decay_exponent, err)


def _tail_only(u: SampledSpectrum) -> float:
    # tail in the A^1 sense is enough for the budget in any p when weights are l^1
    return tail_norm(u, 2.0) if u.decay_exponent != math.inf else 0.0


def mul_poly(u: SampledSpectrum, P: TrigPoly, extend: bool = True) -> SampledSpectrum:
    """Fourier transform of u*P for rational frequencies, with linear interpolation off grid."""
    if all((f / u.grid.step).denominator == 1 for f in P.spectrum):
        return _shift_sum(u, P, extend)
    grid = _shift_grid(u, P, extend)
    x = grid.nodes
    xs = u.grid.nodes
    re = u.samples.real
    im = u.samples.imag
    out = np.zeros(grid.size, dtype=complex)
    l1 = 0.0
    interp_err = 0.0
    h = float(u.grid.step)
    # second difference bounds |u_hat''| * h^2 on the sample grid
    d2 = np.abs(np.diff(u.samples, 2)).max() if u.grid.size > 2 else 0.0
    sup = u.support()
    width = float(sup[1] - sup[0]) + 2 * h if sup else 0.0
    for freq, c in P.items():
        c = complex(c)
        l1 += abs(c)
        t = x - float(freq)
        vals = np.interp(t, xs, re, left=0.0, right=0.0) + 1j * np.interp(t, xs, im, left=0.0, right=0.0)
        out += c * vals
        if (freq / u.grid.step).denominator != 1:
            # width^(1/p) <= max(width, 1) for every p >= 1
            interp_err += abs(c) * d2 / 8 * max(width, 1.0)
    err = l1 * (u.error + _tail_only(u)) + interp_err
    return SampledSpectrum(grid, out, u.decay_exponent, err)


def sep_spec_probe(u: SampledSpectrum, f: TrigPoly, p: float, nu_list) -> list[float]:
    """||u * f_nu||_{A^p(R)} for each dilation nu of the integer-spectrum polynomial f."""
    nus = list(nu_list)
    if any(b <= a for a, b in zip(nus, nus[1:])):
        raise ValueError("nu_list must be increasing")
    return [norm_ap(mul_periodic(u, dilate(f, nu)), p).value for nu in nus]


# -- serialization -------------------------------------------------------

def to_json_header(u: SampledSpectrum, sidecar: str) -> dict:
    return {
        "grid": u.grid.to_json(),
        "decay_exponent": None if u.decay_exponent == math.inf else u.decay_exponent,
        "error": u.error,
        "samples": sidecar,
        "dtype": "<f8 pairs",
    }


def _replace_into(path, write) -> None:
    # temp file + rename so readers never see a partial file
    path = str(path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    write(tmp)
    os.replace(tmp, path)


def save(u: SampledSpectrum, header_path, sidecar_path) -> dict:
    arr = np.empty((u.grid.size, 2), dtype="<f8")
    arr[:, 0] = u.samples.real
    arr[:, 1] = u.samples.imag
    _replace_into(sidecar_path, arr.tofile)
    header = to_json_header(u, os.path.basename(str(sidecar_path)))

    def write_header(tmp):
        with open(tmp, "w") as fh:
            json.dump(header, fh, indent=2)

    _replace_into(header_path, write_header)
    return header


def load(header_path) -> SampledSpectrum:
    with open(header_path) as fh:
        header = json.load(fh)
    grid = Grid.from_json(header["grid"])
    side = os.path.join(os.path.dirname(str(header_path)), header["samples"])
    arr = np.fromfile(side, dtype="<f8").reshape(-1, 2)
    decay = header["decay_exponent"]
    return SampledSpectrum(grid, arr[:, 0] + 1j * arr[:, 1], math.inf if decay is None else decay, header["error"])


def to_csv(u: SampledSpectrum, path) -> None:
    x = u.grid.nodes
    with open(path, "w") as fh:
        fh.write("x,re,im\n")
        for xi, s in zip(x, u.samples):
            fh.write(f"{xi!r},{s.real!r},{s.imag!r}\n")
