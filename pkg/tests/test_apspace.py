import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frameforge import apspace as A
from frameforge.errors import DecayTooWeak, OutOfRange
from frameforge.trigpoly import TrigPoly, coeff_norm

G = A.Grid(-8, 8, Fraction(1, 32))


def gaussian(grid, c=1.0, shift=0.0):
    return A.SampledSpectrum.from_function(lambda x: np.exp(-math.pi * c * (x - shift) ** 2), grid)


def bump(grid, radius=1.0, center=0.0):
    def fn(x):
        y = (x - center) / radius
        out = np.zeros_like(x)
        m = np.abs(y) < 1
        out[m] = np.exp(1 - 1 / (1 - y[m] ** 2))
        return out
    return A.SampledSpectrum.from_function(fn, grid)


# -- grid -----------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        A.Grid(0, 1, Fraction(2, 3))
    with pytest.raises(ValueError):
        A.Grid(0, 1, Fraction(1, 3) * 2)
    with pytest.raises(ValueError):
        A.Grid(Fraction(1, 3), 1, Fraction(1, 2))
    assert A.Grid.default().size == 512 * 64 + 1


def test_grid_index_and_json():
    g = A.Grid(-2, 2, Fraction(1, 4))
    assert g.index(0) == 8 and g.nodes[g.index(Fraction(3, 4))] == 0.75
    with pytest.raises(ValueError):
        g.index(Fraction(1, 8))
    assert A.Grid.from_json(g.to_json()) == g
    assert g.extended(-1, Fraction(1, 3)) == A.Grid(-3, Fraction(5, 2), Fraction(1, 4))


# -- Haar -----------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
@pytest.mark.parametrize("k", [1, 2, 3, 6, 11])
def test_haar_normalized(k, p):
    g = A.Grid(0, 1, Fraction(1, 64))
    u = A.haar_phi(k, g, p)
    assert A.norm_ap(u, p).value == pytest.approx(1.0, rel=1e-12)
    if k > 1:
        assert abs(u.samples.sum()) < 1e-12


def test_haar_same_level_disjoint():
    g = A.Grid(0, 1, Fraction(1, 64))
    for k in range(5, 9):
        for j in range(k + 1, 9):
            assert not np.any(A.haar_phi(k, g).samples * A.haar_phi(j, g).samples)


def test_haar_biorthogonal():
    g = A.Grid(0, 1, Fraction(1, 64))
    step = float(g.step)
    p = 1.8
    M = np.array([[step * np.sum(A.haar_dual(i, g, p) * A.haar_phi(j, g, p).samples) for j in range(1, 9)]
                  for i in range(1, 9)])
    assert np.allclose(M, np.eye(8), atol=1e-12)


def test_haar_dual_norm_is_one():
    for p in (1.0, 1.5, 1.8, 2.0):
        for k in (1, 2, 5, 9):
            assert A.haar_dual_norm(k, p) == pytest.approx(1.0, rel=1e-12)


def test_haar_out_of_range():
    with pytest.raises(OutOfRange):
        A.haar_phi(1, A.Grid(0, Fraction(1, 2), Fraction(1, 8)))
    with pytest.raises(OutOfRange):
        A.haar_phi(40, A.Grid(0, 1, Fraction(1, 8)))


# -- norms ------------------------------------------------------------------------

def test_norm_of_zero():
    assert A.norm_ap(A.SampledSpectrum.zero(G), 1.5).value == 0.0


@pytest.mark.parametrize("p", [1.0, 2.0, 1.7])
def test_gaussian_norm_closed_form(p):
    # int exp(-pi p x^2) dx = p^{-1/2}
    u = gaussian(G)
    assert A.norm_ap(u, p).value == pytest.approx(p ** (-1 / (2 * p)), abs=1e-6)


def test_norm_converges_under_refinement():
    # kinks off every dyadic grid so the quadrature error is visible
    fn = lambda x: np.maximum(0.0, 1 - np.abs(x - 1 / 3))
    vals = [A.norm_ap(A.SampledSpectrum.from_function(fn, A.Grid(-4, 4, Fraction(1, 2**k))), 1.5).value
            for k in range(3, 8)]
    exact = (2 / 2.5) ** (1 / 1.5)
    errs = [abs(v - exact) for v in vals]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_tail_budget_reported():
    u = A.SampledSpectrum.from_function(lambda x: 1 / (1 + x * x), G, decay_exponent=2)
    val, err = A.norm_ap(u, 2.0)
    exact = math.sqrt(math.pi / 2)   # int (1+x^2)^-2 = pi/2
    assert abs(val - exact) <= err + 1e-4
    assert err > 0


def test_seminorm_of_lorentzian_is_ten():
    u = A.SampledSpectrum.from_function(lambda x: 1 / (1 + x * x), G, decay_exponent=2)
    assert A.seminorm_triple(u) == pytest.approx(10.0)


def test_seminorm_gaussian_dense_oracle():
    x = np.linspace(-8, 8, 2_000_001)
    oracle = 10 * np.max((1 + x * x) * np.exp(-x * x))
    u = A.SampledSpectrum.from_function(lambda x: np.exp(-x * x), G)
    assert A.seminorm_triple(u) == pytest.approx(oracle, rel=1e-9)


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_seminorm_homogeneous(c):
    u = gaussian(G)
    assert A.seminorm_triple(u.scale(c)) == pytest.approx(abs(c) * A.seminorm_triple(u), rel=1e-12)


def test_seminorm_needs_decay():
    with pytest.raises(DecayTooWeak):
        A.seminorm_triple(A.SampledSpectrum.from_function(lambda x: 1 / (1 + np.abs(x)), G, decay_exponent=1))


# -- products ---------------------------------------------------------------------

def test_mul_periodic_identity_and_shift():
    u = bump(G, radius=0.25)
    assert np.array_equal(A.mul_periodic(u, TrigPoly({0: 1}), extend=False).samples, u.samples)
    v = A.mul_periodic(u, TrigPoly({1: 1}), extend=False)
    assert np.array_equal(v.samples[32:], u.samples[:-32])


def test_mul_periodic_rejects_fractional():
    with pytest.raises(ValueError):
        A.mul_periodic(gaussian(G), TrigPoly({Fraction(1, 2): 1}))


def test_mul_poly_constant_and_aligned():
    u = gaussian(G)
    assert np.allclose(A.mul_poly(u, TrigPoly({0: 2.5})).samples, 2.5 * u.samples)
    P = TrigPoly({-2: 0.5, 3: 1j})
    a, b = A.mul_poly(u, P), A.mul_periodic(u, P)
    assert a.grid == b.grid and np.array_equal(a.samples, b.samples)


def test_mul_poly_offgrid_within_budget():
    u = gaussian(G)
    shift = Fraction(1, 3)
    v = A.mul_poly(u, TrigPoly({shift: 1.0}), extend=False)
    exact = gaussian(G, shift=float(shift))
    assert A.norm_ap(v - exact, 2.0).value <= v.error
    assert v.error > 0


coeffs = st.floats(0.01, 2) | st.floats(-2, -0.01)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(-6, 6), coeffs, min_size=1, max_size=5),
       st.floats(0.3, 3), st.floats(-2, 2), st.sampled_from([1.0, 1.5, 1.8, 2.0]))
def test_lemma_product_inequality(terms, width, center, p):
    # ||u f||_{A^p(R)} <= |||u||| ||f||_{A^p(T)}
    f = TrigPoly(terms)
    u = gaussian(G, c=1 / width, shift=center)
    prod = A.mul_periodic(u, f)
    val, err = A.norm_ap(prod, p)
    assert val <= A.seminorm_triple(u) * coeff_norm(f, p) + err + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.fractions(-4, 4, max_denominator=5), coeffs, min_size=1, max_size=5),
       st.floats(0.3, 3), st.sampled_from([1.0, 1.5, 2.0]))
def test_l1_multiplier_inequality(terms, width, p):
    # ||u P||_{A^p(R)} <= ||P_hat||_1 ||u||_{A^p(R)}
    P = TrigPoly(terms)
    u = gaussian(G, c=1 / width)
    val, err = A.norm_ap(A.mul_poly(u, P), p)
    assert val <= coeff_norm(P, 1) * A.norm_ap(u, p).value + err + 1e-12


def test_separation_exact_constancy():
    g = A.Grid(-4, 4, Fraction(1, 16))
    u = bump(g, radius=1.0)
    f = TrigPoly({0: 1.0, 1: 0.5, -1: 0.5})
    nu0 = A.separation_nu(u)
    assert nu0 == 2
    vals = A.sep_spec_probe(u, f, 1.5, range(nu0, nu0 + 12))
    assert len(set(vals)) == 1
    assert vals[0] == pytest.approx(A.norm_ap(u, 1.5).value * coeff_norm(f, 1.5), rel=1e-12)


def test_separation_gaussian_converges():
    g = A.Grid(-48, 48, Fraction(1, 16))
    u = gaussian(g)
    f = TrigPoly({0: 1.0, 1: 0.5, -1: 0.5})
    target = A.norm_ap(u, 1.5).value * coeff_norm(f, 1.5)
    vals = A.sep_spec_probe(u, f, 1.5, [2, 4, 8, 16, 32])
    gaps = [abs(v - target) for v in vals]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.01 * target


def test_sep_probe_constant_for_unit_polynomial():
    u = gaussian(G)
    vals = A.sep_spec_probe(u, TrigPoly({0: 1.0}), 2.0, [1, 2, 5])
    assert vals == [A.norm_ap(u, 2.0).value] * 3


def test_sep_probe_needs_increasing():
    with pytest.raises(ValueError):
        A.sep_spec_probe(gaussian(G), TrigPoly({1: 1.0}), 2.0, [3, 2])


# -- serialization --------------------------------------------------------------

def test_save_load_round_trip(tmp_path):
    u = A.SampledSpectrum(G, gaussian(G).samples * (1 + 2j), decay_exponent=4.0, error=1e-9)
    A.save(u, tmp_path / "u.json", tmp_path / "u.bin")
    v = A.load(tmp_path / "u.json")
    assert v.grid == u.grid and np.array_equal(v.samples, u.samples)
    assert v.decay_exponent == 4.0 and v.error == 1e-9
    A.to_csv(u, tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text().startswith("x,re,im\n")
