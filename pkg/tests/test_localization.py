import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frameforge import localization as L
from frameforge.errors import CapExceeded, ChainBroken, Infeasible
from frameforge.trigpoly import coeff_norm, expand

GOLDEN = (1 + math.sqrt(5)) / 2


# -- delta and the solver ---------------------------------------------------------

@pytest.mark.parametrize("eps,p", [(0.5, 2.0), (0.6, 1.7), (0.1, 1.9)])
def test_choose_delta_margins(eps, p):
    d = L.choose_delta(eps, p)
    assert 0 < d < eps / 2
    assert L.delta_margins_hold(d, eps, p)
    assert not L.delta_margins_hold(d / 0.9 * 1.0001, eps, p)


def test_solver_rejects_below_threshold():
    for p in (1.2, 1.5, 1.6):
        with pytest.raises(Infeasible):
            L.solve_params(p, 0.5)


def test_solver_validates_eps():
    with pytest.raises(ValueError):
        L.solve_params(2.0, 0.7)
    with pytest.raises(ValueError):
        L.solve_params(0.9, 0.5)


def test_solver_minimal_N():
    prm = L.solve_params(2.0, 0.5)
    assert L._system_holds(2.0, 0.5, prm.delta, prm.h, prm.N, False)
    eta = mpmath.log1p(mpmath.mpf(prm.delta)) / 9
    h_prev = L._h_for(prm.N - 1, eta, 2.0)
    assert not L._system_holds(2.0, 0.5, prm.delta, h_prev, prm.N - 1, False)


def test_solver_degrees_and_separation():
    prm = L.solve_params(2.0, 0.5)
    assert prm.nu == 2 * (prm.deg_f + prm.deg_g) + 1
    # spectra of dilated blocks cannot meet
    assert prm.nu > 2 * max(prm.deg_f, prm.deg_g)


def test_params_json_round_trip():
    prm = L.solve_params(1.7, 0.6)
    doc = json.loads(json.dumps(prm.to_json()))
    back = L.LocalizationParams.from_json(doc)
    assert back.N == prm.N and back.h == prm.h and back.deg_f == prm.deg_f


# -- certificates ---------------------------------------------------------------

@pytest.mark.parametrize("p,eps,nonneg", [(2.0, 0.5, False), (1.7, 0.6, False), (2.0, 0.5, True), (1.9, 0.3, False)])
def test_certificate_valid(p, eps, nonneg):
    prm = L.solve_params(p, eps, nonneg)
    cert = L.certify(prm)
    assert cert.valid, cert.failed
    assert cert.conditions["i"] == Fraction(1, prm.N)
    assert cert.conditions["iv"] < 3
    assert all(e.margin > 0 for e in cert.chain)


def test_nonneg_certificate_conditions():
    cert = L.certify(L.solve_params(2.0, 0.5, True))
    assert cert.conditions["gamma_zero_is_one"] is True
    assert cert.conditions["gamma_coefficients_nonnegative"] is True
    ids = [e.id for e in cert.chain]
    assert "h_below_one_eighth" in ids and "f_norm_power" not in ids


def test_certificate_json_and_determinism():
    prm = L.solve_params(2.0, 0.5)
    a = json.dumps(L.certify(prm).to_json(), sort_keys=True)
    b = json.dumps(L.certify(prm).to_json(), sort_keys=True)
    assert a == b
    doc = json.loads(a)
    assert doc["precision_bits"] == L.DEFAULT_PREC and doc["valid"]
    assert isinstance(doc["params"]["N"], str)


def test_halving_h_breaks_zero_coefficient_entry():
    prm = L.solve_params(2.0, 0.5)
    bad = L.LocalizationParams(**{**prm.__dict__, "h": prm.h / 2})
    cert = L.certify(bad)
    assert not cert.valid
    assert "zero_coefficient_above_1_minus_delta" in cert.failed or "block_term_system" in cert.failed
    with pytest.raises(ChainBroken):
        L.certify(bad, strict=True)


def test_doubling_h_breaks_gamma_growth():
    prm = L.solve_params(2.0, 0.5)
    bad = L.LocalizationParams(**{**prm.__dict__, "h": prm.h * 2})
    cert = L.certify(bad)
    assert "gamma_growth_below_1_plus_delta" in cert.failed


def test_shrinking_nu_breaks_separation():
    prm = L.solve_params(2.0, 0.5)
    bad = L.LocalizationParams(**{**prm.__dict__, "nu": 2 * max(prm.deg_f, prm.deg_g)})
    assert "dilation_separates_spectra" in L.certify(bad).failed


def test_big_N_needs_no_materialization():
    prm = L.solve_params(1.7, 0.6)
    assert prm.N > 10**12
    with pytest.raises(CapExceeded):
        L.materialize(prm)


def test_certificate_stable_across_precision():
    prm = L.solve_params(1.7, 0.6)
    for prec in (128, 256, 512):
        assert L.certify(prm, prec=prec).valid


# -- tiny instances -----------------------------------------------------------------

def _eval(P, t):
    return complex(P(np.array([t]))[0])


@pytest.mark.parametrize("N,deg", [(1, 4), (2, 8), (3, 4), (2, 16)])
def test_tiny_brute_check(N, deg):
    inst = L.materialize(L.tiny_params(2.0, N, Fraction(1, 8), deg, deg))
    rep = L.brute_check(inst)
    assert rep.ok, rep


def test_tiny_identity_pointwise_oracle():
    # gamma (P - 1) = (1/N) sum_j prod_{i != j} f(nu^i t) (f g - f)(nu^j t), by evaluation
    inst = L.materialize(L.tiny_params(1.8, 3, Fraction(1, 8), 6, 6))
    N, nu = inst.params.N, inst.params.nu
    for t in np.linspace(0, 1, 13):
        fv = [_eval(inst.f, nu**i * t) for i in range(N)]
        gv = [_eval(inst.g, nu**i * t) for i in range(N)]
        gamma = np.prod(fv)
        P = sum(gv) / N
        rhs = sum(np.prod([fv[i] for i in range(N) if i != j]) * (fv[j] * gv[j] - fv[j]) for j in range(N)) / N
        assert abs(gamma * (P - 1) - rhs) < 1e-9


def test_tiny_zero_coefficient_of_P_vanishes():
    inst = L.materialize(L.tiny_params(2.0, 2, Fraction(1, 16), 10, 10))
    assert inst.P[0] == 0
    assert coeff_norm(inst.P, math.inf) <= 1 / inst.params.N


def test_tiny_gamma_nonneg_variant():
    inst = L.materialize(L.tiny_params(2.0, 2, Fraction(1, 16), 12, 12, nonneg=True))
    gamma = expand(inst.gamma)
    assert min(float(c) for _, c in gamma.items()) >= -1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(3, 6), st.integers(2, 12), st.sampled_from([1.7, 1.8, 2.0]), st.booleans())
def test_tiny_random_instances(N, k, deg, p, nonneg):
    if nonneg and k < 4:
        k = 4
    inst = L.materialize(L.tiny_params(p, N, Fraction(1, 2**k), deg, deg, nonneg=nonneg))
    rep = L.brute_check(inst, strict=False)
    assert rep.identity_holds and rep.splits_exact and not rep.bound_violations
    assert rep.norm_rel_error <= 1e-12


def test_tiny_caps():
    with pytest.raises(CapExceeded):
        L.materialize(L.tiny_params(2.0, 5, Fraction(1, 8), 4, 4))


# -- threshold scan ---------------------------------------------------------------

def test_scan_single_transition_near_golden_ratio():
    grid = [round(1.3 + 0.05 * i, 2) for i in range(15)]
    res = L.scan_threshold(0.5, grid)
    assert res.transitions == 1 and res.monotone
    assert not res.rows[0].feasible and res.rows[-1].feasible
    lo, hi = res.bracket
    assert lo < hi
    assert min(abs(lo - GOLDEN), abs(hi - GOLDEN)) <= 0.1


def test_scan_no_feasible_point_at_or_below_threshold():
    # p(p - 1) <= 1 cannot be feasible at any cap
    res = L.scan_threshold(0.5, [1.4, 1.55, 1.6, 1.618], log_N_cap=1e300, h_min=1e-300)
    assert not any(r.feasible for r in res.rows)


def test_scan_csv_format():
    res = L.scan_threshold(0.5, [1.5, 2.0])
    lines = res.to_csv().splitlines()
    assert lines[0] == "p,feasible,N_min"
    assert lines[1] == "1.5,0,cap" and lines[2].startswith("2,1,")


def test_scan_rejects_bad_grid():
    with pytest.raises(ValueError):
        L.scan_threshold(0.5, [0.9, 2.0])
