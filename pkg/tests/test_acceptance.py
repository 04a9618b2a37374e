"""End-to-end acceptance checks; each test records one PASS/FAIL line."""

import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from frameforge import apspace as A
from frameforge import framebuilder as F
from frameforge import kernels as K
from frameforge import localization as L
from frameforge.cli import main
from frameforge.trigpoly import FactoredProduct, TrigPoly, coeff_norm, expand, factored_norm, mul

GOLDEN = (1 + math.sqrt(5)) / 2


def _random_poly(rng, deg):
    d = int(rng.integers(0, deg + 1))
    freqs = rng.choice(np.arange(-d, d + 1), size=int(rng.integers(1, 2 * d + 2)), replace=False)
    return TrigPoly({int(f): float(rng.normal()) for f in freqs})


def test_dilation_product_law(report):
    rng = np.random.default_rng(20260101)
    t0 = time.perf_counter()
    worst_norm = worst_zero = 0.0
    for _ in range(200):
        N = int(rng.integers(1, 4))
        factors = [_random_poly(rng, 8) for _ in range(N)]
        nu = 2 * max(int(P.degree) for P in factors) + 1
        Fp = FactoredProduct(factors, nu)
        p = float(rng.choice([1.0, 1.5, 1.7, 2.0, 2.5]))
        E = expand(Fp)
        direct = coeff_norm(E, p)
        fact = float(factored_norm(Fp, p))
        worst_norm = max(worst_norm, abs(direct - fact) / fact)
        z = Fp.zero_coefficient()
        worst_zero = max(worst_zero, abs(complex(E[0]) - complex(z)) / max(abs(complex(z)), 1e-300))
    elapsed = time.perf_counter() - t0
    ok = worst_norm <= 1e-12 and worst_zero <= 1e-12 and elapsed < 10
    assert report(1, ok, f"200 products, max rel err norm {worst_norm:.2e}, P(0) {worst_zero:.2e}, {elapsed:.1f}s")


def test_kernel_bounds(report):
    t0 = time.perf_counter()
    bad = []
    for k in range(3, 11):
        h = Fraction(1, 2**k)
        for p in (1.0, 1.5, 1.67, 2.0):
            for spec in (K.triangle(h), K.trapezoid(h)):
                rep = K.norm_bound_check(spec, p, strict=False)
                if spec.kind is K.Kind.TRIANGLE and p == 1.0:
                    # the bound 1 is attained; check the truncated sum window instead
                    lo = 1 - K.tail_bound_A(spec, rep.degree)
                    good = lo <= rep.lower <= 1 + 1e-12
                else:
                    good = rep.upper <= rep.bound
                if not good:
                    bad.append((spec.kind.value, k, p))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    assert report(2, ok, f"64 (kernel, h, p) cases, violations {bad}, {elapsed:.1f}s")


def _certify_subprocess(*args):
    code = (
        "import resource, sys\n"
        "from frameforge.cli import main\n"
        f"rc = main({list(args)!r})\n"
        "sys.stderr.write('MAXRSS %d\\n' % resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)\n"
        "sys.exit(rc)\n"
    )
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, timeout=120)
    elapsed = time.perf_counter() - t0
    rss_mb = int(proc.stderr.rsplit("MAXRSS", 1)[1]) / 1024
    return proc.returncode, json.loads(proc.stdout), elapsed, rss_mb


def test_localization_certificates(report):
    details = []
    ok = True
    for p, eps in (("2", "0.5"), ("1.7", "0.6")):
        rc, doc, elapsed, rss = _certify_subprocess("lemma", "certify", "--p", p, "--eps", eps)
        N = int(doc["params"]["N"])
        cond_i = Fraction(doc["conditions"]["i"])
        iv_ok = float(doc["conditions"]["iv"]) <= 3
        good = rc == 0 and doc["valid"] and iv_ok and cond_i == Fraction(1, N) and elapsed < 10 and rss < 256
        ok &= good
        details.append(f"p={p}: valid={doc['valid']} N={N} iv={float(doc['conditions']['iv']):.4f} "
                       f"{elapsed:.1f}s {rss:.0f}MB")
    assert report(3, ok, "; ".join(details))


def test_nonneg_variant(report):
    cert = L.certify(L.solve_params(2.0, 0.5, nonneg=True))
    checks = [cert.valid]
    notes = [f"certificate valid={cert.valid}"]
    for k in (5, 7):
        h = Fraction(1, 2**k)
        nn = K.nonneg_check(K.nonneg_phi(h), n_max=10_000, strict=False)
        checks.append(nn.ok and nn.min_value >= 0 and nn.min_coeff >= 0)
        for p in (1.7, 2.0):
            rep = K.norm_bound_check(K.nonneg_phi(h), p, strict=False)
            s = float(h) ** ((p - 1) / p)
            checks.append(s <= rep.lower and rep.upper <= 12 * s)
            notes.append(f"h=2^-{k} p={p}: ||phi-1||/h^((p-1)/p) in [{rep.lower / s:.3f}, {rep.upper / s:.3f}]")
    assert report(4, all(checks), "; ".join(notes))


def test_threshold_scan(report):
    t0 = time.perf_counter()
    grid = [round(1.30 + 0.05 * i, 2) for i in range(15)]
    res = L.scan_threshold(0.5, grid, log_N_cap=1e9, h_min=1e-46)
    elapsed = time.perf_counter() - t0
    br = res.bracket
    near = br is not None and min(abs(br[0] - GOLDEN), abs(br[1] - GOLDEN)) <= 0.1
    ok = (res.transitions == 1 and not res.rows[0].feasible and res.rows[-1].feasible and near
          and elapsed < 120)
    assert report(5, ok, f"transitions={res.transitions} bracket={br} {elapsed:.1f}s")


def test_tiny_instance_soundness(report):
    rng = np.random.default_rng(777)
    t0 = time.perf_counter()
    fails = []
    worst = 0.0
    for i in range(50):
        N = int(rng.integers(1, 4))
        nonneg = bool(rng.integers(0, 2))
        k = int(rng.integers(4 if nonneg else 3, 7))
        deg = int(rng.integers(2, 17))
        p = float(rng.uniform(1.65, 2.0))
        inst = L.materialize(L.tiny_params(p, N, Fraction(1, 2**k), deg, deg, nonneg=nonneg))
        rep = L.brute_check(inst, strict=False)
        worst = max(worst, rep.worst_ratio)
        if not (rep.identity_holds and rep.splits_exact and not rep.bound_violations):
            fails.append(i)
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 60
    assert report(6, ok, f"50 instances, failures {fails}, worst norm/bound {worst:.3f}, {elapsed:.1f}s")


def test_frame_demo(report, tmp_path, capsys):
    t0 = time.perf_counter()
    plan_path = tmp_path / "plan.json"
    rc = main(["frame", "build", "--stages", "2", "--p", "1.8", "--out", str(plan_path)])
    capsys.readouterr()
    plan = F.load_plan(str(plan_path))
    lam = F.lambda_report(plan.lambdas)
    offsets_ok = all(abs(abs(e.lam) - e.n_j) < Fraction(1, 10 * e.k) for e in plan.lambdas)
    f = A.haar_phi(1, A.Grid(0, 1, plan.config.grid_step), plan.config.p)
    rows = F.expand(plan, f)
    elapsed = time.perf_counter() - t0
    terminal = rows[-1].error
    ends = [r.error for r in rows if r.block_end]
    monotone = all(b <= a for a, b in zip(ends, ends[1:]))
    s3_ok = sum(r.s3_norm <= r.s3_bound for r in rows)
    checks = {
        "completes": rc == 0,
        "min_gap>0": lam.min_gap > 0,
        "n_increasing": lam.n_increasing,
        "offsets<1/(10k)": offsets_ok,
        "terminal<1e-3": terminal < 1e-3,
        "block_errors_nonincreasing": monotone,
        "S3_bound_all_cuts": s3_ok == len(rows),
        "runtime<300s": elapsed < 300,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"grade={plan.grade} |Lambda|={lam.count} gap={lam.min_gap} terminal={terminal:.4g} "
              f"block_ends={[round(e, 5) for e in ends]} S3 bound {s3_ok}/{len(rows)} "
              f"{elapsed:.1f}s failed={failed}")
    assert report(7, not failed, detail)


def test_inequality_suite(report):
    rng = np.random.default_rng(4242)
    grid = A.Grid(-8, 8, Fraction(1, 32))
    worst = {"lemma": 0.0, "l1": 0.0, "young": 0.0}
    viol = {k: 0 for k in worst}
    for _ in range(100):
        p = float(rng.choice([1.0, 1.5, 1.7, 2.0]))
        width, center = rng.uniform(0.3, 3), rng.uniform(-2, 2)
        u = A.SampledSpectrum.from_function(lambda x: np.exp(-math.pi * (x - center) ** 2 / width), grid)
        f = _random_poly(rng, 6)
        val, err = A.norm_ap(A.mul_periodic(u, f), p)
        rhs = A.seminorm_triple(u) * coeff_norm(f, p) + err
        worst["lemma"] = max(worst["lemma"], val / rhs)
        viol["lemma"] += int(val > rhs)
        P = TrigPoly({Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 6))): float(rng.normal())
                      for _ in range(int(rng.integers(1, 6)))})
        val, err = A.norm_ap(A.mul_poly(u, P), p)
        rhs = coeff_norm(P, 1) * A.norm_ap(u, p).value + err
        worst["l1"] = max(worst["l1"], val / rhs)
        viol["l1"] += int(val > rhs)
        g = _random_poly(rng, 6)
        lhs = coeff_norm(mul(f, g), p)
        rhs = coeff_norm(f, 1) * coeff_norm(g, p) * (1 + 1e-12)
        worst["young"] = max(worst["young"], lhs / rhs)
        viol["young"] += int(lhs > rhs)

    g4 = A.Grid(-4, 4, Fraction(1, 16))
    x = g4.nodes
    bump = np.where(np.abs(x) < 1, np.exp(1 - 1 / np.maximum(1 - x * x, 1e-300)), 0.0)
    u = A.SampledSpectrum(g4, bump)
    f = TrigPoly({0: 1.0, 1: 0.5, -1: 0.5, 3: -0.25})
    nu0 = A.separation_nu(u)
    probe = A.sep_spec_probe(u, f, 1.7, range(nu0, nu0 + 20))
    constant = len(set(probe)) == 1
    ok = not any(viol.values()) and constant
    detail = (f"violations {viol}, worst ratios " + ", ".join(f"{k}={v:.3f}" for k, v in worst.items())
              + f"; probe constant past nu={nu0}: {constant}")
    assert report(8, ok, detail)
