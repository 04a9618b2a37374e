"""Command-line entry point: ``frameforge <group> <command> [flags]``.

Exit codes: 0 success, 1 usage, 2 infeasible or invalid certificate, 3 stage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import apspace, framebuilder, kernels, localization
from .errors import ChainBroken, FrameforgeError, Infeasible, NotDiagonallyDominant, StageFailed

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_STAGE = 0, 1, 2, 3
MIN_PRECISION = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for infeasibility here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def precision_bits(default: int = localization.DEFAULT_PREC) -> int:
    raw = os.environ.get("FRAMEFORGE_PRECISION")
    if raw is None:
        return default
    try:
        bits = int(raw)
    except ValueError:
        raise UsageError(f"FRAMEFORGE_PRECISION must be an integer, got {raw!r}") from None
    if bits < MIN_PRECISION:
        raise UsageError(f"FRAMEFORGE_PRECISION must be at least {MIN_PRECISION}")
    return bits


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _emit(doc, out: str | None) -> None:
    text = doc if isinstance(doc, str) else json.dumps(doc, indent=1, default=_json_default) + "\n"
    if out:
        framebuilder._atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


# -- kernel ------------------------------------------------------------------

def cmd_kernel_info(args) -> int:
    try:
        spec = kernels.KernelSpec(kernels.Kind(args.kind), args.h, args.a)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.p >= 1:
        raise UsageError("p must be at least 1")
    n = np.arange(0, args.samples + 1)
    vals = kernels.coeffs(spec, n)
    rep_p = kernels.norm_bound_check(spec, args.p, strict=False)
    rep_1 = kernels.norm_bound_check(spec, 1.0, strict=False)
    doc = {
        "kind": spec.kind.value,
        "h": str(spec.h),
        "a": None if spec.a is None else str(spec.a),
        "p": args.p,
        "coeffs_sampled": [{"n": int(k), "value": float(v)} for k, v in zip(n, vals)],
        "norms": {"A1": [rep_1.lower, rep_1.upper], "Ap": [rep_p.lower, rep_p.upper]},
        "bounds": {"closed_form": rep_p.bound, "computed": rep_p.upper},
        "ok": rep_p.ok,
        "precision_bits": 53,
    }
    if spec.kind is kernels.Kind.NONNEG_PHI:
        doc["nonneg"] = kernels.nonneg_check(spec, n_max=args.n_max, strict=False).to_json()
        doc["ok"] = doc["ok"] and doc["nonneg"]["ok"]
    _emit(doc, args.out)
    return EXIT_OK


# -- lemma -------------------------------------------------------------------

def cmd_lemma_certify(args) -> int:
    prec = precision_bits()
    try:
        params = localization.solve_params(args.p, args.eps, args.nonneg, prec=prec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cert = localization.certify(params, prec=prec)
    _emit(cert.to_json(), args.out)
    return EXIT_OK if cert.valid else EXIT_INFEASIBLE


def cmd_lemma_instance(args) -> int:
    deg_g = args.deg_g if args.deg_g is not None else args.deg
    try:
        params = localization.tiny_params(args.p, args.N, args.h, args.deg, deg_g, eps=args.eps,
                                          nonneg=args.nonneg)
        inst = localization.materialize(params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = localization.brute_check(inst, strict=False)
    doc = {"params": params.to_json(), "report": dataclasses.asdict(rep), "precision_bits": 53}
    _emit(doc, args.out)
    return EXIT_OK if rep.ok else EXIT_INFEASIBLE


def cmd_threshold_scan(args) -> int:
    if args.steps < 2 or not args.p_min < args.p_max:
        raise UsageError("need --steps >= 2 and --p-min < --p-max")
    grid = [round(args.p_min + i * (args.p_max - args.p_min) / (args.steps - 1), 10)
            for i in range(args.steps)]
    try:
        res = localization.scan_threshold(args.eps, grid, log_N_cap=args.log_n_cap, h_min=args.h_min)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(res.to_csv(), args.out)
    return EXIT_OK


# -- frame -------------------------------------------------------------------

def cmd_frame_build(args) -> int:
    cfg = framebuilder.BuildConfig(p=args.p, stages=args.stages, grid_step=args.grid, strict=args.strict)
    plan = framebuilder.build(cfg)
    framebuilder.save_plan(plan, args.out)
    rep = framebuilder.lambda_report(plan.lambdas)
    summary = {
        "plan": args.out,
        "grade": plan.grade,
        "lambda_count": rep.count,
        "lambda_min_gap": str(rep.min_gap),
        "n_increasing": rep.n_increasing,
        "deviation": plan.deviation,
        "K_hat": plan.K_hat,
        "misses": {f"stage_{s.k}": s.misses for s in plan.stages},
        "precision_bits": 53,
    }
    print(json.dumps(summary, indent=1))
    return EXIT_OK


def _frame_input(spec: str, step: Fraction, p: float) -> apspace.SampledSpectrum:
    if spec.startswith("haar:"):
        try:
            k = int(spec[5:])
        except ValueError:
            raise UsageError(f"bad Haar index in {spec!r}") from None
        return apspace.haar_phi(k, apspace.Grid(0, 1, step), p)
    if not os.path.exists(spec):
        raise UsageError(f"input {spec!r} is neither haar:k nor an existing file")
    return apspace.load(spec)


def cmd_frame_expand(args) -> int:
    plan = framebuilder.load_plan(args.plan)
    f = _frame_input(args.input, plan.config.grid_step, plan.config.p)
    if args.terms == "all":
        J = None
    else:
        try:
            J = int(args.terms)
        except ValueError:
            raise UsageError("--terms takes an integer or 'all'") from None
    rows = framebuilder.expand(plan, f, J)
    _emit(framebuilder.trace_csv(rows), args.out)
    if args.svg:
        framebuilder._atomic_write(args.svg, framebuilder.trace_svg(rows))
    return EXIT_OK


# -- wiring --------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="frameforge", description=__doc__.splitlines()[0])
    groups = top.add_subparsers(dest="group", required=True, parser_class=_Parser)

    kern = groups.add_parser("kernel").add_subparsers(dest="command", required=True, parser_class=_Parser)
    ki = kern.add_parser("info", help="coefficients, norms and bounds of one kernel")
    ki.add_argument("--kind", required=True, choices=[k.value for k in kernels.Kind])
    ki.add_argument("--h", required=True, type=_fraction)
    ki.add_argument("--p", required=True, type=float)
    ki.add_argument("--a", type=_fraction, default=None)
    ki.add_argument("--samples", type=int, default=16, help="report coefficients n = 0..samples")
    ki.add_argument("--n-max", type=int, default=10_000, help="coefficient range for the nonneg check")
    ki.add_argument("--out")
    ki.set_defaults(func=cmd_kernel_info)

    lem = groups.add_parser("lemma").add_subparsers(dest="command", required=True, parser_class=_Parser)
    lc = lem.add_parser("certify", help="solve the parameter system and certify the chain")
    lc.add_argument("--p", required=True, type=float)
    lc.add_argument("--eps", required=True, type=float)
    lc.add_argument("--nonneg", action="store_true")
    lc.add_argument("--out")
    lc.set_defaults(func=cmd_lemma_certify)
    li = lem.add_parser("instance", help="materialize a tiny instance and brute-force check it")
    li.add_argument("--p", required=True, type=float)
    li.add_argument("--N", required=True, type=int)
    li.add_argument("--h", required=True, type=_fraction)
    li.add_argument("--deg", required=True, type=int)
    li.add_argument("--deg-g", type=int, default=None)
    li.add_argument("--eps", type=float, default=0.5)
    li.add_argument("--nonneg", action="store_true")
    li.add_argument("--out")
    li.set_defaults(func=cmd_lemma_instance)

    thr = groups.add_parser("threshold").add_subparsers(dest="command", required=True, parser_class=_Parser)
    ts = thr.add_parser("scan", help="feasibility of the parameter system over a p grid")
    ts.add_argument("--eps", required=True, type=float)
    ts.add_argument("--p-min", required=True, type=float)
    ts.add_argument("--p-max", required=True, type=float)
    ts.add_argument("--steps", required=True, type=int)
    ts.add_argument("--log-n-cap", type=float, default=1e9)
    ts.add_argument("--h-min", type=float, default=1e-46)
    ts.add_argument("--out")
    ts.set_defaults(func=cmd_threshold_scan)

    fr = groups.add_parser("frame").add_subparsers(dest="command", required=True, parser_class=_Parser)
    fb = fr.add_parser("build", help="run the staged construction and write a plan")
    fb.add_argument("--stages", type=int, default=2)
    fb.add_argument("--p", type=float, default=1.8)
    fb.add_argument("--grid", type=_fraction, default=Fraction(1, 64), help="frequency grid step")
    fb.add_argument("--strict", action="store_true", help="fail on any missed stage target")
    fb.add_argument("--out", default="plan.json")
    fb.set_defaults(func=cmd_frame_build)
    fe = fr.add_parser("expand", help="error trace of the frame expansion of one input")
    fe.add_argument("--plan", required=True)
    fe.add_argument("--input", required=True, help="haar:k or a saved spectrum header")
    fe.add_argument("--terms", default="all")
    fe.add_argument("--svg")
    fe.add_argument("--out")
    fe.set_defaults(func=cmd_frame_expand)
    return top


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"frameforge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Infeasible, ChainBroken) as exc:
        print(f"frameforge: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (StageFailed, NotDiagonallyDominant) as exc:
        print(f"frameforge: stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except FrameforgeError as exc:
        print(f"frameforge: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
