"""Build a small frame, expand a few Haar functions and a reproduced element, write traces."""

import os
import sys
from dataclasses import dataclass
from fractions import Fraction

sys.path.insert(0, os.path.dirname(__file__))
from _config import parse, write_json  # noqa: E402

from frameforge import apspace as A  # noqa: E402
from frameforge import framebuilder as F  # noqa: E402


@dataclass
class DemoConfig:
    """Frame build and expansion traces."""
    p: float = 1.8
    stages: int = 2
    grid_step: Fraction = Fraction(1, 64)
    haar_inputs: str = "1,2,3"
    out_dir: str = "results/frame"


def main(cfg: DemoConfig):
    plan = F.build(F.BuildConfig(p=cfg.p, stages=cfg.stages, grid_step=cfg.grid_step))
    F.save_plan(plan, os.path.join(cfg.out_dir, "plan.json"))
    lam = F.lambda_report(plan.lambdas)
    summary = {
        "grade": plan.grade,
        "stages": [{"k": s.k, "eta": s.eta_k, "fit_error": s.achieved_error, "nu": s.nu_k,
                    "lemma": s.lemma, "misses": s.misses} for s in plan.stages],
        "lambda": {"count": lam.count, "min_gap": str(lam.min_gap), "n_increasing": lam.n_increasing},
        "deviation": plan.deviation, "K_hat": plan.K_hat, "traces": {},
    }
    inputs = {f"haar{k}": A.haar_phi(int(k), A.Grid(0, 1, cfg.grid_step), cfg.p)
              for k in cfg.haar_inputs.split(",")}
    grid = F._plan_grid(plan)
    inputs["element1"] = A.SampledSpectrum(grid, F.perturbed_element(plan, 1, grid))
    for name, f in inputs.items():
        rows = F.expand(plan, f)
        with open(os.path.join(cfg.out_dir, f"trace_{name}.csv"), "w") as fh:
            fh.write(F.trace_csv(rows))
        with open(os.path.join(cfg.out_dir, f"trace_{name}.svg"), "w") as fh:
            fh.write(F.trace_svg(rows))
        summary["traces"][name] = {
            "terminal_error": rows[-1].error,
            "block_end_errors": [r.error for r in rows if r.block_end],
            "s3_eta_bound_holds": sum(r.s3_norm <= r.s3_bound for r in rows),
            "s3_sup_bound_holds": sum(r.s3_norm <= r.s3_bound_sup * (1 + 1e-9) for r in rows),
            "cuts": len(rows),
        }
        print(name, summary["traces"][name])
    write_json(os.path.join(cfg.out_dir, "summary.json"), summary)


if __name__ == "__main__":
    main(parse(DemoConfig))
