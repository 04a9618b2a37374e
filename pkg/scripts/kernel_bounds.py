"""Ratio of the computed kernel norms to their closed-form bounds over (h, p)."""

import os
import sys
from dataclasses import dataclass
from fractions import Fraction

sys.path.insert(0, os.path.dirname(__file__))
from _config import parse  # noqa: E402

from frameforge import kernels as K  # noqa: E402


@dataclass
class KernelConfig:
    """Kernel bound table."""
    k_min: int = 3
    k_max: int = 12
    p_list: str = "1.0,1.25,1.5,1.67,2.0"
    out: str = "results/kernel_bounds.csv"


def main(cfg: KernelConfig):
    os.makedirs(os.path.dirname(os.path.abspath(cfg.out)), exist_ok=True)
    lines = ["kind,h,p,lower,upper,bound,upper_over_bound"]
    for k in range(cfg.k_min, cfg.k_max + 1):
        h = Fraction(1, 2**k)
        for p in (float(x) for x in cfg.p_list.split(",")):
            specs = [K.triangle(h), K.trapezoid(h)]
            if h < Fraction(1, 8):
                specs.append(K.nonneg_phi(h))
            for spec in specs:
                r = K.norm_bound_check(spec, p, strict=False)
                lines.append(f"{spec.kind.value},{h},{p},{r.lower:.10g},{r.upper:.10g},{r.bound:.10g},"
                             f"{r.upper / r.bound:.6f}")
    with open(cfg.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines[:12]))
    print(f"... {len(lines) - 1} rows in {cfg.out}")


if __name__ == "__main__":
    main(parse(KernelConfig))
