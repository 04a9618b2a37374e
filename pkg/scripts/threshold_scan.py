"""Feasibility of the localization parameter system across p, for several eps."""

import math
import os
import sys
from dataclasses import dataclass

sys.path.insert(0, os.path.dirname(__file__))
from _config import parse, write_json  # noqa: E402

from frameforge.localization import scan_threshold  # noqa: E402

GOLDEN = (1 + math.sqrt(5)) / 2


@dataclass
class ScanConfig:
    """Threshold scan over an evenly spaced p grid."""
    eps_list: str = "0.1,0.3,0.5,0.6"
    p_min: float = 1.30
    p_max: float = 2.00
    steps: int = 71
    log_n_cap: float = 1e9
    h_min: float = 1e-46
    out_dir: str = "results/threshold"


def main(cfg: ScanConfig):
    grid = [round(cfg.p_min + i * (cfg.p_max - cfg.p_min) / (cfg.steps - 1), 6) for i in range(cfg.steps)]
    summary = []
    os.makedirs(cfg.out_dir, exist_ok=True)
    for eps in (float(e) for e in cfg.eps_list.split(",")):
        res = scan_threshold(eps, grid, log_N_cap=cfg.log_n_cap, h_min=cfg.h_min)
        with open(os.path.join(cfg.out_dir, f"scan_eps{eps}.csv"), "w") as fh:
            fh.write(res.to_csv())
        br = res.bracket
        summary.append({"eps": eps, "transitions": res.transitions, "bracket": br,
                        "distance_to_golden": None if br is None else min(abs(b - GOLDEN) for b in br)})
        print(f"eps={eps}: transitions={res.transitions} bracket={br}")
    write_json(os.path.join(cfg.out_dir, "summary.json"), {"config": cfg.__dict__, "results": summary})


if __name__ == "__main__":
    main(parse(ScanConfig))
