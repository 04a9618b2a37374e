"""Certify the localization chain over a grid of (p, eps), standard and nonnegative."""

import os
import sys
import time
from dataclasses import dataclass

sys.path.insert(0, os.path.dirname(__file__))
from _config import parse, write_json  # noqa: E402

from frameforge.errors import Infeasible  # noqa: E402
from frameforge.localization import certify, solve_params  # noqa: E402


@dataclass
class CertConfig:
    """Certificate sweep."""
    p_list: str = "1.5,1.65,1.7,1.8,1.9,2.0,2.5"
    eps_list: str = "0.2,0.5,0.6"
    prec: int = 256
    out_dir: str = "results/certificates"


def main(cfg: CertConfig):
    rows = []
    for nonneg in (False, True):
        for p in (float(x) for x in cfg.p_list.split(",")):
            for eps in (float(x) for x in cfg.eps_list.split(",")):
                t0 = time.perf_counter()
                try:
                    prm = solve_params(p, eps, nonneg, prec=cfg.prec)
                except Infeasible:
                    rows.append({"p": p, "eps": eps, "nonneg": nonneg, "feasible": False})
                    continue
                cert = certify(prm, prec=cfg.prec)
                rows.append({
                    "p": p, "eps": eps, "nonneg": nonneg, "feasible": True, "valid": cert.valid,
                    "log10_N": len(str(prm.N)) - 1, "iv": float(cert.conditions["iv"]),
                    "min_margin_entry": min(cert.chain, key=lambda e: float(e.margin)).id,
                    "seconds": round(time.perf_counter() - t0, 3),
                })
                print(rows[-1])
    write_json(os.path.join(cfg.out_dir, "sweep.json"), {"config": cfg.__dict__, "rows": rows})


if __name__ == "__main__":
    main(parse(CertConfig))
