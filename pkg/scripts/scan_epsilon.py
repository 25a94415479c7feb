"""Compare the certified epsilon(lambda, c) of a fixture with an empirical ball scan.

The empirical value is a lower estimate of the true constant on a finite ball; the
certified value must never fall below it.

    python scripts/scan_epsilon.py --fixture INST-FPROD --radius 3
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from relqc.config import build_instance, fixture_config
from relqc.metrics import bcp_epsilon
from relqc.relcayley import empirical_epsilon


@dataclass
class ScanConfig:
    fixture: str = "INST-FPROD"
    radius: int = 3
    component_bound: int = 1
    lambdas: tuple = (1, 2, 3)
    cs: tuple = (0, 1, 2)


def main(argv=None) -> int:
    cfg = ScanConfig()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--fixture", default=cfg.fixture)
    p.add_argument("--radius", type=int, default=cfg.radius)
    p.add_argument("--component-bound", type=int, default=cfg.component_bound)
    args = p.parse_args(argv)
    cfg.fixture, cfg.radius, cfg.component_bound = args.fixture, args.radius, args.component_bound

    inst = build_instance(fixture_config(cfg.fixture))
    print("lambda\tc\tcertified\tempirical")
    below = 0
    for lam in cfg.lambdas:
        for c in cfg.cs:
            certified = bcp_epsilon(inst, lam, c).value
            empirical = empirical_epsilon(inst, lam, c, cfg.radius, cfg.component_bound)
            below += certified < empirical
            print(f"{lam}\t{c}\t{certified}\t\t{empirical}", flush=True)
    print("certified >= empirical everywhere" if not below else f"{below} pairs where the certificate is too small")
    return 1 if below else 0


if __name__ == "__main__":
    sys.exit(main())
