"""Ticks each fixture needs before the detector accepts.

Termination at a given fuel is empirical, so this reports the measured fuel per
fixture/subgroup pair instead of a universal bound.

    python scripts/fuel_to_accept.py --fuel 2000000 --json fuel.json
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

from relqc.config import build_instance, fixture_config, parse_subgroup
from relqc.detector import Accept, Fuel, detect


@dataclass
class FuelRunConfig:
    fuel: int = 2_000_000
    slice: int = 2000
    mode: str = "standard"
    cases: list = field(default_factory=lambda: [
        ("INST-FPROD", "b"),
        ("INST-FPROD", "a1,b"),
        ("INST-FREE", "a b"),
        ("INST-CYC", "b"),
        ("INST-CYC", "a b"),
        ("INST-Z", "a"),
        ("INST-Z", "a a"),
    ])


def run_case(name: str, subgroup: str, cfg: FuelRunConfig) -> dict:
    inst = build_instance(fixture_config(name))
    h = parse_subgroup(inst, subgroup)
    out = detect(inst, h, Fuel(cfg.fuel, cfg.slice), cfg.mode)
    row = {"fixture": name, "subgroup": subgroup, "outcome": out.kind, "ticks": out.ticks}
    if isinstance(out, Accept):
        row.update(entries=out.structure.m, nu=out.nu, N=out.evidence["constants"]["N"],
                   escalations=out.evidence["escalations"])
    else:
        row.update(explored=out.snapshot["explored"], stalled=len(out.snapshot["stalled"]))
    return row


def main(argv=None) -> int:
    cfg = FuelRunConfig()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--fuel", type=int, default=cfg.fuel)
    p.add_argument("--slice", type=int, default=cfg.slice)
    p.add_argument("--mode", choices=("standard", "constructive"), default=cfg.mode)
    p.add_argument("--json", help="also write the rows here")
    args = p.parse_args(argv)
    cfg.fuel, cfg.slice, cfg.mode = args.fuel, args.slice, args.mode

    rows = []
    for name, subgroup in cfg.cases:
        row = run_case(name, subgroup, cfg)
        rows.append(row)
        print(f"{name:11s} <{subgroup}>\t{row['outcome']:12s} {row['ticks']:>9d} ticks", flush=True)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"config": asdict(cfg), "rows": rows}, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
