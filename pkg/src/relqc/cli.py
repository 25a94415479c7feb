"""Command-line front end.

Exit codes: 0 accept/success, 1 usage or config error, 2 out of fuel, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .config import (
    SCHEMA_VERSION,
    build_instance,
    load_group_config,
    parse_subgroup,
    read_json,
    sha256_of,
    structure_from,
    structure_to_json,
)
from .detector import Accept, Fuel, OutOfFuel, Rejected, detect, partial_algorithm
from .errors import BudgetExceeded, ConfigError, ContractError, MalformedInput, RelqcError, UnsupportedInstance
from .metrics import GContext, distortion_table
from .relcayley import ball, relative_length
from .structures import format_yword, validate_candidate

EXIT_OK, EXIT_CONFIG, EXIT_FUEL, EXIT_BUDGET = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def result_document(command: str, inputs: dict, body: dict) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "input_hash": sha256_of(inputs),
    }
    doc.update(body)
    return _jsonable(doc)


def dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def outcome_body(instance, subgroup, outcome, fuel: Fuel | None) -> dict:
    body = {"outcome": outcome.kind}
    if fuel is not None:
        body["fuel"] = {"consumed": fuel.consumed}
    if isinstance(outcome, Accept):
        body.update({
            "structure": structure_to_json(instance, subgroup, outcome.structure),
            "lambda": outcome.lam,
            "c": outcome.c,
            "nu": outcome.nu,
            "evidence": outcome.evidence,
            "certified": outcome.certified,
            "timing": {"ticks": outcome.ticks},
            "candidate_id": outcome.candidate_id,
        })
    elif isinstance(outcome, Rejected):
        w = outcome.witness
        body.update({
            "step": outcome.step,
            "witness": {
                "j": w.j + 1, "k": w.k + 1,
                "h": instance.alphabet.format(subgroup.expand(w.h)),
                "h_yword": format_yword(subgroup, w.h),
            },
            "structure": structure_to_json(instance, subgroup, outcome.candidate),
            "detail": outcome.detail,
        })
    elif isinstance(outcome, OutOfFuel):
        body.update({"snapshot": outcome.snapshot, "timing": {"ticks": outcome.ticks}})
    return body


def summary_line(outcome) -> str:
    if isinstance(outcome, Accept):
        status = "certified" if outcome.certified else "NON-CERTIFIED"
        return (f"accept: {len(outcome.structure.entries)} peripheral entries, lambda={outcome.lam}, "
                f"c={outcome.c}, nu={outcome.nu} ({status})")
    if isinstance(outcome, Rejected):
        return f"rejected at step {outcome.step}"
    return f"out of fuel after {outcome.ticks} ticks"


def exit_code(outcome) -> int:
    if isinstance(outcome, OutOfFuel):
        return EXIT_FUEL
    return EXIT_OK


# --- commands ----------------------------------------------------------------------------

def _budget_flags(args) -> dict:
    return {
        "max_ball_radius": getattr(args, "max_ball_radius", None),
        "max_component_bound": getattr(args, "max_component_bound", None),
        "max_ball_vertices": getattr(args, "max_ball_vertices", None),
    }


def _load(args):
    config = load_group_config(args.group)
    inst = build_instance(config, budget_flags=_budget_flags(args))
    return config, inst


def _emit_doc(args, doc: dict):
    text = dump(doc)
    if getattr(args, "json", None):
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_detect(args) -> int:
    config, inst = _load(args)
    sub = parse_subgroup(inst, args.subgroup)
    total = args.fuel if args.fuel is not None else inst.budgets.default_fuel
    fuel = Fuel(total, args.slice)
    events = None
    sink = None
    if args.events:
        sink = open(args.events, "w", encoding="utf-8")
        events = lambda e: sink.write(json.dumps(_jsonable(e), sort_keys=True) + "\n")  # noqa: E731
    try:
        outcome = detect(inst, sub, fuel, args.mode, events)
    finally:
        if sink:
            sink.close()
    inputs = {"group": config, "subgroup": args.subgroup, "mode": args.mode, "slice": args.slice}
    doc = result_document("detect", inputs, outcome_body(inst, sub, outcome, fuel))
    _emit_doc(args, doc)
    print(summary_line(outcome), file=sys.stderr)
    return exit_code(outcome)


def cmd_check(args) -> int:
    config, inst = _load(args)
    sub = parse_subgroup(inst, args.subgroup)
    structure_doc = read_json(args.structure)
    cand = structure_from(inst, sub, structure_doc)
    try:
        validate_candidate(inst, sub, cand)
    except ContractError as exc:
        raise ConfigError(f"invalid structure: {exc}") from None
    total = args.fuel if args.fuel is not None else inst.budgets.default_fuel
    outcome = partial_algorithm(inst, sub, cand, fuel=total, mode=args.mode)
    inputs = {"group": config, "subgroup": args.subgroup, "structure": structure_doc, "mode": args.mode}
    doc = result_document("check", inputs, outcome_body(inst, sub, outcome, None))
    _emit_doc(args, doc)
    if isinstance(outcome, Rejected):
        print(f"rejected at step {outcome.step}: witness h = {doc['witness']['h']}", file=sys.stderr)
    else:
        print(summary_line(outcome), file=sys.stderr)
    return exit_code(outcome)


def cmd_dist(args) -> int:
    config, inst = _load(args)
    sub = parse_subgroup(inst, args.subgroup)
    gens = [inst.normal_form(y) for y in sub.gens]
    ctx = GContext(inst)
    member = _membership_oracle(inst, sub, args.upto)
    inputs = {"group": config, "subgroup": args.subgroup, "upto": args.upto}
    try:
        table = distortion_table(ctx, gens, member, args.upto, label=args.subgroup)
    except BudgetExceeded as exc:
        doc = result_document("dist", inputs, {"outcome": "budget_exceeded", "message": str(exc), "partial": exc.partial})
        _emit_doc(args, doc)
        return EXIT_BUDGET
    doc = result_document("dist", inputs, {"outcome": "ok", "table": table.to_json()})
    _emit_doc(args, doc)
    for n, (v, exact) in enumerate(zip(table.entries, table.exact)):
        print(f"{n}\t{v}\t{'exact' if exact else 'bound'}", file=sys.stderr)
    return EXIT_OK


def _membership_oracle(inst, sub, upto: int):
    """H-membership on the X-ball of radius ``upto``: the H-elements a Y-search reaches
    inside that ball.  Complete when every such element has Y-length <= its X-length
    times the longest generator, which holds for the shipped fixtures."""
    from .structures import HEnumerator

    henum = HEnumerator(inst, sub)
    depth = upto * max(1, sub.max_len())
    members = set()
    for k in henum.within(depth):
        members.add(henum.elements[k])
    return lambda g: g in members


def cmd_ball(args) -> int:
    config, inst = _load(args)
    inputs = {"group": config, "radius": args.radius, "B": args.component_bound}
    try:
        rb = ball(inst, args.radius, args.component_bound)
    except BudgetExceeded as exc:
        doc = result_document("ball", inputs, {"outcome": "budget_exceeded", "message": str(exc), "partial": exc.partial})
        _emit_doc(args, doc)
        return EXIT_BUDGET
    counts = {}
    for d in rb.dist.values():
        counts[d] = counts.get(d, 0) + 1
    body = {"outcome": "ok", "vertices": len(rb), "sphere_sizes": [counts.get(r, 0) for r in range(args.radius + 1)],
            "exact": False}
    if args.list:
        body["elements"] = sorted((inst.format(v), d) for v, d in rb.dist.items())
    _emit_doc(args, result_document("ball", inputs, body))
    print(f"{len(rb)} vertices", file=sys.stderr)
    return EXIT_OK


def cmd_rellen(args) -> int:
    config, inst = _load(args)
    w = inst.parse(args.word)
    inputs = {"group": config, "word": args.word, "method": args.method}
    try:
        n = relative_length(inst, w, method=args.method, component_bound_override=args.component_bound)
    except BudgetExceeded as exc:
        doc = result_document("rellen", inputs, {"outcome": "budget_exceeded", "message": str(exc), "partial": exc.partial})
        _emit_doc(args, doc)
        return EXIT_BUDGET
    _emit_doc(args, result_document("rellen", inputs, {"outcome": "ok", "relative_length": n, "exact": True}))
    print(n, file=sys.stderr)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relqc", description="Detect relatively quasiconvex subgroups.")
    p.add_argument("--version", action="version", version=f"relqc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--group", required=True, help="instance config path, or builtin:NAME")
        sp.add_argument("--json", help="write the result document here instead of stdout")
        sp.add_argument("--max-ball-radius", type=int)
        sp.add_argument("--max-component-bound", type=int)
        sp.add_argument("--max-ball-vertices", type=int)

    d = sub.add_parser("detect", help="run the semi-algorithm")
    common(d)
    d.add_argument("--subgroup", "--sub", required=True, help='generators of H, e.g. "a1,b"')
    d.add_argument("--fuel", type=int)
    d.add_argument("--slice", type=int, default=2000)
    d.add_argument("--mode", choices=("standard", "constructive"), default="standard")
    d.add_argument("--events", help="write progress events as JSON lines")
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("check", help="run steps 1-5 on one given structure")
    common(c)
    c.add_argument("--subgroup", "--sub", required=True)
    c.add_argument("--structure", required=True)
    c.add_argument("--fuel", type=int)
    c.add_argument("--mode", choices=("standard", "constructive"), default="standard")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("dist", help="distortion table of H in G")
    common(t)
    t.add_argument("--subgroup", "--sub", required=True)
    t.add_argument("--upto", type=int, required=True)
    t.set_defaults(func=cmd_dist)

    b = sub.add_parser("ball", help="ball of the relative Cayley graph")
    common(b)
    b.add_argument("--radius", type=int, required=True)
    b.add_argument("--component-bound", type=int, default=1)
    b.add_argument("--list", action="store_true", help="include the vertices")
    b.set_defaults(func=cmd_ball)

    r = sub.add_parser("rellen", help="relative length of a word")
    common(r)
    r.add_argument("--word", required=True)
    r.add_argument("--method", choices=("auto", "native", "o3"), default="auto")
    r.add_argument("--component-bound", type=int)
    r.set_defaults(func=cmd_rellen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, MalformedInput, ContractError, UnsupportedInstance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except RelqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
