import json

import pytest

import relqc.detector as detector
from relqc.cli import dump, outcome_body, result_document
from relqc.errors import ConfigError
from relqc.instance import SubgroupSpec
from relqc.structures import PeripheralCandidate, PeripheralEntry, SLICE_END
from relqc.detector import (
    Accept,
    CandidateEnumerator,
    Fuel,
    OutOfFuel,
    Rejected,
    detect,
    drop_finite_peripherals,
    partial_algorithm,
    step2_constants,
    step3_bound,
)


def sub(inst, *words):
    return SubgroupSpec(tuple(inst.parse_xword(w) for w in words))


def test_fuel_validation():
    with pytest.raises(ConfigError):
        Fuel(-1)
    with pytest.raises(ConfigError):
        Fuel(10, 0)
    assert Fuel(10, 3, 4).left == 6


def test_tiny_fuel_out_of_fuel(fprod, free):
    for inst, h in ((fprod, sub(fprod, "b")), (free, sub(free, "a b"))):
        out = detect(inst, h, Fuel(10, 5))
        assert isinstance(out, OutOfFuel) and out.snapshot["explored"] >= 1 and out.ticks <= 10


def test_detect_rejects_unknown_mode(fprod):
    with pytest.raises(ConfigError):
        detect(fprod, sub(fprod, "b"), Fuel(10), mode="greedy")


def test_accept_free_factor(fprod):
    out = detect(fprod, sub(fprod, "b"), Fuel(10**6))
    assert isinstance(out, Accept) and out.structure.m == 0
    assert out.certified and out.nu >= 1 and out.lam >= 1 and out.c >= 0
    ev = out.evidence
    assert ev["constants"]["N"] >= 8 and ev["nu"] == out.nu


def test_accept_classical_cyclic(free):
    out = detect(free, sub(free, "a b"), Fuel(10**6))
    assert isinstance(out, Accept) and out.structure.m == 0


def test_step_constants_fixture(fprod):
    h = sub(fprod, "b")
    consts = step2_constants(fprod, h, PeripheralCandidate(()), 1, 8)
    assert (consts.L, consts.lam, consts.c, consts.epsilon, consts.D) == (146, 72, 8, 1441, 0)
    assert step3_bound(consts) == 0
    h = sub(fprod, "a1", "b")
    cand = PeripheralCandidate((PeripheralEntry(0, (), ((0,),)),))
    consts = step2_constants(fprod, h, cand, 1, 8)
    assert consts.D == 1441
    assert step3_bound(consts) == max(1441 * 8 * 9, 1441 * 72 * 9)


def test_remark_fixture_rejected(fprod):
    h = sub(fprod, "a1", "a2", "b")
    cand = PeripheralCandidate((PeripheralEntry(0, (), ((0, 0), (2,))),))
    out = partial_algorithm(fprod, h, cand, fuel=10**5)
    assert isinstance(out, Rejected) and out.step == 3
    assert out.witness.j == out.witness.k == 0 and h.expand(out.witness.h) == fprod.parse_xword("a1")


def test_constructive_mode_refines(fprod):
    h = sub(fprod, "a1", "a2", "b")
    cand = PeripheralCandidate((PeripheralEntry(0, (), ((0, 0), (2,))),))
    events = []
    out = partial_algorithm(fprod, h, cand, fuel=3000, mode="constructive", events=events.append)
    assert any(e["kind"] == "refine" for e in events)
    assert not isinstance(out, Rejected)


def test_drop_finite_peripherals(fprod):
    h = sub(fprod, "a1", "b")
    trivial = PeripheralEntry(0, (), ())
    cyclic = PeripheralEntry(0, (), ((0,),))
    out = drop_finite_peripherals(fprod, h, PeripheralCandidate((trivial, cyclic)))
    assert out.entries == (cyclic,)


def test_drop_finite_backend():
    from relqc.config import build_instance, fixture_config

    config = fixture_config("INST-CYC")
    config["parabolics"][0] = {"kind": "finite", "generators": {"a": 1}, "table": [[0, 1], [1, 0]]}
    config["relators"] = ["a a"]
    inst = build_instance(config)
    h = sub(inst, "a", "b")
    cand = PeripheralCandidate((PeripheralEntry(0, (), ((0,),)),))
    assert drop_finite_peripherals(inst, h, cand).m == 0


def test_enumerator_order(fprod):
    enum = CandidateEnumerator(fprod, sub(fprod, "a1", "b"))
    first, spent, done = enum.next_candidate(10)
    assert first.m == 0 and spent == 0 and not done
    ticks = 0
    target = PeripheralCandidate((PeripheralEntry(0, (), ((0,),)),))
    for _ in range(50):
        cand, spent, done = enum.next_candidate(1000)
        ticks += spent
        if cand == target:
            break
    else:
        pytest.fail("candidate {<a1>} not emitted")
    assert ticks <= 10
    # (b, empty, P1) is tested and rejected
    assert all(t[0] != (2,) or t[1] != () for t in enum.kept)


def test_enumerator_groups_by_conjugator(fprod):
    enum = CandidateEnumerator(fprod, sub(fprod, "a1", "b"))
    seen = []
    spent_total = 0
    while spent_total < 3000 and len(seen) < 40:
        cand, spent, _ = enum.next_candidate(500)
        spent_total += spent
        if cand is not None:
            seen.append(cand)
    multi = [c for c in seen if any(len(e.gens) > 1 for e in c.entries)]
    assert multi, "subsets sharing (g, i) are grouped into one entry"
    assert len(seen) == len(set(seen))


class NeverEnding:
    """Stand-in partial run that never terminates."""

    log: dict = {}

    def __init__(self, instance, subgroup, cand, henum, mode, events, ident):
        self.ident = ident
        self.ticks = 0
        NeverEnding.log[ident] = 0

    def state(self):
        return {"id": self.ident}

    def steps(self):
        while True:
            NeverEnding.log[self.ident] += 1
            yield SLICE_END


def test_candidate_fairness(monkeypatch, fprod):
    monkeypatch.setattr(detector, "PartialRun", NeverEnding)
    h = sub(fprod, "a1", "b")
    counts = []
    for total in (400, 4000):
        NeverEnding.log = {}
        out = detect(fprod, h, Fuel(total, 5))
        assert isinstance(out, OutOfFuel)
        counts.append(dict(NeverEnding.log))
    small, big = counts
    assert len(big) > len(small) >= 2
    # every candidate started in the short run keeps receiving slices
    assert all(big[k] > small[k] for k in small)


def document(inst, h, out):
    return dump(result_document("detect", {"x": 1}, outcome_body(inst, h, out, None)))


def test_determinism_and_fuel_monotone(fprod):
    h = sub(fprod, "b")
    a = detect(fprod, h, Fuel(10**5))
    b = detect(fprod, h, Fuel(10**5))
    c = detect(fprod, h, Fuel(2 * 10**5))
    assert document(fprod, h, a) == document(fprod, h, b) == document(fprod, h, c)
    assert json.loads(document(fprod, h, a))["timing"]["ticks"] == a.ticks


def test_modes_agree(fprod, free):
    for inst, h in ((fprod, sub(fprod, "b")), (free, sub(free, "a b"))):
        s = detect(inst, h, Fuel(10**6), mode="standard")
        c = detect(inst, h, Fuel(10**6), mode="constructive")
        assert isinstance(s, Accept) and isinstance(c, Accept)
        assert s.structure == c.structure


def test_fuel_boundary(fprod):
    h = sub(fprod, "b")
    ticks = detect(fprod, h, Fuel(10**5)).ticks
    assert isinstance(detect(fprod, h, Fuel(ticks)), Accept)
    assert isinstance(detect(fprod, h, Fuel(ticks - 1)), OutOfFuel)
    cand = PeripheralCandidate(())
    ticks = partial_algorithm(fprod, h, cand).ticks
    assert isinstance(partial_algorithm(fprod, h, cand, fuel=ticks), Accept)
    assert isinstance(partial_algorithm(fprod, h, cand, fuel=ticks - 1), OutOfFuel)
