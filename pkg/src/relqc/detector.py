"""The semi-algorithm: candidate enumeration, metered partial algorithms and dovetailing."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .errors import BudgetExceeded, ConfigError, ContractError
from .metrics import bcp_epsilon, local_to_global, o1_bound, parabolic_affine_bound
from .structures import (
    SLICE_END,
    EmbeddingConstants,
    HEnumerator,
    PeripheralCandidate,
    PeripheralEntry,
    compute_nu,
    generator_values,
    initial_N,
    mu,
    nu_parameters,
    parabolic_witness_steps,
    refine_structure,
    short_O_letters_steps,
    truncated_geodesic_steps,
    validate_candidate,
)
from .words import reduced_words

MODES = ("standard", "constructive")


@dataclass
class Fuel:
    total: int
    slice: int = 2000
    consumed: int = 0

    def __post_init__(self):
        if self.total < 0 or self.slice < 1:
            raise ConfigError("fuel must be non-negative and the slice positive")

    @property
    def left(self) -> int:
        return self.total - self.consumed


# --- outcomes ----------------------------------------------------------------------------

@dataclass
class Accept:
    structure: PeripheralCandidate
    lam: Fraction
    c: Fraction
    nu: int
    evidence: dict
    candidate_id: int = 0
    ticks: int = 0
    kind: str = "accept"

    @property
    def certified(self) -> bool:
        return all(self.evidence["certified"].values())


@dataclass
class Rejected:
    witness: object
    step: int
    candidate: PeripheralCandidate
    detail: dict = field(default_factory=dict)
    kind: str = "rejected"


@dataclass
class OutOfFuel:
    snapshot: dict
    ticks: int = 0
    kind: str = "out_of_fuel"


@dataclass
class Stalled:
    """A candidate whose search outgrew a memory budget; it is not scheduled again."""

    reason: str
    kind: str = "stalled"


# --- events --------------------------------------------------------------------------------

Event = dict
EventSink = Callable[[Event], None]


def _emit(sink, **event):
    if sink is not None:
        sink(event)


# --- the partial algorithm ---------------------------------------------------------------------

def drop_finite_peripherals(instance, subgroup, cand: PeripheralCandidate) -> PeripheralCandidate:
    kept = []
    for e in cand.entries:
        values = generator_values(instance, subgroup, e)
        if not instance.oracles[e.index].backend.is_finite(values):
            kept.append(e)
    return PeripheralCandidate(tuple(kept))


def step2_constants(instance, subgroup, cand, mu_value: int, N: int) -> EmbeddingConstants:
    """L, lambda, c, epsilon and D for the current N."""
    cert = instance.constants
    l2g = local_to_global(instance, cert.delta, N)
    consts = EmbeddingConstants(mu_value, N, L=l2g.L, lam=mu_value * l2g.lam, c=l2g.c)
    e1 = bcp_epsilon(instance, l2g.lam, l2g.c + mu_value)
    e2 = bcp_epsilon(instance, N, N + mu_value)
    consts.epsilon = max(e1.value, e2.value)
    D = 0
    d_cert = True
    for e in cand.entries:
        D = max(D, o1_bound(instance, subgroup, e.conjugator, e.index, list(e.gens), consts.epsilon + 2 * len(e.conjugator)))
        d_cert = d_cert and parabolic_affine_bound(instance, e.index).certified
    consts.D = D
    consts.flags = {
        "local_to_global": l2g.certified,
        "epsilon": e1.certified and e2.certified,
        "D": d_cert,
    }
    return consts


def step3_bound(consts: EmbeddingConstants) -> int:
    """max{D N (mu + N), D (lambda/mu) (mu + c)}."""
    D, N, m = consts.D, consts.N, consts.mu
    second = D * (consts.lam / m) * (m + consts.c)
    return max(D * N * (m + N), math.ceil(second))


class PartialRun:
    """Steps 1-5 for one candidate as a metered generator, with a readable state."""

    def __init__(self, instance, subgroup, cand: PeripheralCandidate, henum: HEnumerator, mode: str = "standard",
                 events: EventSink | None = None, ident: int = 0):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        self.instance = instance
        self.subgroup = subgroup
        self.cand = cand
        self.henum = henum
        self.mode = mode
        self.events = events
        self.ident = ident
        self.step = 1
        self.N = None
        self.mu = None
        self.escalations = 0
        self.refinements = 0
        self.ticks = 0
        self.consts: EmbeddingConstants | None = None

    def state(self) -> dict:
        return {
            "id": self.ident, "step": self.step, "N": self.N, "mu": self.mu,
            "escalations": self.escalations, "refinements": self.refinements, "ticks": self.ticks,
            "m": self.cand.m,
        }

    def _goto(self, step):
        self.step = step
        _emit(self.events, kind="step", candidate=self.ident, step=step, N=self.N)

    def steps(self) -> Iterator:
        inst, sub = self.instance, self.subgroup
        self._goto(1)
        self.mu = mu(sub, self.cand)
        self.N = initial_N(self.mu)
        while True:
            self._goto(2)
            yield
            consts = step2_constants(inst, sub, self.cand, self.mu, self.N)
            self.consts = consts
            self._goto(3)
            bound = step3_bound(consts)
            witness = yield from parabolic_witness_steps(inst, sub, self.cand, bound, self.henum)
            if witness is not None:
                if self.mode == "standard":
                    return Rejected(witness, 3, self.cand, {"bound": bound})
                self.cand = refine_structure(inst, sub, self.cand, witness)
                self.refinements += 1
                _emit(self.events, kind="refine", candidate=self.ident, witness=list(witness[:2]), m=self.cand.m)
                self.mu = mu(sub, self.cand)
                self.N = max(self.N, initial_N(self.mu))
                yield SLICE_END
                continue
            self._goto(4)
            letters = []
            for j in range(self.cand.m):
                letters.extend((yield from short_O_letters_steps(inst, sub, self.cand, j, consts.D, self.henum)))
            bad = yield from truncated_geodesic_steps(inst, sub, self.cand, letters, consts.L, consts.C, consts.C)
            if bad is not None:
                self.N += 1
                self.escalations += 1
                _emit(self.events, kind="escalate", candidate=self.ident, N=self.N)
                continue
            self._goto(5)
            yield
            final = drop_finite_peripherals(inst, sub, self.cand)
            lam_nu, c_nu = nu_parameters(self.mu, consts.lam, consts.c)
            eps_nu = bcp_epsilon(inst, lam_nu, c_nu)
            nu = compute_nu(eps_nu.value, self.mu)
            evidence = self.evidence(consts, eps_nu, nu, short_letters=len(letters), step3_bound=bound)
            return Accept(final, consts.lam, consts.c, nu, evidence, self.ident)

    def evidence(self, consts: EmbeddingConstants, eps_nu, nu: int, **checked) -> dict:
        cert = self.instance.constants
        flags = dict(consts.flags)
        flags["nu"] = eps_nu.certified
        return {
            "delta": cert.delta,
            "dehn_K": cert.dehn_K,
            "constants": consts.to_json(),
            "nu": nu,
            "epsilon_nu": eps_nu.value,
            "escalations": self.escalations,
            "refinements": self.refinements,
            "checked": checked,
            "certified": dict(sorted(flags.items())),
            "provenance": cert.provenance,
        }


def partial_algorithm(instance, subgroup, cand: PeripheralCandidate, fuel: int | None = None, mode: str = "standard",
                      henum: HEnumerator | None = None, events: EventSink | None = None):
    """Run steps 1-5 on one candidate: Accept, Rejected, or OutOfFuel after ``fuel`` ticks."""
    validate_candidate(instance, subgroup, cand)
    henum = henum or HEnumerator(instance, subgroup)
    pr = PartialRun(instance, subgroup, cand, henum, mode, events)
    gen = pr.steps()
    ticks = 0
    try:
        while True:
            next(gen)
            if fuel is not None and ticks >= fuel:
                return OutOfFuel({"candidates": [pr.state()], "explored": 1}, ticks)
            ticks += 1
            pr.ticks = ticks
    except StopIteration as stop:
        result = stop.value
        if isinstance(result, Accept):
            result.ticks = ticks
        return result


# --- candidate enumeration ---------------------------------------------------------------------

class CandidateEnumerator:
    """Deterministic stream of candidates, metered by ticks.

    Triples (h, g, i) are tried by total length |h| + |g| (h a non-empty reduced
    Y-word, g a reduced X-word); a triple is kept when g h g^-1 lies in P_i.  When
    the k-th triple is kept, every subset of the kept triples that contains it is
    emitted, grouped into entries by (g, i).  The empty structure comes first.
    """

    def __init__(self, instance, subgroup):
        self.instance = instance
        self.subgroup = subgroup
        self.kept: list = []
        self.pending: list = [PeripheralCandidate(())]
        self.triples_tested = 0
        self._gen = self._triples()

    def _triples(self):
        inst, sub = self.instance, self.subgroup
        if inst.n == 0:
            return
        for total in itertools.count(1):
            for hl in range(1, total + 1):
                for h in reduced_words(sub.alphabet_size, hl):
                    hx = sub.expand(h)
                    for g in reduced_words(len(inst.alphabet), total - hl):
                        word = g + hx + inst.inverse(g)
                        for i in range(inst.n):
                            yield
                            self.triples_tested += 1
                            if inst.native_parabolic_value(i, word) is not None:
                                self._keep((h, g, i))

    def _keep(self, triple):
        self.kept.append(triple)
        k = len(self.kept) - 1
        for mask in range(1 << k):
            chosen = [self.kept[t] for t in range(k) if mask >> t & 1] + [triple]
            self.pending.append(group_triples(chosen))

    def next_candidate(self, budget: int):
        """Spend up to ``budget`` ticks; return (candidate or None, ticks spent, finished)."""
        spent = 0
        while not self.pending:
            if spent >= budget:
                return None, spent, False
            try:
                next(self._gen)
            except StopIteration:
                return None, spent, True
            spent += 1
        return self.pending.pop(0), spent, False


def group_triples(triples) -> PeripheralCandidate:
    entries: dict = {}
    for h, g, i in triples:
        entries.setdefault((g, i), []).append(h)
    return PeripheralCandidate(tuple(PeripheralEntry(i, g, tuple(hs)) for (g, i), hs in entries.items()))


# --- dovetailing -------------------------------------------------------------------------------

def detect(instance, subgroup, fuel: Fuel, mode: str = "standard", events: EventSink | None = None,
           max_candidates: int | None = None):
    """Fair round-robin over the enumerated candidates; the first Accept wins.

    Each round gives every live candidate one slice, then lets the enumerator run
    for at most one slice or until it emits one candidate.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    if instance.constants is None:
        raise ConfigError("detection needs a constants certificate")
    henum = HEnumerator(instance, subgroup)
    enum = CandidateEnumerator(instance, subgroup)
    live: list = []
    rejected: list = []
    stalled: list = []
    explored = 0
    enum_done = False
    next_id = 0

    def snapshot():
        return {
            "explored": explored,
            "live": [r.state() for r, _ in live],
            "rejected": rejected,
            "stalled": stalled,
            "triples_tested": enum.triples_tested,
            "triples_kept": len(enum.kept),
            "h_elements": len(henum.elements),
        }

    while True:
        for entry in list(live):
            run_, gen = entry
            used = 0
            while used < fuel.slice:
                try:
                    marker = next(gen)
                except StopIteration as stop:
                    result = stop.value
                    live.remove(entry)
                    if isinstance(result, Accept):
                        result.ticks = fuel.consumed
                        _emit(events, kind="accept", candidate=run_.ident, ticks=fuel.consumed)
                        return result
                    rejected.append({"id": run_.ident, "step": result.step, "witness": list(result.witness[:2])})
                    _emit(events, kind="reject", candidate=run_.ident, step=result.step)
                    break
                except (BudgetExceeded, ContractError) as exc:
                    live.remove(entry)
                    stalled.append({"id": run_.ident, "reason": str(exc)})
                    _emit(events, kind="stall", candidate=run_.ident, reason=str(exc))
                    break
                if fuel.left <= 0:  # a finished run costs nothing; a further step needs a tick
                    return OutOfFuel(snapshot(), fuel.consumed)
                fuel.consumed += 1
                run_.ticks += 1
                used += 1
                if marker == SLICE_END:
                    break
        if fuel.left <= 0:
            if not live:
                return OutOfFuel(snapshot(), fuel.consumed)
            continue  # let the live runs finish if they need no further tick
        if not enum_done and (max_candidates is None or explored < max_candidates):
            cand, spent, enum_done = enum.next_candidate(min(fuel.slice, fuel.left))
            fuel.consumed += spent
            if cand is not None:
                fuel.consumed = min(fuel.total, fuel.consumed + 1)  # emitting costs one tick
                explored += 1
                run_ = PartialRun(instance, subgroup, cand, henum, mode, events, next_id)
                next_id += 1
                live.append((run_, run_.steps()))
                _emit(events, kind="candidate", candidate=run_.ident, m=cand.m)
        elif not live:
            return OutOfFuel(snapshot(), fuel.consumed)
