"""JSON instance configs, structure files and budget overrides."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError, MalformedInput
from .instance import Budgets, GroupInstance, SubgroupSpec
from .metrics import ConstantsCertificate
from .parabolics import FiniteBackend, FreeAbelianBackend, FreeBackend, ParabolicOracle
from .structures import HEnumerator, PeripheralCandidate, PeripheralEntry
from .words import Alphabet, free_reduce

SCHEMA_VERSION = 1
FIXTURES = ("INST-FREE", "INST-CYC", "INST-FPROD", "INST-Z")
ENV_PREFIX = "RELQC_BUDGET_"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_of(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def fixture_config(name: str) -> dict:
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    text = resources.files("relqc.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_group_config(spec: str) -> dict:
    """A path, or ``builtin:NAME`` for a shipped fixture."""
    if spec.startswith("builtin:"):
        return fixture_config(spec.split(":", 1)[1])
    return read_json(spec)


# --- budgets -----------------------------------------------------------------------

def budgets_from(config: dict | None, env=None, flags: dict | None = None) -> Budgets:
    """Precedence: flag > environment > config > default."""
    env = os.environ if env is None else env
    values = {}
    names = {f.name for f in fields(Budgets)}
    for key, value in (config or {}).items():
        if key not in names:
            raise ConfigError(f"unknown budget {key!r}")
        values[key] = value
    for name in names:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = raw
    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = value
    out = {}
    for key, value in values.items():
        try:
            out[key] = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"budget {key} must be an integer, got {value!r}") from None
        if out[key] < 0:
            raise ConfigError(f"budget {key} must be non-negative")
    return Budgets(**out)


# --- instances ------------------------------------------------------------------------

def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


def build_backend(spec: dict, where: str):
    kind = _require(spec, "kind", where)
    gens = _require(spec, "generators", where)
    if not isinstance(gens, dict) or not gens:
        raise ConfigError(f"{where}: generators must map X-letter names to values")
    values = list(gens.values())
    if kind == "free_abelian":
        return FreeAbelianBackend(int(_require(spec, "rank", where)), values)
    if kind == "free":
        rank = int(_require(spec, "rank", where))
        letters = []
        for v in values:
            if not isinstance(v, int) or v == 0 or abs(v) > rank:
                raise ConfigError(f"{where}: free generators map to signed basis indices 1..{rank}")
            letters.append(2 * (abs(v) - 1) + (v < 0))
        return FreeBackend(rank, letters)
    if kind == "finite":
        return FiniteBackend(_require(spec, "table", where), values)
    raise ConfigError(f"{where}: unknown backend kind {kind!r}")


def certificate_from(spec: dict) -> ConstantsCertificate:
    where = "constants"
    pd = spec.get("parabolic_distortion", [])
    return ConstantsCertificate(
        delta=int(_require(spec, "delta", where)),
        dehn_K=int(_require(spec, "dehn_K", where)),
        epsilon=dict(_require(spec, "epsilon", where)),
        local_to_global=dict(_require(spec, "local_to_global", where)),
        parabolic_distortion=tuple(None if e is None else (e[0], int(e[1])) for e in pd),
        provenance=str(spec.get("provenance", "")),
    )


def build_instance(config: dict, env=None, budget_flags: dict | None = None) -> GroupInstance:
    if config.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"instance config needs schema_version {SCHEMA_VERSION}")
    try:
        alphabet = Alphabet(_require(config, "generators", "instance"))
        oracles = []
        for i, spec in enumerate(config.get("parabolics", [])):
            where = f"parabolics[{i}]"
            backend = build_backend(spec, where)
            letters = [alphabet.letter(name) for name in spec["generators"]]
            rel_words = [alphabet.parse(r) for r in spec.get("relators", [])]
            oracles.append(ParabolicOracle(i, backend, letters, rel_words))
        constants = certificate_from(_require(config, "constants", "instance"))
        if len(constants.parabolic_distortion) not in (0, len(oracles)):
            raise ConfigError("constants.parabolic_distortion needs one entry per parabolic")
        budgets = budgets_from(config.get("budgets"), env, budget_flags)
        inst = GroupInstance(
            alphabet,
            oracles,
            relators=(),
            constants=constants,
            native=config.get("native_word_problem"),
            budgets=budgets,
            name=str(config.get("name", "")),
        )
        inst.relators = [inst.parse(r) for r in config.get("relators", [])]
        if inst.native == "free_product":
            for r, text in zip(inst.relators, config.get("relators", [])):
                if inst.normal_form(r):
                    raise ConfigError(f"relator {text!r} is not trivial in the free product")
    except MalformedInput as exc:
        raise ConfigError(str(exc)) from None
    return inst


def parse_subgroup(instance: GroupInstance, text: str) -> SubgroupSpec:
    """Comma separated X-words; each one is freely reduced."""
    words = [w for w in (part.strip() for part in text.split(",")) if w]
    if not words:
        raise ConfigError("a subgroup needs at least one generator")
    try:
        gens = tuple(free_reduce(instance.parse_xword(w), instance.alphabet) for w in words)
    except MalformedInput as exc:
        raise ConfigError(str(exc)) from None
    if any(not g for g in gens):
        raise ConfigError("subgroup generators must be non-trivial after free reduction")
    return SubgroupSpec(gens)


# --- structure files -------------------------------------------------------------------------

def structure_from(instance, subgroup, doc: dict, max_depth: int | None = None) -> PeripheralCandidate:
    """Entries with X-word generators, translated into Y-words by searching H."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"structure file needs schema_version {SCHEMA_VERSION}")
    henum = HEnumerator(instance, subgroup)
    entries = []
    for n, spec in enumerate(_require(doc, "entries", "structure")):
        where = f"entries[{n}]"
        i = int(_require(spec, "peripheral", where)) - 1
        if not 0 <= i < instance.n:
            raise ConfigError(f"{where}: no peripheral subgroup P{i + 1}")
        try:
            g = instance.parse_xword(spec.get("conjugator", ""))
            gens = []
            for text in _require(spec, "generators", where):
                word = instance.parse_xword(text)
                depth = max_depth if max_depth is not None else 4 * len(word) + 4
                y = henum.y_length(instance.normal_form(word), depth)
                if y is None:
                    raise ConfigError(f"{where}: generator {text!r} was not found in H within Y-length {depth}")
                gens.append(henum.ywords[henum.index[instance.normal_form(word)]])
        except MalformedInput as exc:
            raise ConfigError(f"{where}: {exc}") from None
        entries.append(PeripheralEntry(i, g, tuple(gens)))
    return PeripheralCandidate(tuple(entries))


def structure_to_json(instance, subgroup, cand: PeripheralCandidate) -> list:
    from .structures import format_yword

    out = []
    for e in cand.entries:
        out.append({
            "peripheral": e.index + 1,
            "conjugator": instance.alphabet.format(e.conjugator),
            "generators": [instance.alphabet.format(subgroup.expand(s)) for s in e.gens],
            "ywords": [format_yword(subgroup, s) for s in e.gens],
        })
    return out


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
