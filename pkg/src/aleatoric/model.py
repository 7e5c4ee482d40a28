"""Finite probability models and Kripke models, with exact JSON (de)serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Mapping

__all__ = [
    "ModelError", "Violation", "ProbModel", "PointedModel", "KripkeModel",
    "to_fraction", "validate", "load", "save", "load_path",
    "validate_kripke", "load_kripke", "save_kripke", "load_kripke_path",
]


class ModelError(ValueError):
    """Malformed model document or inconsistent model data."""


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    detail: str

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


def to_fraction(value) -> Fraction:
    """Read a probability literal exactly.

    Accepts ``Fraction``, ``int``, ``Decimal`` and strings such as ``"1/4"``
    or ``"0.25"``.  Floats are read through their shortest decimal repr so
    that ``0.1`` means one tenth.
    """
    if isinstance(value, bool):
        raise ModelError(f"not a probability literal: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            out = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelError(f"not a rational probability literal: {value!r}") from None
        return out
    raise ModelError(f"not a probability literal: {value!r}")


@dataclass(frozen=True)
class ProbModel:
    """A finite probability model ``(W, pi, f)``.

    ``pi[agent][w]`` is a sparse map from successor world to probability;
    absent entries are 0 and an absent or all-zero row is the empty
    distribution.  ``f[w][x]`` is the probability that variable ``x`` samples
    true at ``w``.  Instances are treated as read-only after construction.
    """

    worlds: tuple[str, ...]
    agents: tuple[str, ...]
    pi: Mapping[str, Mapping[str, Mapping[str, Fraction]]]
    f: Mapping[str, Mapping[str, Fraction]]
    variables: tuple[str, ...] = ()
    _float_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "worlds", tuple(self.worlds))
        set_(self, "agents", tuple(self.agents))
        pi = {}
        for agent, rows in self.pi.items():
            pi[agent] = {}
            for w, row in rows.items():
                dense = {v: to_fraction(p) for v, p in row.items()}
                pi[agent][w] = {v: p for v, p in dense.items() if p != 0}
        set_(self, "pi", pi)
        f = {w: {x: to_fraction(p) for x, p in vals.items()} for w, vals in self.f.items()}
        set_(self, "f", f)
        if not self.variables:
            names = sorted({x for vals in f.values() for x in vals})
            set_(self, "variables", tuple(names))
        else:
            set_(self, "variables", tuple(self.variables))

    def row(self, agent: str, world: str) -> Mapping[str, Fraction]:
        """The distribution ``pi_agent(world)`` as a sparse map."""
        if agent not in self.pi and agent not in self.agents:
            raise KeyError(f"unknown agent {agent!r}")
        return self.pi.get(agent, {}).get(world, {})

    def float_row(self, agent: str, world: str) -> tuple[list[str], list[float]]:
        key = (agent, world)
        if key not in self._float_cache:
            row = self.row(agent, world)
            succ = list(row)
            cum, total = [], 0.0
            for v in succ:
                total += float(row[v])
                cum.append(total)
            self._float_cache[key] = (succ, cum)
        return self._float_cache[key]

    def point(self, world: str) -> PointedModel:
        return PointedModel(self, world)


@dataclass(frozen=True)
class PointedModel:
    model: ProbModel
    point: str

    def __post_init__(self):
        if self.point not in self.model.worlds:
            raise ModelError(f"point {self.point!r} is not a world of the model")


def validate(m: ProbModel) -> list[Violation]:
    """Every invariant breach of ``m`` as data; an empty list means valid."""
    out = []
    worlds = set(m.worlds)
    if len(worlds) != len(m.worlds):
        out.append(Violation("duplicate-world", "worlds", "world ids must be unique"))
    if not m.worlds:
        out.append(Violation("empty", "worlds", "a model needs at least one world"))
    for agent, rows in m.pi.items():
        if agent not in m.agents:
            out.append(Violation("unknown-agent", f"pi[{agent}]", "agent not declared"))
        for w, row in rows.items():
            where = f"pi[{agent}][{w}]"
            if w not in worlds:
                out.append(Violation("unknown-world", where, f"{w!r} is not a world"))
            for v, p in row.items():
                if v not in worlds:
                    out.append(Violation("unknown-world", where, f"successor {v!r} is not a world"))
                if not 0 <= p <= 1:
                    out.append(Violation("range", where, f"pi({v}) = {p} outside [0,1]"))
            total = sum(row.values(), Fraction(0))
            if total not in (0, 1):
                out.append(Violation("row-sum", where, f"distribution sums to {total}, not 0 or 1"))
    for w in m.worlds:
        vals = m.f.get(w)
        if vals is None:
            out.append(Violation("missing-assignment", f"f[{w}]", "world has no variable assignment"))
            continue
        for x in m.variables:
            if x not in vals:
                out.append(Violation("missing-assignment", f"f[{w}]", f"no probability for {x!r}"))
        for x, p in vals.items():
            if not 0 <= p <= 1:
                out.append(Violation("range", f"f[{w}][{x}]", f"{p} outside [0,1]"))
    for w in m.f:
        if w not in worlds:
            out.append(Violation("unknown-world", f"f[{w}]", f"{w!r} is not a world"))
    return out


# ---------------------------------------------------------------------------
# JSON


def _decode(data) -> dict:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    return doc


def _world_ids(doc) -> list[str]:
    ids = []
    for entry in doc.get("worlds", []):
        wid = entry.get("id") if isinstance(entry, dict) else entry
        if not isinstance(wid, str):
            raise ModelError(f"bad world entry {entry!r}")
        ids.append(wid)
    return ids


def load(data) -> ProbModel:
    """Parse a probability-model JSON document (bytes or str)."""
    doc = _decode(data)
    if "worlds" not in doc:
        raise ModelError("model document has no 'worlds'")
    worlds = _world_ids(doc)
    known = set(worlds)
    f = {}
    declared = doc.get("variables")
    for entry in doc["worlds"]:
        if not isinstance(entry, dict) or not isinstance(entry.get("f", {}), dict):
            raise ModelError(f"world entry must be an object with an 'f' map: {entry!r}")
        f[entry["id"]] = {x: to_fraction(p) for x, p in entry.get("f", {}).items()}
    variables = list(declared) if declared is not None else sorted({x for v in f.values() for x in v})
    for w, vals in f.items():
        missing = [x for x in variables if x not in vals]
        if missing:
            raise ModelError(f"world {w!r} has no probability for {', '.join(missing)}")
    pi_doc = doc.get("pi", {})
    agents = list(doc.get("agents", list(pi_doc)))
    pi = {a: {} for a in agents}
    for agent, rows in pi_doc.items():
        if agent not in pi:
            raise ModelError(f"pi mentions undeclared agent {agent!r}")
        for w, row in rows.items():
            if w not in known:
                raise ModelError(f"pi[{agent}] refers to unknown world {w!r}")
            for v in row:
                if v not in known:
                    raise ModelError(f"pi[{agent}][{w}] refers to unknown world {v!r}")
            pi[agent][w] = {v: to_fraction(p) for v, p in row.items()}
    return ProbModel(worlds=worlds, agents=agents, pi=pi, f=f, variables=tuple(variables))


def load_path(path) -> ProbModel:
    with open(path, "rb") as fh:
        return load(fh.read())


def save(m: ProbModel) -> bytes:
    """Canonical JSON: fixed key order, exact ``a/b`` strings, zero entries dropped."""
    doc = {
        "agents": list(m.agents),
        "variables": list(m.variables),
        "worlds": [
            {"id": w, "f": {x: str(m.f[w][x]) for x in m.variables if x in m.f.get(w, {})}}
            for w in m.worlds
        ],
        "pi": {
            a: {
                w: {v: str(m.pi[a][w][v]) for v in m.worlds if v in m.pi[a][w]}
                for w in m.worlds if m.pi.get(a, {}).get(w)
            }
            for a in m.agents
        },
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Kripke models


@dataclass(frozen=True)
class KripkeModel:
    """``(W, R, V)`` with one accessibility relation per agent."""

    worlds: tuple[str, ...]
    relation: Mapping[str, frozenset[tuple[str, str]]]
    valuation: Mapping[str, frozenset[str]]
    agents: tuple[str, ...] = ()

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "worlds", tuple(self.worlds))
        set_(self, "relation", {a: frozenset(tuple(e) for e in r) for a, r in self.relation.items()})
        set_(self, "valuation", {q: frozenset(ws) for q, ws in self.valuation.items()})
        if not self.agents:
            set_(self, "agents", tuple(sorted(self.relation)))
        else:
            set_(self, "agents", tuple(self.agents))

    def successors(self, agent: str, world: str) -> frozenset[str]:
        return frozenset(v for (u, v) in self.relation.get(agent, ()) if u == world)


def validate_kripke(k: KripkeModel, enforce_12: bool = False) -> list[Violation]:
    """Seriality always; euclidean and transitive closure only when asked."""
    out = []
    known = set(k.worlds)
    for agent in k.agents:
        for (u, v) in sorted(k.relation.get(agent, ())):
            for w in (u, v):
                if w not in known:
                    out.append(Violation("unknown-world", f"R[{agent}]", f"{w!r} is not a world"))
    for q, ws in k.valuation.items():
        for w in sorted(ws - known):
            out.append(Violation("unknown-world", f"V[{q}]", f"{w!r} is not a world"))
    for agent in k.agents:
        succ = {w: k.successors(agent, w) for w in k.worlds}
        for w in k.worlds:
            if not succ[w]:
                out.append(Violation("seriality", f"R[{agent}]({w})", "world has no successor"))
        if not enforce_12:
            continue
        for w in k.worlds:
            for u in sorted(succ[w]):
                for v in sorted(succ[w]):
                    if v not in succ.get(u, ()):
                        out.append(Violation(
                            "euclidean", f"R[{agent}]",
                            f"{u}∈R({w}), {v}∈R({w}), need {v}∈R({u})"))
                for v in sorted(succ.get(u, ())):
                    if v not in succ[w]:
                        out.append(Violation(
                            "transitive", f"R[{agent}]",
                            f"{u}∈R({w}), {v}∈R({u}), need {v}∈R({w})"))
    return out


def load_kripke(data) -> KripkeModel:
    doc = _decode(data)
    if "worlds" not in doc:
        raise ModelError("Kripke document has no 'worlds'")
    worlds = _world_ids(doc)
    known = set(worlds)
    rel_doc = doc.get("R", {})
    agents = list(doc.get("agents", list(rel_doc)))
    relation = {a: set() for a in agents}
    for agent, pairs in rel_doc.items():
        if agent not in relation:
            raise ModelError(f"R mentions undeclared agent {agent!r}")
        for pair in pairs:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ModelError(f"relation entries must be [from, to] pairs, got {pair!r}")
            u, v = pair
            if u not in known or v not in known:
                raise ModelError(f"R[{agent}] refers to unknown world in {pair!r}")
            relation[agent].add((u, v))
    valuation = {}
    for q, ws in doc.get("V", {}).items():
        unknown = [w for w in ws if w not in known]
        if unknown:
            raise ModelError(f"V[{q}] refers to unknown world {unknown[0]!r}")
        valuation[q] = set(ws)
    return KripkeModel(worlds=worlds, relation=relation, valuation=valuation, agents=tuple(agents))


def load_kripke_path(path) -> KripkeModel:
    with open(path, "rb") as fh:
        return load_kripke(fh.read())


def save_kripke(k: KripkeModel) -> bytes:
    order = {w: n for n, w in enumerate(k.worlds)}
    doc = {
        "agents": list(k.agents),
        "worlds": list(k.worlds),
        "R": {
            a: [list(e) for e in sorted(k.relation.get(a, ()), key=lambda e: (order[e[0]], order[e[1]]))]
            for a in k.agents
        },
        "V": {q: sorted(ws, key=order.__getitem__) for q, ws in sorted(k.valuation.items())},
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
