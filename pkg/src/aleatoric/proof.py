"""Equational proofs: the axiom registry, positional rewriting, trace checking and proof search."""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence

from .equivalence import decide_equiv
from .model import ProbModel
from .semantics import evaluate
from .syntax import (
    BOT, SUGAR_TYPES, TOP, And, Bot, Box, Cond, Expect, Formula, Implies, Ite, Not, Top, Var,
    agents, desugar, is_pure_ac, parse, positions, replace_at, subterm, to_text, unfold_once,
    variables,
)

__all__ = [
    "LR", "RL", "Axiom", "AXIOMS", "AC_AXIOMS", "MAC_AXIOMS", "A2_AS_PRINTED", "ABB",
    "ProofError", "ProofBudgetExceeded", "Step", "ProofTrace", "CheckResult",
    "match", "instantiate", "apply", "apply_step", "check", "lift",
    "prove_equiv", "normal_form_trace", "atom_sequence", "commutativity_trace", "duality_trace",
    "A0Specialization", "a0_specialize", "DEFAULT_BUDGET",
]

LR, RL = "LR", "RL"
ABB = "abb"
DEFAULT_BUDGET = 1_000_000
AGENT_META = "i"


class ProofError(ValueError):
    """A step does not apply: bad position, no match, or incomplete bindings."""


class ProofBudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Axioms


@dataclass(frozen=True)
class Axiom:
    name: str
    lhs: Formula
    rhs: Formula

    def sides(self, direction: str) -> tuple[Formula, Formula]:
        if direction == LR:
            return self.lhs, self.rhs
        if direction == RL:
            return self.rhs, self.lhs
        raise ProofError(f"direction must be LR or RL, not {direction!r}")

    @cached_property
    def metavariables(self) -> frozenset[str]:
        names = variables(self.lhs) | variables(self.rhs)
        if agents(self.lhs) | agents(self.rhs):
            names |= {AGENT_META}
        return names

    def __str__(self):
        return f"{self.name}: {self.lhs} == {self.rhs}"


_x, _y, _z, _p, _q, _r, _s, _c = (Var(n) for n in "xyzpqrsc")


def _cond(a, b):
    return Cond(a, b, AGENT_META)


def _ite(a, b, c):
    return Ite(a, b, c)


_AC = (
    Axiom("id", _x, _x),
    Axiom("vacuous", _ite(_x, TOP, BOT), _x),
    Axiom("ignore", _ite(_x, _y, _y), _y),
    Axiom("always", _ite(TOP, _x, _y), _x),
    Axiom("never", _ite(BOT, _x, _y), _y),
    Axiom("tree", _ite(_ite(_x, _y, _z), _p, _q), _ite(_x, _ite(_y, _p, _q), _ite(_z, _p, _q))),
    Axiom("swap", _ite(_x, _ite(_y, _p, _q), _ite(_y, _r, _s)),
          _ite(_y, _ite(_x, _p, _r), _ite(_x, _q, _s))),
)

_box_x = _cond(BOT, _x)
_MAC = (
    Axiom("A0", _cond(_ite(_x, _y, _z), _c),
          _ite(_cond(_x, _c), _cond(_y, _ite(_x, _c, BOT)), _cond(_z, _ite(_x, BOT, _c)))),
    # [F|x] /\ [x|y]  ==  [F | x v y]
    Axiom("A1", _ite(_box_x, _cond(_x, _y), BOT), _cond(BOT, _ite(_x, TOP, _y))),
    # [F|x] only takes the values 0 and 1, so it is idempotent under conjunction
    Axiom("A2", _box_x, _ite(_box_x, _box_x, BOT)),
    Axiom("A3", _cond(TOP, _x), TOP),
    Axiom("A4", _cond(_x, BOT), TOP),
)

# The A2 shape (c ? c : ~c) with c = [F|x] fails whenever c evaluates to 0;
# kept for reference and excluded from the registry.
A2_AS_PRINTED = Axiom("A2-printed", _box_x, _ite(_box_x, _box_x, _ite(_box_x, BOT, TOP)))

AC_AXIOMS = MappingProxyType({a.name: a for a in _AC})
MAC_AXIOMS = MappingProxyType({a.name: a for a in _MAC})
AXIOMS = MappingProxyType({**AC_AXIOMS, **MAC_AXIOMS})


def _axiom(ax) -> Axiom:
    if isinstance(ax, Axiom):
        return ax
    try:
        return AXIOMS[ax]
    except KeyError:
        raise ProofError(f"unknown axiom {ax!r}") from None


# ---------------------------------------------------------------------------
# Matching and rewriting


def match(pattern: Formula, term: Formula, bind: dict) -> bool:
    """Extend ``bind`` so that ``pattern`` instantiates to ``term``; False on clash.

    Every variable of the pattern is a metavariable; the agent ``i`` binds
    under the key ``"i"``.  ``bind`` may be partially updated on failure.
    """
    t = type(pattern)
    if t is Var:
        hit = bind.get(pattern.name)
        if hit is None:
            bind[pattern.name] = term
            return True
        return hit == term
    if type(term) is not t:
        return False
    if t is Ite:
        return (match(pattern.cond, term.cond, bind) and match(pattern.then, term.then, bind)
                and match(pattern.else_, term.else_, bind))
    if t is Cond:
        agent = bind.get(AGENT_META)
        if agent is None:
            bind[AGENT_META] = term.agent
        elif agent != term.agent:
            return False
        return match(pattern.target, term.target, bind) and match(pattern.given, term.given, bind)
    return True  # Top, Bot


def instantiate(pattern: Formula, bind: Mapping) -> Formula:
    t = type(pattern)
    try:
        if t is Var:
            return bind[pattern.name]
        if t is Ite:
            return Ite(instantiate(pattern.cond, bind), instantiate(pattern.then, bind),
                       instantiate(pattern.else_, bind))
        if t is Cond:
            return Cond(instantiate(pattern.target, bind), instantiate(pattern.given, bind),
                        bind[AGENT_META])
    except KeyError as e:
        raise ProofError(f"metavariable {e.args[0]!r} is unbound") from None
    return pattern


def _subterm(phi, pos):
    try:
        return subterm(phi, pos)
    except IndexError as e:
        raise ProofError(str(e)) from None


def apply(phi: Formula, ax, pos: Sequence[int] = (), direction: str = LR,
          bind: Mapping | None = None) -> tuple[Formula, dict]:
    """Rewrite the subterm at ``pos`` with one side of ``ax``.

    Metavariables that occur only on the produced side must be supplied in
    ``bind``.  Returns the new formula and the complete bindings.  ``ax`` may
    also be ``"abb"``: LR unfolds the abbreviation at ``pos`` by one level and
    RL folds the subterm back into ``bind["sugar"]``.
    """
    pos = tuple(pos)
    sub = _subterm(phi, pos)
    bind = dict(bind or {})
    if ax == ABB:
        return _apply_abb(phi, pos, direction, sub, bind)
    axiom = _axiom(ax)
    src, dst = axiom.sides(direction)
    extra = set(bind) - axiom.metavariables
    if extra:
        raise ProofError(f"{axiom.name} has no metavariable {sorted(extra)[0]!r}")
    if not match(src, sub, bind):
        raise ProofError(f"{axiom.name} {direction} does not match {sub} at {list(pos)}")
    new = instantiate(dst, bind)
    missing = axiom.metavariables - set(bind)
    if missing:
        raise ProofError(f"metavariable {sorted(missing)[0]!r} is unbound")
    return replace_at(phi, pos, new), bind


def _apply_abb(phi, pos, direction, sub, bind):
    if set(bind) - {"sugar"}:
        raise ProofError("abb takes only a 'sugar' binding")
    sugar = bind.get("sugar")
    if direction == LR:
        if not isinstance(sub, SUGAR_TYPES):
            raise ProofError(f"no abbreviation at {list(pos)}: {sub}")
        if sugar is not None and sugar != sub:
            raise ProofError(f"abb binding {sugar} differs from {sub}")
        return replace_at(phi, pos, unfold_once(sub)), {"sugar": sub}
    if direction != RL:
        raise ProofError(f"direction must be LR or RL, not {direction!r}")
    if sugar is None:
        raise ProofError("abb RL needs the 'sugar' binding")
    if not isinstance(sugar, SUGAR_TYPES) or unfold_once(sugar) != sub:
        raise ProofError(f"{sub} at {list(pos)} is not the expansion of {sugar}")
    return replace_at(phi, pos, sugar), {"sugar": sugar}


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class Step:
    axiom: str
    pos: tuple[int, ...]
    dir: str
    bind: Mapping = field(default_factory=dict)

    def flipped(self) -> Step:
        return Step(self.axiom, self.pos, RL if self.dir == LR else LR, self.bind)

    def shifted(self, prefix: Sequence[int]) -> Step:
        return Step(self.axiom, tuple(prefix) + self.pos, self.dir, self.bind)

    def to_json(self) -> dict:
        bind = {k: (v if k == AGENT_META and isinstance(v, str) else to_text(v))
                for k, v in sorted(self.bind.items())}
        return {"axiom": self.axiom, "pos": list(self.pos), "dir": self.dir, "bind": bind}

    @classmethod
    def from_json(cls, doc: Mapping) -> Step:
        try:
            bind = {k: (v if k == AGENT_META and doc["axiom"] != ABB else parse(v))
                    for k, v in doc.get("bind", {}).items()}
            return cls(doc["axiom"], tuple(int(k) for k in doc["pos"]), doc["dir"], bind)
        except (KeyError, TypeError) as e:
            raise ProofError(f"malformed step {doc!r}") from e


def apply_step(phi: Formula, step: Step) -> Formula:
    return apply(phi, step.axiom, step.pos, step.dir, step.bind)[0]


@dataclass(frozen=True)
class ProofTrace:
    start: Formula
    steps: tuple[Step, ...]
    end: Formula

    def __len__(self):
        return len(self.steps)

    def reversed(self) -> ProofTrace:
        """The same proof read from ``end`` back to ``start``."""
        return ProofTrace(self.end, tuple(s.flipped() for s in reversed(self.steps)), self.start)

    def then(self, other: ProofTrace) -> ProofTrace:
        if self.end != other.start:
            raise ProofError(f"cannot chain: {self.end} is not {other.start}")
        return ProofTrace(self.start, self.steps + other.steps, other.end)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"start": to_text(self.start), "end": to_text(self.end)},
                            ensure_ascii=False)]
        lines += [json.dumps(s.to_json(), ensure_ascii=False) for s in self.steps]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> ProofTrace:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or "start" not in rows[0] or "end" not in rows[0]:
            raise ProofError("trace must begin with a header carrying start and end")
        steps = tuple(Step.from_json(r) for r in rows[1:])
        return cls(parse(rows[0]["start"]), steps, parse(rows[0]["end"]))


def lift(trace: ProofTrace, context: Formula, pos: Sequence[int]) -> ProofTrace:
    """Run ``trace`` on the subterm of ``context`` at ``pos``."""
    pos = tuple(pos)
    if _subterm(context, pos) != trace.start:
        raise ProofError(f"subterm at {list(pos)} is not the trace start")
    return ProofTrace(context, tuple(s.shifted(pos) for s in trace.steps),
                      replace_at(context, pos, trace.end))


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    # 1-based index of the first bad step; len(steps) + 1 when only the end differs
    failed_step: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def check(trace: ProofTrace) -> CheckResult:
    """Replay every step from ``start`` and compare with ``end``."""
    cur = trace.start
    for k, step in enumerate(trace.steps, 1):
        try:
            cur = apply_step(cur, step)
        except ProofError as e:
            return CheckResult(False, k, str(e))
    if cur != trace.end:
        return CheckResult(False, len(trace.steps) + 1, f"replay ends at {cur}, not {trace.end}")
    return CheckResult(True)


# ---------------------------------------------------------------------------
# Trace construction


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self, n: int = 1):
        self.left -= n
        if self.left < 0:
            raise ProofBudgetExceeded("proof budget exhausted")


class _Builder:
    """Accumulates steps; each one is applied (and so validated) as it is added."""

    def __init__(self, start: Formula, budget: _Budget):
        self.start = self.cur = start
        self.steps: list[Step] = []
        self.budget = budget

    def at(self, pos) -> Formula:
        return subterm(self.cur, pos)

    def step(self, axiom, pos, direction=LR, **bind):
        self.budget.spend()
        self.cur, full = apply(self.cur, axiom, pos, direction, bind)
        self.steps.append(Step(axiom, tuple(pos), direction, full))

    def extend(self, trace: ProofTrace, pos=()):
        self.budget.spend(len(trace.steps))
        lifted = lift(trace, self.cur, pos)
        self.steps.extend(lifted.steps)
        self.cur = lifted.end

    def trace(self) -> ProofTrace:
        return ProofTrace(self.start, tuple(self.steps), self.cur)


def _unfold_all(b: _Builder, pos=()):
    node = b.at(pos)
    while isinstance(node, SUGAR_TYPES):
        b.step(ABB, pos, LR)
        node = b.at(pos)
    for k in range(len(node.children())):
        _unfold_all(b, pos + (k,))


def _is_atom(node) -> bool:
    return type(node) is Var or type(node) is Cond


def _atom_key(a: Formula):
    return (type(a) is not Var, to_text(a))


def _tree_form(b: _Builder, pos=()):
    """Rewrite the subterm at ``pos`` into a tree whose conditions are atoms."""
    node = b.at(pos)
    t = type(node)
    if t is Top or t is Bot:
        return
    if _is_atom(node):
        b.step("vacuous", pos, RL, x=node)
        return
    if t is not Ite:
        raise ProofError(f"unexpected {t.__name__} in tree-form construction")
    if not _is_atom(node.cond):
        _tree_form(b, pos + (0,))
    _tree_form(b, pos + (1,))
    _tree_form(b, pos + (2,))
    if not _is_atom(node.cond):
        _graft(b, pos)


def _graft(b: _Builder, pos):
    # (C ? A : B) with C, A, B tree forms: push A and B into the leaves of C
    c = b.at(pos).cond
    if type(c) is Top:
        b.step("always", pos, LR)
    elif type(c) is Bot:
        b.step("never", pos, LR)
    else:
        b.step("tree", pos, LR)
        _graft(b, pos + (1,))
        _graft(b, pos + (2,))


def _path_counts(phi: Formula, memo: dict) -> dict:
    hit = memo.get(phi)
    if hit is not None:
        return hit
    if type(phi) is not Ite:
        out = {}
    else:
        a, c = _path_counts(phi.then, memo), _path_counts(phi.else_, memo)
        out = {k: max(a.get(k, 0), c.get(k, 0)) for k in a.keys() | c.keys()}
        out[phi.cond] = out.get(phi.cond, 0) + 1
    memo[phi] = out
    return out


def _atoms(phi: Formula, memo: dict) -> frozenset:
    hit = memo.get(phi)
    if hit is not None:
        return hit
    if type(phi) is not Ite:
        out = frozenset()
    else:
        out = _atoms(phi.then, memo) | _atoms(phi.else_, memo) | {phi.cond}
    memo[phi] = out
    return out


def _pull(b: _Builder, pos, v, memo):
    node = b.at(pos)
    if type(node) is Ite and node.cond == v:
        return
    if v not in _atoms(node, memo):
        b.step("ignore", pos, RL, x=v)
        return
    _pull(b, pos + (1,), v, memo)
    _pull(b, pos + (2,), v, memo)
    b.step("swap", pos, LR)


def _uniformize(b: _Builder, pos, seq, memo):
    """Full tree testing ``seq[k]`` at every depth ``k`` below ``pos``."""
    if not seq:
        return
    _pull(b, pos, seq[0], memo)
    _uniformize(b, pos + (1,), seq[1:], memo)
    _uniformize(b, pos + (2,), seq[1:], memo)


def _bits_pos(bits) -> tuple[int, ...]:
    return tuple(1 if bit else 2 for bit in bits)


def _leaves(node, bits=()):
    if type(node) is Ite:
        yield from _leaves(node.then, bits + (1,))
        yield from _leaves(node.else_, bits + (0,))
    else:
        yield bits, node


class _Labeler:
    """Exchanges leaf labels of a level-uniform tree using only ``swap`` steps."""

    def __init__(self, b: _Builder, root, seq):
        self.b, self.root = b, tuple(root)
        self.block = []
        for k, atom in enumerate(seq):
            self.block.append(self.block[-1] + (atom != seq[k - 1]) if k else 0)

    def _transpose(self, bits, k, log):
        # swap at the depth-k node above `bits`: exchanges depths k and k+1 below it
        p = self.root + _bits_pos(bits[:k])
        self.b.step("swap", p, LR)
        log.append(p)
        return bits[:k] + (bits[k + 1], bits[k]) + bits[k + 2:]

    def _same_block(self, k, j):
        return j < len(self.block) and self.block[j] == self.block[k]

    def swap_leaves(self, a, c):
        i = next(k for k in range(len(a)) if a[k] != c[k])
        if not a[i]:
            a, c = c, a
        log: list = []
        # bring a 0 right after position i on a's side and a 1 on c's side
        j = next(j for j in range(i + 1, len(a)) if self._same_block(i, j) and not a[j])
        for k in range(j - 1, i, -1):
            a = self._transpose(a, k, log)
        j = next(j for j in range(i + 1, len(c)) if self._same_block(i, j) and c[j])
        for k in range(j - 1, i, -1):
            c = self._transpose(c, k, log)
        a = self._sort_tail(a, i + 2, log)
        c = self._sort_tail(c, i + 2, log)
        assert a[:i] == c[:i] and a[i + 2:] == c[i + 2:], (a, c)
        self._exchange(a[:i], a[i + 2:])
        for p in reversed(log):
            self.b.step("swap", p, LR)

    def _sort_tail(self, bits, start, log):
        # ones before zeros within each block, restricted to depths >= start
        changed = True
        while changed:
            changed = False
            for k in range(start, len(bits) - 1):
                if self._same_block(k, k + 1) and not bits[k] and bits[k + 1]:
                    bits = self._transpose(bits, k, log)
                    changed = True
        return bits

    def _exchange(self, q, rest):
        # swap the labels of leaves q.1.0.rest and q.0.1.rest
        p = self.root + _bits_pos(q)
        step = self.b.step
        if not rest:
            step("swap", p, LR)
            return
        step("swap", p + (1,), LR)
        step("swap", p + (2,), LR)
        step("swap", p, LR)
        self._exchange(q + (rest[0],), rest[1:])
        step("swap", p, LR)
        step("swap", p + (1,), LR)
        step("swap", p + (2,), LR)

    def canonicalize(self):
        """Within each class of leaves with equal per-block counts of true
        branches, put the T labels on the lexicographically first leaves
        (true branch before false branch)."""
        classes: dict = {}
        for bits, leaf in _leaves(self.b.at(self.root)):
            key = [0] * (self.block[-1] + 1 if self.block else 1)
            for k, bit in enumerate(bits):
                key[self.block[k]] += bit
            classes.setdefault(tuple(key), []).append((bits, type(leaf) is Top))
        for members in classes.values():
            members.sort(key=lambda m: tuple(-bit for bit in m[0]))
            n_top = sum(is_top for _, is_top in members)
            demote = [bits for bits, is_top in members[n_top:] if is_top]
            promote = [bits for bits, is_top in members[:n_top] if not is_top]
            for a, c in zip(demote, promote):
                self.swap_leaves(a, c)


def atom_sequence(*formulas) -> list:
    """Atoms in canonical order, each repeated by its largest count on one path."""
    memo: dict = {}
    depth: dict = {}
    for f in formulas:
        for atom, n in _path_counts(f, memo).items():
            depth[atom] = max(depth.get(atom, 0), n)
    return [a for a in sorted(depth, key=_atom_key) for _ in range(depth[a])]


def _normalize_at(b: _Builder, seq, pos=()):
    memo: dict = {}
    _uniformize(b, pos, seq, memo)
    _Labeler(b, pos, seq).canonicalize()


def _normal_form(phi, seq, budget: _Budget) -> ProofTrace:
    b = _Builder(phi, budget)
    _unfold_all(b)
    _tree_form(b)
    if seq is None:
        seq = atom_sequence(b.cur)
    _normalize_at(b, list(seq))
    return b.trace()


def normal_form_trace(phi: Formula, seq: Sequence[Formula] | None = None,
                      budget: int = DEFAULT_BUDGET) -> ProofTrace:
    """Trace from ``phi`` to its canonical level-uniform tree over ``seq``.

    ``seq`` lists atoms (each repeated once per depth it occupies); by
    default it is ``atom_sequence`` of ``phi``'s own tree form.  Two
    equivalent pure formulas reach the same tree for the same ``seq``.
    """
    return _normal_form(phi, seq, _Budget(budget))


def _prove_pure(phi, psi, budget: _Budget) -> ProofTrace:
    # each side to its own canonical form, then both up to the common sequence
    t1, t2 = _normal_form(phi, None, budget), _normal_form(psi, None, budget)
    seq = atom_sequence(t1.end, t2.end)
    if atom_sequence(t1.end) != seq:
        t1 = t1.then(_normal_form(t1.end, seq, budget))
    if atom_sequence(t2.end) != seq:
        t2 = t2.then(_normal_form(t2.end, seq, budget))
    if t1.end != t2.end:
        raise ProofError(f"canonical forms differ for equivalent {phi} and {psi}")
    return t1.then(t2.reversed())


# ---------------------------------------------------------------------------
# Modal normalization


def _mac_normalize(b: _Builder, pos=()):
    node = b.at(pos)
    if type(node) is Cond:
        _mac_normalize(b, pos + (0,))
        _mac_normalize(b, pos + (1,))
        _tree_form(b, pos + (0,))
        _tree_form(b, pos + (1,))
        _push_cond(b, pos)
    elif type(node) is Ite:
        for k in range(3):
            _mac_normalize(b, pos + (k,))


def _push_cond(b: _Builder, pos):
    # move if-then-else out of conditional targets and eliminate trivial conditionals
    node = b.at(pos)
    if type(node.given) is Bot:
        b.step("A4", pos, LR)
        return
    target = node.target
    if type(target) is Top:
        b.step("A3", pos, LR)
        return
    if type(target) is not Ite:
        return
    if type(target.then) is Top and type(target.else_) is Bot:
        b.step("vacuous", pos + (0,), LR)
        return
    b.step("A0", pos, LR)
    for k in (1, 2):
        _tree_form(b, pos + (k, 1))
        _push_cond(b, pos + (k,))
    _push_cond(b, pos + (0,))


def _random_model(names, agent_ids, rng, n_worlds=3) -> ProbModel:
    worlds = [f"w{k}" for k in range(n_worlds)]
    pi = {}
    for ag in agent_ids:
        pi[ag] = {}
        for w in worlds:
            if rng.random() < 0.15:
                continue
            weights = [rng.randint(0, 4) for _ in worlds]
            total = sum(weights)
            if total:
                pi[ag][w] = {u: Fraction(x, total) for u, x in zip(worlds, weights) if x}
    f = {w: {x: Fraction(rng.randint(0, 6), 6) for x in names} for w in worlds}
    return ProbModel(worlds, tuple(agent_ids), pi, f, tuple(names))


def _refuted(phi, psi, rng, trials=30) -> bool:
    names = sorted(variables(phi) | variables(psi))
    ags = sorted(agents(phi) | agents(psi))
    for _ in range(trials):
        m = _random_model(names, ags, rng)
        for w in m.worlds:
            if evaluate(m, w, phi) != evaluate(m, w, psi):
                return True
    return False


def _match_atoms(b1: _Builder, right: Formula, budget: _Budget, depth: int):
    """Rewrite conditionals of ``b1.cur`` into equal-valued conditionals of ``right``."""
    left_atoms = {a for _, a in positions(b1.cur) if type(a) is Cond}
    right_atoms = {a for _, a in positions(right) if type(a) is Cond}
    for a in sorted(left_atoms - right_atoms, key=to_text):
        for cand in sorted(right_atoms - left_atoms, key=to_text):
            if cand.agent != a.agent or cand.target != a.target:
                continue
            sub = _prove(a.given, cand.given, budget, depth + 1)
            if sub is None:
                continue
            for p, node in list(positions(b1.cur)):
                if node == a:
                    b1.extend(sub, p + (1,))
            break


_BFS_LIMIT = 4000


def _neighbours(phi, pool, agent_pool):
    for pos, sub in positions(phi):
        for ax in AXIOMS.values():
            if ax.name == "id":
                continue
            for direction in (LR, RL):
                src, dst = ax.sides(direction)
                bind: dict = {}
                if not match(src, sub, bind):
                    continue
                free = sorted(ax.metavariables - set(bind))
                choices = [{}]
                for m in free:
                    opts = agent_pool if m == AGENT_META else pool
                    choices = [dict(c, **{m: o}) for c in choices for o in opts]
                for extra in choices:
                    full = dict(bind, **extra)
                    yield (replace_at(phi, pos, instantiate(dst, full)),
                           Step(ax.name, pos, direction, full))


def _bfs(phi, psi, budget: _Budget) -> list[Step] | None:
    """Bidirectional breadth-first search; None when the local limit is reached."""
    pool = sorted({TOP, BOT} | {s for f in (phi, psi) for _, s in positions(f) if _is_atom(s)},
                  key=to_text)
    agent_pool = sorted(agents(phi) | agents(psi)) or ["i"]
    fwd = {phi: None}
    bwd = {psi: None}
    qf, qb = deque([phi]), deque([psi])
    expanded = 0

    def path(tree, node):
        out = []
        while tree[node] is not None:
            prev, step = tree[node]
            out.append(step)
            node = prev
        return out[::-1]

    while qf and qb and expanded < _BFS_LIMIT:
        for tree, other, queue in ((fwd, bwd, qf), (bwd, fwd, qb)):
            if not queue:
                continue
            node = queue.popleft()
            expanded += 1
            budget.spend()
            for nxt, step in _neighbours(node, pool, agent_pool):
                if nxt in tree:
                    continue
                tree[nxt] = (node, step)
                if nxt in other:
                    f_steps = path(fwd, nxt)
                    b_steps = path(bwd, nxt)
                    return f_steps + [s.flipped() for s in reversed(b_steps)]
                queue.append(nxt)
    return None


def _prove(phi, psi, budget: _Budget, depth: int = 0) -> ProofTrace | None:
    if phi == psi:
        return ProofTrace(phi, (), psi)
    core1, core2 = desugar(phi), desugar(psi)
    if is_pure_ac(core1) and is_pure_ac(core2):
        if not decide_equiv(core1, core2).equivalent:
            return None
        return _prove_pure(phi, psi, budget)
    b1, b2 = _Builder(phi, budget), _Builder(psi, budget)
    _unfold_all(b1)
    _unfold_all(b2)
    _mac_normalize(b1)
    _mac_normalize(b2)
    if depth < 4:
        _match_atoms(b1, b2.cur, budget, depth)
    _tree_form(b1)
    _tree_form(b2)
    seq = atom_sequence(b1.cur, b2.cur)
    mid1, mid2 = b1.cur, b2.cur
    n1, n2 = len(b1.steps), len(b2.steps)
    _normalize_at(b1, seq)
    _normalize_at(b2, seq)
    if b1.cur == b2.cur:
        return b1.trace().then(b2.trace().reversed())
    # atoms are opaque conditionals here; canonical forms can differ on equal values
    if _refuted(core1, core2, random.Random(to_text(phi) + "|" + to_text(psi))):
        return None
    steps = _bfs(mid1, mid2, budget)
    if steps is None:
        raise ProofBudgetExceeded("no proof found within the search limit")
    t1 = ProofTrace(phi, tuple(b1.steps[:n1]), mid1)
    t2 = ProofTrace(psi, tuple(b2.steps[:n2]), mid2)
    middle = ProofTrace(mid1, tuple(steps), mid2)
    return t1.then(middle).then(t2.reversed())


def prove_equiv(phi: Formula, psi: Formula, budget: int = DEFAULT_BUDGET) -> ProofTrace | None:
    """An axiom-level trace from ``phi`` to ``psi``, or None when refuted.

    Pure formulas go through tree forms, a common level-uniform refinement
    and canonical leaf labelling, so a trace exists exactly when the formulas
    are equivalent.  Modal formulas are normalized by pushing if-then-else out
    of conditional targets, matching conditionals with provably equal givens
    and then treating them as atoms; a bounded bidirectional search is the
    last resort.  None is returned only after a semantic refutation; failing
    to find a proof within ``budget`` raises ``ProofBudgetExceeded``.
    """
    return _prove(phi, psi, _Budget(budget))


# ---------------------------------------------------------------------------
# Worked derivations


def commutativity_trace() -> ProofTrace:
    """``(x ? y : F)`` to ``(y ? x : F)`` in five atomic steps."""
    x, y = Var("x"), Var("y")
    b = _Builder(Ite(x, y, BOT), _Budget(100))
    b.step("vacuous", (1,), RL, x=y)
    b.step("ignore", (2,), RL, x=y)
    b.step("swap", (), LR)
    b.step("vacuous", (1,), LR)
    b.step("ignore", (2,), LR)
    return b.trace()


def duality_trace(x: Formula = Var("x"), y: Formula = Var("y"), agent: str = "i") -> ProofTrace:
    """``[~x|y]@i`` to ``[x|y]@i -> B@i ~(x & y)``."""
    b = _Builder(Cond(Not(x), y, agent), _Budget(100))
    b.step(ABB, (0,), LR)
    b.step("A0", (), LR)
    b.step("A3", (2,), LR)
    # (x ? y : F) inside the box's given becomes ~~(x & y)
    conj = And(x, y)
    g = (1, 1)
    b.step(ABB, g, RL, sugar=conj)
    b.step("vacuous", g, RL, x=conj)
    b.step("never", g + (1,), RL, x=BOT, y=TOP)
    b.step("always", g + (2,), RL, x=BOT, y=TOP)
    b.step("tree", g, RL)
    b.step(ABB, g + (0,), RL, sugar=Not(conj))
    b.step(ABB, g, RL, sugar=Not(Not(conj)))
    b.step(ABB, (1,), RL, sugar=Box(agent, Not(conj)))
    b.step(ABB, (), RL, sugar=Implies(Cond(x, y, agent), Box(agent, Not(conj))))
    return b.trace()


@dataclass(frozen=True)
class A0Specialization:
    """``E_i(x & y) == (E_i x ? [y|x]_i : B_i x)``, proved from A0.

    Where ``guard`` (``B_i x``) evaluates to 0 the right side collapses to
    ``E_i x & [y|x]_i``, giving the equation ``lhs == rhs``.
    """

    trace: ProofTrace
    lhs: Formula
    rhs: Formula
    guard: Formula
    agent: str

    def guard_holds(self, model: ProbModel, world: str) -> bool:
        return evaluate(model, world, self.guard) == 0

    def values(self, model: ProbModel, world: str) -> tuple[Fraction, Fraction] | None:
        """``(value of lhs, value of rhs)``, or None when the guard fails."""
        if not self.guard_holds(model, world):
            return None
        return evaluate(model, world, self.lhs), evaluate(model, world, self.rhs)

    def kolmogorov(self, model: ProbModel, world: str) -> tuple[Fraction, Fraction] | None:
        """``([y|x]_i, E_i(x & y) / E_i x)``; None unless the guard holds and ``E_i x > 0``."""
        if not self.guard_holds(model, world):
            return None
        ex = evaluate(model, world, self.lhs.left)
        if ex == 0:
            return None
        return evaluate(model, world, self.lhs.right), evaluate(model, world, self.rhs) / ex


def a0_specialize(x: Formula, agent: str, y: Formula = Var("y")) -> A0Specialization:
    b = _Builder(Expect(agent, And(x, y)), _Budget(100))
    b.step(ABB, (), LR)
    b.step(ABB, (0,), LR)
    b.step("A0", (), LR, z=BOT)
    b.step("vacuous", (1, 1), LR)
    b.step(ABB, (0,), RL, sugar=Expect(agent, x))
    b.step(ABB, (2, 1), RL, sugar=Not(x))
    b.step(ABB, (2,), RL, sugar=Box(agent, x))
    trace = b.trace()
    return A0Specialization(trace, And(Expect(agent, x), Cond(y, x, agent)),
                            Expect(agent, And(x, y)), Box(agent, x), agent)
