"""Decision procedure for equivalence of pure aleatoric-calculus formulas.

The verdict comes from the path-product polynomial.  Tree forms, paths and the
alignment/swap construction are kept as certificate machinery and as an
independent second route to the same polynomial.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .model import ProbModel
from .polynomial import Polynomial
from .semantics import evaluate
from .syntax import BOT, TOP, Bot, Formula, Ite, Top, Var, desugar, is_pure_ac, variables

__all__ = [
    "Leaf", "Node", "TreeForm", "LEAF_TOP", "LEAF_BOT", "Token", "Path",
    "NotPureAC", "TreeBudgetExceeded", "DEFAULT_TREE_BUDGET",
    "to_tree_form", "tree_to_formula", "tree_from_formula", "tree_size", "tree_variables",
    "paths", "path_key", "polynomial", "path_polynomial", "eval_tree",
    "EquivalenceResult", "decide_equiv", "align_and_swap", "apply_swaps", "uniformize",
]

DEFAULT_TREE_BUDGET = 2**20


class NotPureAC(ValueError):
    """A conditional-expectation operator occurs where only AC is allowed."""


class TreeBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=True)
class Leaf:
    value: bool

    def __str__(self):
        return "T" if self.value else "F"


@dataclass(frozen=True, eq=True)
class Node:
    """``(var ? hi : lo)``; ``hi`` is the branch taken when ``var`` samples true."""
    var: str
    hi: "TreeForm"
    lo: "TreeForm"

    def __str__(self):
        return tree_to_formula(self).__str__()


TreeForm = Union[Leaf, Node]
LEAF_TOP = Leaf(True)
LEAF_BOT = Leaf(False)


class Token(NamedTuple):
    var: str
    positive: bool

    def __str__(self):
        return self.var if self.positive else "~" + self.var


Path = tuple  # tuple[Token, ...]


def path_key(path: Path):
    """Canonical print order: by variable name, positive before negated."""
    return tuple((t.var, not t.positive) for t in path)


def _require_ac(phi: Formula) -> Formula:
    core = desugar(phi)
    if not is_pure_ac(core):
        raise NotPureAC(f"conditional expectation in {phi}")
    return core


# ---------------------------------------------------------------------------
# Tree forms


def tree_size(t: TreeForm) -> int:
    """Number of nodes and leaves, counting shared subtrees once per occurrence."""
    memo: dict[int, int] = {}

    def go(n):
        if isinstance(n, Leaf):
            return 1
        hit = memo.get(id(n))
        if hit is None:
            hit = memo[id(n)] = 1 + go(n.hi) + go(n.lo)
        return hit

    return go(t)


def tree_variables(t: TreeForm) -> frozenset[str]:
    memo: dict[int, frozenset] = {}

    def go(n):
        if isinstance(n, Leaf):
            return frozenset()
        hit = memo.get(id(n))
        if hit is None:
            hit = memo[id(n)] = go(n.hi) | go(n.lo) | {n.var}
        return hit

    return go(t)


def _graft(c: TreeForm, a: TreeForm, b: TreeForm) -> TreeForm:
    # replace T leaves of c by a and F leaves by b; shared subtrees stay shared
    memo: dict[int, TreeForm] = {}

    def go(n):
        if isinstance(n, Leaf):
            return a if n.value else b
        hit = memo.get(id(n))
        if hit is None:
            hit = memo[id(n)] = Node(n.var, go(n.hi), go(n.lo))
        return hit

    return go(c)


def to_tree_form(phi: Formula, budget: int = DEFAULT_TREE_BUDGET) -> TreeForm:
    """An equivalent tree whose every condition is a bare variable.

    Atoms are lifted to ``(x ? T : F)``, compound conditions are flattened by
    pushing the branches into the condition's leaves, and constant conditions
    select a branch.  Raises ``TreeBudgetExceeded`` once the tree would have
    more than ``budget`` nodes.
    """
    core = _require_ac(phi)
    memo: dict[int, TreeForm] = {}
    keep = []

    def go(n):
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        t = type(n)
        if t is Top:
            out = LEAF_TOP
        elif t is Bot:
            out = LEAF_BOT
        elif t is Var:
            out = Node(n.name, LEAF_TOP, LEAF_BOT)
        else:
            out = _graft(go(n.cond), go(n.then), go(n.else_))
            if tree_size(out) > budget:
                raise TreeBudgetExceeded(f"tree form exceeds {budget} nodes")
        keep.append(n)
        memo[id(n)] = out
        return out

    return go(core)


def tree_to_formula(t: TreeForm) -> Formula:
    memo: dict[int, Formula] = {}

    def go(n):
        if isinstance(n, Leaf):
            return TOP if n.value else BOT
        hit = memo.get(id(n))
        if hit is None:
            hit = memo[id(n)] = Ite(Var(n.var), go(n.hi), go(n.lo))
        return hit

    return go(t)


def tree_from_formula(phi: Formula) -> TreeForm:
    """Read a formula that is already in tree form."""
    t = type(phi)
    if t is Top:
        return LEAF_TOP
    if t is Bot:
        return LEAF_BOT
    if t is Ite and type(phi.cond) is Var:
        return Node(phi.cond.name, tree_from_formula(phi.then), tree_from_formula(phi.else_))
    raise ValueError(f"not a tree form: {phi}")


def paths(t: TreeForm) -> tuple[frozenset, frozenset]:
    """``(Top, Bot)``: root-to-leaf token sequences ending in a T or an F leaf."""
    top, bot = [], []
    stack = [(t, ())]
    while stack:
        n, pre = stack.pop()
        if isinstance(n, Leaf):
            (top if n.value else bot).append(pre)
        else:
            stack.append((n.hi, pre + (Token(n.var, True),)))
            stack.append((n.lo, pre + (Token(n.var, False),)))
    return frozenset(top), frozenset(bot)


# ---------------------------------------------------------------------------
# Polynomials


def polynomial(phi: Formula) -> Polynomial:
    """Expected value as a polynomial in the indeterminates ``p_x``."""
    core = _require_ac(phi)
    memo: dict[int, Polynomial] = {}
    keep = []

    def go(n):
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        t = type(n)
        if t is Top:
            out = Polynomial.constant(1)
        elif t is Bot:
            out = Polynomial()
        elif t is Var:
            out = Polynomial.var(n.name)
        else:
            c = go(n.cond)
            out = c * go(n.then) + (1 - c) * go(n.else_)
        keep.append(n)
        memo[id(n)] = out
        return out

    return go(core)


def path_polynomial(t: TreeForm) -> Polynomial:
    """Sum over Top paths of the product of ``p_x`` and ``1 - p_x`` factors."""
    total = Polynomial()
    for path in paths(t)[0]:
        term = Polynomial.constant(1)
        for tok in path:
            p = Polynomial.var(tok.var)
            term = term * (p if tok.positive else 1 - p)
        total = total + term
    return total


def eval_tree(t: TreeForm, valuation) -> Fraction:
    """Path-product value of a tree at a valuation ``{var: probability}``."""
    total = Fraction(0)
    for path in paths(t)[0]:
        term = Fraction(1)
        for tok in path:
            p = Fraction(valuation[tok.var])
            term *= p if tok.positive else 1 - p
        total += term
    return total


# ---------------------------------------------------------------------------
# Decision


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    polynomial: Polynomial | None = None
    witness: dict | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    # used only when no sampled valuation separates two distinct polynomials
    monomial: str | None = None

    def __bool__(self):
        return self.equivalent

    def certificate(self) -> dict:
        if self.equivalent:
            return {"equivalent": True, "polynomial": str(self.polynomial)}
        if self.witness is not None:
            return {"equivalent": False,
                    "witness": {k: str(v) for k, v in self.witness.items()},
                    "lhs": str(self.lhs), "rhs": str(self.rhs)}
        return {"equivalent": False, "monomial": self.monomial}


def _single_world(valuation) -> ProbModel:
    return ProbModel(worlds=("w",), agents=(), pi={}, f={"w": dict(valuation)},
                     variables=tuple(sorted(valuation)))


def decide_equiv(phi: Formula, psi: Formula, seed: int = 0, trials: int = 64) -> EquivalenceResult:
    """Equivalent iff the two polynomials are identical.

    A negative verdict carries a valuation at which the exact values differ:
    the all-1/2 valuation if it separates, else the first hit of a seeded
    random search.
    """
    p1, p2 = polynomial(phi), polynomial(psi)
    if p1 == p2:
        return EquivalenceResult(True, polynomial=p1)
    names = sorted(variables(phi) | variables(psi))
    rng = random.Random(seed)
    core1, core2 = desugar(phi), desugar(psi)
    for k in range(trials + 1):
        val = {}
        for x in names:
            d = 2 if k == 0 else rng.randint(1, 97)
            val[x] = Fraction(1 if k == 0 else rng.randint(0, d), d)
        m = _single_world(val)
        a, b = evaluate(m, "w", core1), evaluate(m, "w", core2)
        if a != b:
            return EquivalenceResult(False, witness=val, lhs=a, rhs=b)
    diff = p1 - p2
    mono, coeff = next(diff.items())
    return EquivalenceResult(False, monomial=str(Polynomial({mono: coeff})))


# ---------------------------------------------------------------------------
# Alignment and leaf swaps


def _max_counts(t: TreeForm) -> dict[str, int]:
    """Per variable, the most occurrences along any single root-to-leaf path."""
    memo: dict[int, dict] = {}

    def go(n):
        if isinstance(n, Leaf):
            return {}
        hit = memo.get(id(n))
        if hit is None:
            a, b = go(n.hi), go(n.lo)
            hit = {k: max(a.get(k, 0), b.get(k, 0)) for k in a.keys() | b.keys()}
            hit[n.var] = hit.get(n.var, 0) + 1
            memo[id(n)] = hit
        return hit

    return go(t)


def _pull(t: TreeForm, v: str) -> Node:
    # bring a v-test to the root: introduce it when absent, swap it up otherwise
    if isinstance(t, Node) and t.var == v:
        return t
    if v not in tree_variables(t):
        return Node(v, t, t)
    a, b = _pull(t.hi, v), _pull(t.lo, v)
    return Node(v, Node(t.var, a.hi, b.hi), Node(t.var, a.lo, b.lo))


def uniformize(t: TreeForm, seq) -> TreeForm:
    """Equivalent full tree testing ``seq[k]`` at every node of depth ``k``.

    ``seq`` must contain each variable at least as often as it occurs on any
    path of ``t``.
    """
    if not seq:
        if not isinstance(t, Leaf):
            raise ValueError("variable sequence too short for tree")
        return t
    r = _pull(t, seq[0])
    return Node(seq[0], uniformize(r.hi, seq[1:]), uniformize(r.lo, seq[1:]))


def _class(path: Path):
    counts: dict[str, int] = defaultdict(int)
    for tok in path:
        counts[tok.var] += tok.positive
    return tuple(sorted(counts.items()))


def align_and_swap(phi: TreeForm, psi: TreeForm):
    """Refine both trees to a common path set and list the leaf swaps between them.

    Returns ``(phi2, psi2, swaps)`` with ``paths`` of both trees covering the
    same sequences.  Each swap is a ``(top_path, bot_path)`` pair of
    multiset-equivalent paths; relabelling them in ``phi2`` moves it towards
    ``psi2`` and reaches it exactly when the inputs are equivalent.
    """
    c1, c2 = _max_counts(phi), _max_counts(psi)
    depth = {x: max(c1.get(x, 0), c2.get(x, 0)) for x in c1.keys() | c2.keys()}
    seq = [x for x in sorted(depth) for _ in range(depth[x])]
    u1, u2 = uniformize(phi, seq), uniformize(psi, seq)
    top1, _ = paths(u1)
    top2, _ = paths(u2)
    give, take = defaultdict(list), defaultdict(list)
    for p in top1 - top2:
        give[_class(p)].append(p)
    for p in top2 - top1:
        take[_class(p)].append(p)
    swaps = []
    for cls in sorted(give):
        swaps.extend(zip(sorted(give[cls], key=path_key), sorted(take.get(cls, []), key=path_key)))
    return u1, u2, swaps


def apply_swaps(t: TreeForm, swaps) -> TreeForm:
    """Exchange the leaf labels at each ``(top_path, bot_path)`` pair."""
    flips = {}
    for a, b in swaps:
        flips[tuple(a)] = LEAF_BOT
        flips[tuple(b)] = LEAF_TOP

    def go(n, pre):
        if isinstance(n, Leaf):
            return flips.get(pre, n)
        return Node(n.var, go(n.hi, pre + (Token(n.var, True),)),
                    go(n.lo, pre + (Token(n.var, False),)))

    return go(t, ())
