"""Random formulas and models for property tests."""

import itertools
from fractions import Fraction

from hypothesis import strategies as st

from aleatoric.model import KripkeModel, ProbModel
from aleatoric.syntax import (
    BOT, TOP, And, Bot, Box, Cond, Expect, Implies, Ite, Not, Or, Repeat, Top, Var,
)
from aleatoric import kbridge

VARS = ("x", "y", "z")
AGENTS = ("a", "b")


def random_prob(rng, zero_one=0.15):
    r = rng.random()
    if r < zero_one / 2:
        return Fraction(0)
    if r < zero_one:
        return Fraction(1)
    d = rng.randint(2, 12)
    return Fraction(rng.randint(1, d - 1), d)


def random_model(rng, names=VARS, agents=AGENTS, n_worlds=None, empty=0.1):
    """Finite model with exact rationals; some rows may be empty."""
    n = n_worlds or rng.randint(1, 4)
    worlds = [f"w{k}" for k in range(n)]
    pi = {}
    for i in agents:
        pi[i] = {}
        for w in worlds:
            if rng.random() < empty:
                pi[i][w] = {}
                continue
            weights = [rng.choice((0, 0, 1, 2, 3, 5)) for _ in worlds]
            if not any(weights):
                weights[rng.randrange(n)] = 1
            total = sum(weights)
            pi[i][w] = {v: Fraction(wt, total) for v, wt in zip(worlds, weights) if wt}
    f = {w: {x: random_prob(rng) for x in names} for w in worlds}
    return ProbModel(worlds, agents, pi, f, tuple(names))


def brute(m, w, phi):
    """Direct unmemoized recursion over the core grammar."""
    t = type(phi)
    if t is Top:
        return Fraction(1)
    if t is Bot:
        return Fraction(0)
    if t is Var:
        return m.f[w][phi.name]
    if t is Ite:
        c = brute(m, w, phi.cond)
        return c * brute(m, w, phi.then) + (1 - c) * brute(m, w, phi.else_)
    row = m.row(phi.agent, w)
    den = sum((p * brute(m, u, phi.given) for u, p in row.items()), Fraction(0))
    if den == 0:
        return Fraction(1)
    num = sum((p * brute(m, u, phi.target) * brute(m, u, phi.given) for u, p in row.items()),
              Fraction(0))
    return num / den


def valuation_model(valuation):
    """Single world, no agents, ``f`` given by ``valuation``."""
    names = tuple(sorted(valuation))
    return ProbModel(["w"], (), {}, {"w": dict(valuation)}, names)


def random_formula(rng, depth, names=VARS, agents=AGENTS, modal=True, sugar=False):
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.15:
            return TOP
        if r < 0.3:
            return BOT
        return Var(rng.choice(names))
    kinds = ["ite"] + (["cond"] if modal else [])
    if sugar:
        kinds += ["and", "or", "imp", "not", "rep"] + (["exp", "box"] if modal else [])
    kind = rng.choice(kinds)
    sub = lambda: random_formula(rng, depth - 1, names, agents, modal, sugar)  # noqa: E731
    if kind == "ite":
        return Ite(sub(), sub(), sub())
    if kind == "cond":
        return Cond(sub(), sub(), rng.choice(agents))
    if kind == "and":
        return And(sub(), sub())
    if kind == "or":
        return Or(sub(), sub())
    if kind == "imp":
        return Implies(sub(), sub())
    if kind == "not":
        return Not(sub())
    if kind == "exp":
        return Expect(rng.choice(agents), sub())
    if kind == "box":
        return Box(rng.choice(agents), sub())
    b = rng.randint(0, 3)
    return Repeat(sub(), rng.randint(0, b + 1), b)


def random_kripke(rng, props=("q", "r"), agents=AGENTS, max_worlds=5, closed=False):
    """Serial Kripke model; ``closed`` makes every relation euclidean and transitive."""
    n = rng.randint(1, max_worlds)
    worlds = [f"w{k}" for k in range(n)]
    relation = {}
    for i in agents:
        if closed:
            # clusters see themselves; every other world sees one cluster
            members = rng.sample(worlds, rng.randint(1, n))
            cut = sorted(rng.sample(range(1, len(members)), rng.randint(0, len(members) - 1)))
            clusters = [members[s:e] for s, e in zip([0] + cut, cut + [len(members)])]
            home = {m: c for c in clusters for m in c}
            pairs = set()
            for w in worlds:
                for v in home.get(w) or rng.choice(clusters):
                    pairs.add((w, v))
            relation[i] = pairs
        else:
            pairs = set()
            for w in worlds:
                succ = rng.sample(worlds, rng.randint(1, n))
                pairs.update((w, v) for v in succ)
            relation[i] = pairs
    valuation = {q: frozenset(w for w in worlds if rng.random() < 0.5) for q in props}
    return KripkeModel(worlds, relation, valuation, tuple(agents))


def random_k_formula(rng, depth, props=("q", "r"), agents=AGENTS):
    if depth <= 0 or rng.random() < 0.25:
        return kbridge.Prop(rng.choice(props))
    kind = rng.choice(("and", "not", "box"))
    if kind == "and":
        return kbridge.KAnd(random_k_formula(rng, depth - 1, props, agents),
                            random_k_formula(rng, depth - 1, props, agents))
    if kind == "not":
        return kbridge.KNot(random_k_formula(rng, depth - 1, props, agents))
    return kbridge.KBox(rng.choice(agents), random_k_formula(rng, depth - 1, props, agents))


# ---------------------------------------------------------------------------
# hypothesis strategies

seeds = st.integers(min_value=0, max_value=2**32 - 1)

_leaves = st.one_of(st.sampled_from([TOP, BOT]), st.sampled_from(VARS).map(Var))


def _compound(kids):
    agent = st.sampled_from(AGENTS)
    return st.one_of(
        st.builds(Ite, kids, kids, kids),
        st.builds(Cond, kids, kids, agent),
        st.builds(And, kids, kids),
        st.builds(Or, kids, kids),
        st.builds(Implies, kids, kids),
        st.builds(Not, kids),
        st.builds(Expect, agent, kids),
        st.builds(Box, agent, kids),
        st.integers(0, 3).flatmap(
            lambda b: st.builds(Repeat, kids, st.integers(0, b + 1), st.just(b))),
    )


def formulas(depth=8):
    s = _leaves
    for _ in range(depth):
        s = st.one_of(_leaves, _compound(s))
    return s


def ac_formulas(depth=4):
    s = _leaves
    for _ in range(depth):
        s = st.one_of(_leaves, st.builds(Ite, s, s, s))
    return s


rationals = st.builds(lambda d, k: Fraction(k % (d + 1), d),
                      st.integers(1, 97), st.integers(0, 97))
valuations = st.fixed_dictionaries({x: rationals for x in VARS})


def random_instance(rng, axiom, depth=2):
    """Both sides of ``axiom`` under a random substitution of its metavariables."""
    from aleatoric.proof import AGENT_META, instantiate

    bind = {}
    for name in sorted(axiom.metavariables):
        if name == AGENT_META:
            bind[name] = rng.choice(AGENTS)
        else:
            bind[name] = random_formula(rng, depth)
    return instantiate(axiom.lhs, bind), instantiate(axiom.rhs, bind)


def ite_formulas(max_ite, leaves=(TOP, BOT, Var("x"), Var("y"))):
    """Every formula with at most ``max_ite`` if-then-else nodes over ``leaves``.

    Subformulas are shared objects, so the list stays small in memory.
    """
    by = [list(leaves)]
    for n in range(1, max_ite + 1):
        level = []
        for a in range(n):
            for b in range(n - a):
                for parts in itertools.product(by[a], by[b], by[n - 1 - a - b]):
                    level.append(Ite(*parts))
        by.append(level)
    return [f for level in by for f in level]
