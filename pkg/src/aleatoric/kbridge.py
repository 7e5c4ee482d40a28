"""Multi-agent modal logic K and its translation into probability models.

A Kripke model becomes a probability model whose variables are 0/1 and whose
distributions are positive exactly on accessible worlds; a K formula becomes
a formula whose boxes are vacuous conditionals.  Truth then coincides with
expected value 1.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .model import KripkeModel, ProbModel, validate_kripke
from .semantics import evaluate
from .syntax import BOT, TOP, Cond, Formula, FormulaSyntaxError, Ite, Var

__all__ = [
    "KFormula", "Prop", "KAnd", "KNot", "KBox", "KripkeError",
    "parse_k", "k_to_text", "eval_k", "lambda_formula", "lambda_model",
    "variable_for", "GeneralisationVerdict", "generalisation_check",
]


class KripkeError(ValueError):
    pass


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class KAnd:
    left: "KFormula"
    right: "KFormula"


@dataclass(frozen=True)
class KNot:
    operand: "KFormula"


@dataclass(frozen=True)
class KBox:
    agent: str
    operand: "KFormula"


KFormula = Union[Prop, KAnd, KNot, KBox]


# ---------------------------------------------------------------------------
# Concrete syntax:  q   ~φ   box@i φ   φ & ψ   (φ)

_K_TOKEN = re.compile(r"(box@)([A-Za-z_][A-Za-z0-9_]*)|([A-Za-z_][A-Za-z0-9_]*)|(\S)")


def _k_tokens(text):
    out = []
    for m in _K_TOKEN.finditer(text):
        col = m.start()
        if m.group(1):
            out.append(("box", m.group(2), col))
        elif m.group(3):
            out.append(("ident", m.group(3), col))
        elif m.group(4) in ("~", "&", "(", ")"):
            out.append((m.group(4), m.group(4), col))
        else:
            raise FormulaSyntaxError(f"unexpected character {m.group(4)!r}", 1, col + 1)
    out.append(("eof", "", len(text)))
    return out


def parse_k(text: str) -> KFormula:
    toks = _k_tokens(text)
    k = 0

    def peek():
        return toks[k][0]

    def take(kind):
        nonlocal k
        tok = toks[k]
        if tok[0] != kind:
            raise FormulaSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}",
                                     1, tok[2] + 1)
        k += 1
        return tok

    def conj():
        node = unary()
        while peek() == "&":
            take("&")
            node = KAnd(node, unary())
        return node

    def unary():
        kind = peek()
        if kind == "~":
            take("~")
            return KNot(unary())
        if kind == "box":
            return KBox(take("box")[1], unary())
        if kind == "(":
            take("(")
            node = conj()
            take(")")
            return node
        return Prop(take("ident")[1])

    node = conj()
    take("eof")
    return node


def k_to_text(phi: KFormula) -> str:
    if isinstance(phi, Prop):
        return phi.name
    if isinstance(phi, KNot):
        return "~" + _k_unary(phi.operand)
    if isinstance(phi, KBox):
        return f"box@{phi.agent} " + _k_unary(phi.operand)
    return f"{k_to_text(phi.left)} & {_k_unary(phi.right)}"


def _k_unary(phi):
    return f"({k_to_text(phi)})" if isinstance(phi, KAnd) else k_to_text(phi)


# ---------------------------------------------------------------------------
# Semantics and translations


def eval_k(model: KripkeModel, phi: KFormula) -> frozenset[str]:
    """The set of worlds where ``phi`` holds."""
    worlds = frozenset(model.worlds)
    if isinstance(phi, Prop):
        try:
            return model.valuation[phi.name] & worlds
        except KeyError:
            raise KripkeError(f"unknown proposition {phi.name!r}") from None
    if isinstance(phi, KAnd):
        return eval_k(model, phi.left) & eval_k(model, phi.right)
    if isinstance(phi, KNot):
        return worlds - eval_k(model, phi.operand)
    if isinstance(phi, KBox):
        inner = eval_k(model, phi.operand)
        return frozenset(u for u in model.worlds if model.successors(phi.agent, u) <= inner)
    raise TypeError(f"not a K formula: {phi!r}")


def variable_for(prop: str) -> str:
    return "x_" + prop


def lambda_formula(phi: KFormula) -> Formula:
    if isinstance(phi, Prop):
        return Var(variable_for(phi.name))
    if isinstance(phi, KAnd):
        return Ite(lambda_formula(phi.left), lambda_formula(phi.right), BOT)
    if isinstance(phi, KNot):
        return Ite(lambda_formula(phi.operand), BOT, TOP)
    if isinstance(phi, KBox):
        return Cond(BOT, Ite(lambda_formula(phi.operand), BOT, TOP), phi.agent)
    raise TypeError(f"not a K formula: {phi!r}")


def lambda_model(model: KripkeModel, choice: str = "uniform", seed=0) -> ProbModel:
    """Probability model with ``pi_i(u, v) > 0`` exactly when ``v`` is accessible from ``u``.

    ``choice`` is ``"uniform"`` (equal weight on every successor) or
    ``"random"`` (seeded positive integer weights, normalized).
    """
    problems = [v for v in validate_kripke(model) if v.kind in ("seriality", "unknown-world")]
    if problems:
        p = problems[0]
        raise KripkeError(f"{p.kind} violation at {p.where}: {p.detail}")
    if choice not in ("uniform", "random"):
        raise ValueError(f"unknown distribution choice {choice!r}")
    rng = random.Random(seed)
    pi = {}
    for agent in model.agents:
        pi[agent] = {}
        for u in model.worlds:
            succ = [v for v in model.worlds if v in model.successors(agent, u)]
            weights = [1 if choice == "uniform" else rng.randint(1, 9) for _ in succ]
            total = sum(weights)
            pi[agent][u] = {v: Fraction(wt, total) for v, wt in zip(succ, weights)}
    props = sorted(model.valuation)
    f = {w: {variable_for(q): Fraction(int(w in model.valuation[q])) for q in props}
         for w in model.worlds}
    return ProbModel(model.worlds, model.agents, pi, f, tuple(variable_for(q) for q in props))


@dataclass(frozen=True)
class GeneralisationVerdict:
    world: str
    holds: bool
    value: Fraction

    @property
    def two_valued(self) -> bool:
        return self.value in (0, 1)

    @property
    def agree(self) -> bool:
        return self.holds == (self.value == 1)

    def __bool__(self):
        return self.agree and self.two_valued


def generalisation_check(model: KripkeModel, world: str, phi: KFormula,
                         choice: str = "uniform", seed=0) -> GeneralisationVerdict:
    """Compare K truth at ``world`` with the translated formula's value there."""
    if world not in model.worlds:
        raise KripkeError(f"unknown world {world!r}")
    holds = world in eval_k(model, phi)
    value = evaluate(lambda_model(model, choice, seed), world, lambda_formula(phi))
    return GeneralisationVerdict(world, holds, value)
