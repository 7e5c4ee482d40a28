"""Exact evaluation on pointed models and a Monte-Carlo sampler of the same semantics."""

from __future__ import annotations

import bisect
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

from .model import ProbModel
from .syntax import Bot, Cond, Formula, Ite, Top, Var, desugar

__all__ = [
    "EvaluationError", "RejectionBudgetExceeded", "SampleOutcome",
    "evaluate", "evaluate_all", "expectation", "sample", "estimate",
    "format_decimal", "DEFAULT_MAX_REJECTIONS",
]

DEFAULT_MAX_REJECTIONS = 10**6
_ONE = Fraction(1)
_ZERO = Fraction(0)


class EvaluationError(ValueError):
    pass


class RejectionBudgetExceeded(RuntimeError):
    """The conditional's given-formula kept sampling false; its probability is tiny but not 0."""


class _Evaluator:
    """Memoized ``P_w(node)`` over (subformula, world) pairs of a core formula."""

    def __init__(self, model: ProbModel):
        self.model = model
        self.memo: dict[tuple[int, str], Fraction] = {}
        self._keep: list[Formula] = []

    def value(self, node: Formula, w: str) -> Fraction:
        key = (id(node), w)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        t = type(node)
        if t is Top:
            out = _ONE
        elif t is Bot:
            out = _ZERO
        elif t is Var:
            try:
                out = self.model.f[w][node.name]
            except KeyError:
                raise EvaluationError(f"unknown variable {node.name!r} at world {w!r}") from None
        elif t is Ite:
            c = self.value(node.cond, w)
            out = c * self.value(node.then, w) + (1 - c) * self.value(node.else_, w)
        elif t is Cond:
            den = self.expect(node.agent, w, node.given)
            if den > 0:
                row = self._row(node.agent, w)
                num = sum((p * self.value(node.target, u) * self.value(node.given, u)
                           for u, p in row.items()), _ZERO)
                out = num / den
            else:
                out = _ONE
        else:
            raise EvaluationError(f"{t.__name__} must be desugared before evaluation")
        self._keep.append(node)
        self.memo[key] = out
        return out

    def _row(self, agent, w):
        try:
            return self.model.row(agent, w)
        except KeyError:
            raise EvaluationError(f"unknown agent {agent!r}") from None

    def expect(self, agent: str, w: str, node: Formula) -> Fraction:
        """``E^agent_w(node) = sum_u pi(w,u) * P_u(node)``."""
        return sum((p * self.value(node, u) for u, p in self._row(agent, w).items()), _ZERO)


def _check_world(model, w):
    if w not in model.f and w not in model.worlds:
        raise EvaluationError(f"unknown world {w!r}")


def evaluate(model: ProbModel, world: str, phi: Formula) -> Fraction:
    """The exact expectation ``P_world(phi)``."""
    _check_world(model, world)
    return _Evaluator(model).value(desugar(phi), world)


def evaluate_all(model: ProbModel, phi: Formula) -> dict[str, Fraction]:
    ev = _Evaluator(model)
    core = desugar(phi)
    return {w: ev.value(core, w) for w in model.worlds}


def expectation(model: ProbModel, agent: str, world: str, phi: Formula) -> Fraction:
    """``E^agent_world(phi)``; 0 when the agent's distribution at ``world`` is empty."""
    _check_world(model, world)
    if agent not in model.agents and agent not in model.pi:
        raise EvaluationError(f"unknown agent {agent!r}")
    return _Evaluator(model).expect(agent, world, desugar(phi))


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class SampleOutcome:
    truth: bool
    # one plus the number of rejected world draws made by conditionals
    trials_used: int


class _Sampler:
    def __init__(self, model, rng, max_rejections):
        self.model = model
        self.rng = rng
        self.max_rejections = max_rejections
        self.exact = _Evaluator(model)
        self.vacuous: dict[tuple[int, str], bool] = {}
        self.fcache: dict[tuple[str, str], float] = {}
        self.rejections = 0

    def draw(self, node, w) -> bool:
        t = type(node)
        if t is Top:
            return True
        if t is Bot:
            return False
        if t is Var:
            key = (w, node.name)
            p = self.fcache.get(key)
            if p is None:
                try:
                    p = float(self.model.f[w][node.name])
                except KeyError:
                    raise EvaluationError(f"unknown variable {node.name!r} at world {w!r}") from None
                self.fcache[key] = p
            return self.rng.random() < p
        if t is Ite:
            return self.draw(node.then if self.draw(node.cond, w) else node.else_, w)
        if t is Cond:
            key = (id(node), w)
            vac = self.vacuous.get(key)
            if vac is None:
                vac = self.exact.expect(node.agent, w, node.given) == 0
                self.vacuous[key] = vac
            if vac:
                return True
            succ, cum = self.model.float_row(node.agent, w)
            for _ in range(self.max_rejections + 1):
                k = bisect.bisect_right(cum, self.rng.random() * cum[-1])
                u = succ[min(k, len(succ) - 1)]
                if self.draw(node.given, u):
                    return self.draw(node.target, u)
                self.rejections += 1
            raise RejectionBudgetExceeded(
                f"given-formula of {node} sampled false {self.max_rejections + 1} times at {w!r}")
        raise EvaluationError(f"{t.__name__} must be desugared before sampling")


def _rng(rng):
    if rng is None:
        return random.Random()
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


def sample(model: ProbModel, world: str, phi: Formula, rng=None,
           max_rejections: int = DEFAULT_MAX_REJECTIONS) -> SampleOutcome:
    """One Bernoulli draw following the sampling protocol.

    Variables are resampled at every occurrence, an if-then-else samples its
    condition and then one branch, and a conditional redraws worlds until the
    given-formula samples true.  A conditional whose given-formula has exact
    expectation 0 is vacuously true.  ``rng`` is a ``random.Random`` or a seed.
    """
    _check_world(model, world)
    s = _Sampler(model, _rng(rng), max_rejections)
    truth = s.draw(desugar(phi), world)
    return SampleOutcome(truth, 1 + s.rejections)


def _count(model, world, core, n, seed, max_rejections):
    s = _Sampler(model, random.Random(seed), max_rejections)
    return sum(s.draw(core, world) for _ in range(n))


def estimate(model: ProbModel, world: str, phi: Formula, n: int, seed=0,
             workers: int = 1, max_rejections: int = DEFAULT_MAX_REJECTIONS) -> Fraction:
    """Frequency of true outcomes over ``n`` independent samples.

    Deterministic for a fixed ``(seed, workers)``.  With several workers the
    draws are split into contiguous chunks, chunk ``k`` seeded with
    ``"{seed}:{k}"``, and the counts are summed in chunk order.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_world(model, world)
    core = desugar(phi)
    if workers <= 1:
        hits = _count(model, world, core, n, seed, max_rejections)
    else:
        sizes = [n // workers + (k < n % workers) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_count, model, world, core, size, f"{seed}:{k}", max_rejections)
                       for k, size in enumerate(sizes) if size]
            hits = sum(fut.result() for fut in futures)
    return Fraction(hits, n)


def format_decimal(value: Fraction, digits: int = 6) -> str:
    """Render with ``digits`` significant digits, trailing zeros removed."""
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(value.numerator) / Decimal(value.denominator)
    text = format(d.normalize(), "f")
    return text if text != "-0" else "0"
