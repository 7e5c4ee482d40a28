"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Mapping

__all__ = ["Monomial", "Polynomial"]

# sorted tuple of (indeterminate, exponent) pairs, exponents > 0
Monomial = tuple


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for x, e in b:
        exps[x] = exps.get(x, 0) + e
    return tuple(sorted(exps.items()))


def _mono_key(m: Monomial):
    # graded, then lexicographic by indeterminate name
    return (-sum(e for _, e in m), m)


class Polynomial:
    """Polynomial in indeterminates ``p_x``; zero coefficients are never stored."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        for m, c in (terms or {}).items():
            if c:
                self.terms[tuple(m)] = Fraction(c)

    @classmethod
    def constant(cls, c) -> Polynomial:
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, name: str) -> Polynomial:
        return cls({((name, 1),): Fraction(1)})

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return _raw(out)

    __radd__ = __add__

    def __neg__(self):
        return _raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return _raw(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def indeterminates(self) -> frozenset[str]:
        return frozenset(x for m in self.terms for x, _ in m)

    def degree(self, name: str | None = None) -> int:
        if not self.terms:
            return 0
        if name is None:
            return max(sum(e for _, e in m) for m in self.terms)
        return max(dict(m).get(name, 0) for m in self.terms)

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        """Terms in canonical order."""
        for m in sorted(self.terms, key=_mono_key):
            yield m, self.terms[m]

    def __call__(self, valuation: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for x, e in m:
                term *= Fraction(valuation[x]) ** e
            total += term
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.items():
            mag = abs(c)
            factors = ["p_" + x + (f"^{e}" if e > 1 else "") for x, e in m]
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "·".join(factors)
            else:
                body = "·".join([str(mag)] + factors)
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def _raw(terms):
    p = Polynomial.__new__(Polynomial)
    p.terms = terms
    return p


def _lift(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return Polynomial.constant(x)
    raise TypeError(f"cannot combine polynomial with {type(x).__name__}")
