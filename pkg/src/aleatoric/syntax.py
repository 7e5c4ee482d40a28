"""Formula AST, concrete syntax, and structural helpers.

Core constructors are ``Top``, ``Bot``, ``Var``, ``Ite`` and ``Cond``.  The
abbreviations (``And``, ``Or``, ``Implies``, ``Not``, ``Expect``, ``Box`` and
``Repeat``) are real nodes too; they stay in the tree until :func:`desugar`
expands them.

Concrete syntax::

    formula := impl
    impl    := or ("->" impl)?
    or      := and ("v" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | "E@" ident unary | "B@" ident unary | postfix
    postfix := atom ("^" "{" nat "/" nat "}")*
    atom    := "T" | "F" | ident | "(" formula ")"
             | "(" formula "?" formula ":" formula ")"
             | "[" formula "|" formula "]" "@" ident
"""

from __future__ import annotations

import re
from typing import Iterator, Sequence

__all__ = [
    "Formula", "Top", "Bot", "Var", "Ite", "Cond",
    "And", "Or", "Implies", "Not", "Expect", "Box", "Repeat",
    "TOP", "BOT", "CORE_TYPES", "SUGAR_TYPES",
    "FormulaSyntaxError", "parse", "to_text", "desugar", "unfold_once",
    "substitute", "variables", "agents", "is_core", "is_pure_ac",
    "subterm", "replace_at", "positions", "size",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
RESERVED = frozenset({"T", "F"})


_set = object.__setattr__


class Formula:
    """Immutable formula node with structural equality and a cached hash."""

    __slots__ = ("_hash",)
    _fields: tuple[str, ...] = ()
    _kids: tuple[str, ...] = ()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _init(self, **values):
        for name, value in values.items():
            _set(self, name, value)

    def _key(self):
        return tuple(getattr(self, f) for f in self._fields)

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __reduce__(self):
        return type(self), self._key()

    def __repr__(self):
        args = ", ".join(repr(getattr(self, f)) for f in self._fields)
        return f"{type(self).__name__}({args})"

    def __str__(self):
        return to_text(self)

    def children(self) -> tuple[Formula, ...]:
        if not self._kids:
            return ()
        return tuple(getattr(self, k) for k in self._kids)

    def with_children(self, kids: Sequence[Formula]) -> Formula:
        if not self._kids:
            return self
        values = {f: getattr(self, f) for f in self._fields}
        values.update(zip(self._kids, kids))
        return type(self)(**values)


class Top(Formula):
    __slots__ = ()

    def __repr__(self):
        return "Top"

    def __reduce__(self):
        return "TOP"


class Bot(Formula):
    __slots__ = ()

    def __repr__(self):
        return "Bot"

    def __reduce__(self):
        return "BOT"


TOP = Top()
BOT = Bot()


def _check_ident(name, what):
    if not isinstance(name, str) or not _IDENT.match(name):
        raise ValueError(f"invalid {what} identifier {name!r}")


class Var(Formula):
    __slots__ = ("name",)
    _fields = ("name",)

    def __init__(self, name: str):
        _check_ident(name, "variable")
        if name in RESERVED:
            raise ValueError(f"{name!r} is reserved for a constant")
        self._init(name=name)


class Ite(Formula):
    """``(cond ? then : else_)``."""

    __slots__ = ("cond", "then", "else_")
    _fields = _kids = ("cond", "then", "else_")

    def __init__(self, cond: Formula, then: Formula, else_: Formula):
        _set(self, "cond", cond)
        _set(self, "then", then)
        _set(self, "else_", else_)

    def children(self):
        return (self.cond, self.then, self.else_)

    def with_children(self, kids):
        return Ite(*kids)


class Cond(Formula):
    """Conditional expectation ``[target | given]@agent``."""

    __slots__ = ("target", "given", "agent")
    _fields = ("target", "given", "agent")
    _kids = ("target", "given")

    def __init__(self, target: Formula, given: Formula, agent: str):
        _check_ident(agent, "agent")
        self._init(target=target, given=given, agent=agent)

    def children(self):
        return (self.target, self.given)

    def with_children(self, kids):
        return Cond(kids[0], kids[1], self.agent)


class And(Formula):
    __slots__ = ("left", "right")
    _fields = _kids = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        self._init(left=left, right=right)


class Or(And):
    __slots__ = ()


class Implies(And):
    __slots__ = ()


class Not(Formula):
    __slots__ = ("operand",)
    _fields = _kids = ("operand",)

    def __init__(self, operand: Formula):
        self._init(operand=operand)


class Expect(Formula):
    __slots__ = ("agent", "operand")
    _fields = ("agent", "operand")
    _kids = ("operand",)

    def __init__(self, agent: str, operand: Formula):
        _check_ident(agent, "agent")
        self._init(agent=agent, operand=operand)


class Box(Expect):
    __slots__ = ()


class Repeat(Formula):
    """``operand^{a/b}``: operand sampled true at least ``a`` times out of ``b``."""

    __slots__ = ("operand", "a", "b")
    _fields = ("operand", "a", "b")
    _kids = ("operand",)

    def __init__(self, operand: Formula, a: int, b: int):
        if isinstance(a, bool) or isinstance(b, bool) or not (
            isinstance(a, int) and isinstance(b, int)
        ) or a < 0 or b < 0:
            raise ValueError(f"repeat bounds must be natural numbers, got {a}/{b}")
        self._init(operand=operand, a=a, b=b)


CORE_TYPES = (Top, Bot, Var, Ite, Cond)
SUGAR_TYPES = (And, Or, Implies, Not, Expect, Box, Repeat)


# ---------------------------------------------------------------------------
# Lexer and parser


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+")
_PUNCT = ("->", "?", ":", "(", ")", "[", "]", "|", "@", "~", "&", "^", "{", "}", "/")


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        m = _WORD.match(text, i)
        if m:
            word = m.group()
            kind = "NAT" if word[0].isdigit() else "IDENT"
            tokens.append((kind, word, line, col))
        else:
            for p in _PUNCT:
                if text.startswith(p, i):
                    tokens.append((p, p, line, col))
                    word = p
                    break
            else:
                raise FormulaSyntaxError(f"unexpected character {ch!r}", line, col)
        i += len(word)
        col += len(word)
    tokens.append(("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind, value=None, k=0):
        tok = self.peek(k)
        return tok[0] == kind and (value is None or tok[1] == value)

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(message, tok[2], tok[3])

    def expect(self, kind, message=None):
        if not self.at(kind):
            tok = self.peek()
            shown = "end of input" if tok[0] == "EOF" else repr(tok[1])
            self.fail(message or f"expected {kind!r} but found {shown}")
        return self.take()

    def parse(self):
        phi = self.formula()
        if not self.at("EOF"):
            tok = self.peek()
            if tok[0] == ")":
                self.fail("unbalanced ')'")
            self.fail(f"unknown operator or trailing input {tok[1]!r}")
        return phi

    def formula(self):
        left = self.disj()
        if self.at("->"):
            self.take()
            return Implies(left, self.formula())
        return left

    def disj(self):
        left = self.conj()
        while self.at("IDENT", "v"):
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.at("&"):
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.at("~"):
            self.take()
            return Not(self.unary())
        if self.at("IDENT") and self.peek()[1] in ("E", "B") and self.at("@", k=1):
            op = self.take()[1]
            self.take()
            agent = self.expect("IDENT", "missing agent subscript")[1]
            body = self.unary()
            return Expect(agent, body) if op == "E" else Box(agent, body)
        return self.postfix()

    def postfix(self):
        phi = self.atom()
        while self.at("^"):
            self.take()
            self.expect("{")
            a = int(self.expect("NAT", "expected a natural number")[1])
            self.expect("/")
            b = int(self.expect("NAT", "expected a natural number")[1])
            self.expect("}")
            phi = Repeat(phi, a, b)
        return phi

    def atom(self):
        tok = self.peek()
        if tok[0] == "IDENT":
            self.take()
            if tok[1] == "T":
                return TOP
            if tok[1] == "F":
                return BOT
            return Var(tok[1])
        if tok[0] == "(":
            self.take()
            first = self.formula()
            if self.at("?"):
                self.take()
                then = self.formula()
                self.expect(":", "expected ':' in if-then-else")
                else_ = self.formula()
                self.expect(")", "unbalanced '(': expected ')'")
                return Ite(first, then, else_)
            self.expect(")", "unbalanced '(': expected ')' or '?'")
            return first
        if tok[0] == "[":
            self.take()
            target = self.formula()
            self.expect("|", "expected '|' in conditional")
            given = self.formula()
            self.expect("]", "unbalanced '[': expected ']'")
            if not self.at("@"):
                self.fail("missing agent subscript on conditional")
            self.take()
            agent = self.expect("IDENT", "missing agent subscript on conditional")[1]
            return Cond(target, given, agent)
        if tok[0] == "EOF":
            self.fail("unexpected end of input")
        self.fail(f"unknown operator {tok[1]!r}")


def parse(text: str) -> Formula:
    """Parse concrete syntax into a formula, keeping abbreviations as nodes."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer

_IMPL, _OR, _AND, _UNARY, _POSTFIX, _ATOM = range(6)


def _render(phi: Formula) -> tuple[str, int]:
    t = type(phi)
    if t is Top:
        return "T", _ATOM
    if t is Bot:
        return "F", _ATOM
    if t is Var:
        return phi.name, _ATOM
    if t is Ite:
        return f"({_fmt(phi.cond, _IMPL)} ? {_fmt(phi.then, _IMPL)} : {_fmt(phi.else_, _IMPL)})", _ATOM
    if t is Cond:
        return f"[{_fmt(phi.target, _IMPL)} | {_fmt(phi.given, _IMPL)}]@{phi.agent}", _ATOM
    if t is Implies:
        return f"{_fmt(phi.left, _OR)} -> {_fmt(phi.right, _IMPL)}", _IMPL
    if t is Or:
        return f"{_fmt(phi.left, _OR)} v {_fmt(phi.right, _AND)}", _OR
    if t is And:
        return f"{_fmt(phi.left, _AND)} & {_fmt(phi.right, _UNARY)}", _AND
    if t is Not:
        return "~" + _fmt(phi.operand, _UNARY), _UNARY
    if t is Expect:
        return f"E@{phi.agent} {_fmt(phi.operand, _UNARY)}", _UNARY
    if t is Box:
        return f"B@{phi.agent} {_fmt(phi.operand, _UNARY)}", _UNARY
    if t is Repeat:
        return f"{_fmt(phi.operand, _POSTFIX)}^{{{phi.a}/{phi.b}}}", _POSTFIX
    raise TypeError(f"not a formula: {phi!r}")


def _fmt(phi, need):
    text, level = _render(phi)
    return f"({text})" if level < need else text


def to_text(phi: Formula) -> str:
    """Print with minimal parentheses; ``parse(to_text(phi)) == phi``."""
    return _render(phi)[0]


# ---------------------------------------------------------------------------
# Desugaring


def _repeat_core(body: Formula, a: int, b: int) -> Formula:
    # shared subterms keep the result at O(a*(b-a)+b) distinct nodes
    table: dict[tuple[int, int], Formula] = {}

    def rep(a, b):
        if a == 0:
            return TOP
        if b < a:
            return BOT
        key = (a, b)
        if key not in table:
            table[key] = Ite(body, rep(a - 1, b - 1), rep(a, b - 1))
        return table[key]

    return rep(a, b)


def unfold_once(phi: Formula) -> Formula:
    """Expand the abbreviation at the root by one level (children untouched)."""
    t = type(phi)
    if t is And:
        return Ite(phi.left, phi.right, BOT)
    if t is Or:
        return Ite(phi.left, TOP, phi.right)
    if t is Implies:
        return Ite(phi.left, phi.right, TOP)
    if t is Not:
        return Ite(phi.operand, BOT, TOP)
    if t is Expect:
        return Cond(phi.operand, TOP, phi.agent)
    if t is Box:
        return Cond(BOT, Not(phi.operand), phi.agent)
    if t is Repeat:
        if phi.a == 0:
            return TOP
        if phi.b < phi.a:
            return BOT
        return Ite(phi.operand, Repeat(phi.operand, phi.a - 1, phi.b - 1),
                   Repeat(phi.operand, phi.a, phi.b - 1))
    raise ValueError(f"{t.__name__} is not an abbreviation")


def desugar(phi: Formula) -> Formula:
    """Expand every abbreviation; core subtrees are returned unchanged."""
    memo: dict[int, tuple[Formula, Formula]] = {}

    def go(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit[1]
        t = type(node)
        if t is Repeat:
            out = _repeat_core(go(node.operand), node.a, node.b)
        elif t in SUGAR_TYPES:
            out = go(unfold_once(node))
        else:
            kids = node.children()
            new = tuple(go(k) for k in kids)
            out = node if all(a is b for a, b in zip(kids, new)) else node.with_children(new)
        memo[id(node)] = (node, out)
        return out

    return go(phi)


# ---------------------------------------------------------------------------
# Structural helpers


def _fold(phi, leaf, combine):
    memo = {}

    def go(node):
        hit = memo.get(id(node))
        if hit is not None:
            return hit[1]
        kids = node.children()
        out = combine(node, [go(k) for k in kids]) if kids else leaf(node)
        memo[id(node)] = (node, out)
        return out

    return go(phi)


def substitute(phi: Formula, name: str, gamma: Formula) -> Formula:
    """Replace every ``Var(name)`` leaf by ``gamma``."""

    def leaf(node):
        return gamma if type(node) is Var and node.name == name else node

    def combine(node, new):
        if all(a is b for a, b in zip(node.children(), new)):
            return node
        return node.with_children(new)

    return _fold(phi, leaf, combine)


def variables(phi: Formula) -> frozenset[str]:
    return _fold(
        phi,
        lambda n: frozenset([n.name]) if type(n) is Var else frozenset(),
        lambda n, ks: frozenset().union(*ks),
    )


def agents(phi: Formula) -> frozenset[str]:
    def combine(node, ks):
        own = {node.agent} if isinstance(node, (Cond, Expect)) else set()
        return frozenset(own).union(*ks)

    return _fold(phi, lambda n: frozenset(), combine)


def is_core(phi: Formula) -> bool:
    return _fold(phi, lambda n: True,
                 lambda n, ks: type(n) in CORE_TYPES and all(ks))


def is_pure_ac(phi: Formula) -> bool:
    """True when no conditional expectation (or E/B abbreviation) occurs."""
    return _fold(phi, lambda n: True,
                 lambda n, ks: not isinstance(n, (Cond, Expect)) and all(ks))


def size(phi: Formula) -> int:
    """Number of nodes counted as a tree (shared subterms counted each time)."""
    return _fold(phi, lambda n: 1, lambda n, ks: 1 + sum(ks))


def subterm(phi: Formula, pos: Sequence[int]) -> Formula:
    node = phi
    for depth, k in enumerate(pos):
        kids = node.children()
        if not 0 <= k < len(kids):
            raise IndexError(f"position {list(pos)} out of range at depth {depth}")
        node = kids[k]
    return node


def replace_at(phi: Formula, pos: Sequence[int], new: Formula) -> Formula:
    if not pos:
        return new
    kids = list(phi.children())
    k = pos[0]
    if not 0 <= k < len(kids):
        raise IndexError(f"position {list(pos)} out of range")
    kids[k] = replace_at(kids[k], pos[1:], new)
    return phi.with_children(kids)


def positions(phi: Formula) -> Iterator[tuple[tuple[int, ...], Formula]]:
    """Pre-order walk yielding ``(position, subterm)`` pairs."""
    stack = [((), phi)]
    while stack:
        pos, node = stack.pop()
        yield pos, node
        kids = node.children()
        for k in range(len(kids) - 1, -1, -1):
            stack.append((pos + (k,), kids[k]))
