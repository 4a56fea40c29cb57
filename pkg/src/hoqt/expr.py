"""Projector expressions: AST, parser, minimal-parenthesis printer and desugaring.

Grammar, tightest binding first: ``~``, ``*``, ``<<``/``>>``, ``->``, ``&``, ``|``.
``*``, ``&`` and ``|`` chains flatten into n-ary nodes; ``<<`` and ``>>`` chains
are left-nested binary nodes and may not be mixed without parentheses;
``->`` never chains.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import ParseError, TheoryError, WellFormednessError
from .theory import Theory


class Expr:
    """Base class of all expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True)
class Atom(Expr):
    wire: str
    which: str = "P"  # one of "P", "I", "D"

    def __post_init__(self):
        if self.which not in ("P", "I", "D"):
            raise ValueError(f"atom kind must be P, I or D, not {self.which!r}")


@dataclass(frozen=True)
class Trivial(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True)
class Tensor(Expr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Arrow(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Prec(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Succ(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Cap(Expr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Cup(Expr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


TRIVIAL = Trivial()


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<bracket>[IDP]\[)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<one>1(?![0-9A-Za-z_]))
  | (?P<op><<|>>|->|[~*&|()\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "name", "bracket", "one", "op", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def advance(self):
        tok = self.tok
        self.i += 1
        return tok

    def fail(self, expected, message=None):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(message or f"unexpected {found}", tok.pos, expected)

    def parse(self):
        e = self.union()
        if self.tok.kind != "end":
            if self.at("->"):
                self.fail((), "'->' is not associative; parenthesize nested arrows")
            self.fail(("'|'", "'&'", "end of input"))
        return e

    def union(self):
        items = [self.inter()]
        while self.at("|"):
            self.advance()
            items.append(self.inter())
        return items[0] if len(items) == 1 else Cup(items)

    def inter(self):
        items = [self.arrow()]
        while self.at("&"):
            self.advance()
            items.append(self.arrow())
        return items[0] if len(items) == 1 else Cap(items)

    def arrow(self):
        lhs = self.prec()
        if self.at("->"):
            self.advance()
            rhs = self.prec()
            if self.at("->"):
                self.fail((), "'->' is not associative; parenthesize nested arrows")
            return Arrow(lhs, rhs)
        return lhs

    def prec(self):
        e = self.tens()
        if self.at("<<") or self.at(">>"):
            op = self.tok.text
            node = Prec if op == "<<" else Succ
            other = ">>" if op == "<<" else "<<"
            while self.at(op):
                self.advance()
                e = node(e, self.tens())
            if self.at(other):
                self.fail((), "cannot mix '<<' and '>>' without parentheses")
        return e

    def tens(self):
        items = [self.unary()]
        while self.at("*"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else Tensor(items)

    def unary(self):
        tok = self.tok
        if self.at("~"):
            self.advance()
            return Neg(self.unary())
        if self.at("("):
            self.advance()
            e = self.union()
            if not self.at(")"):
                self.fail(("')'",))
            self.advance()
            return e
        if tok.kind == "name":
            self.advance()
            return Atom(tok.text, "P")
        if tok.kind == "one":
            self.advance()
            return TRIVIAL
        if tok.kind == "bracket":
            self.advance()
            name = self.tok
            if name.kind != "name":
                self.fail(("wire name",))
            self.advance()
            if not self.at("]"):
                self.fail(("']'",))
            self.advance()
            return Atom(name.text, tok.text[0])
        self.fail(("'~'", "'('", "wire name", "'I['", "'D['", "'P['", "'1'"))


def parse(text: str, theory: Optional[Theory] = None) -> Expr:
    """Parse DSL text; with a theory, also enforce declaration and linearity."""
    e = _Parser(text).parse()
    check(e, theory)
    return e


# ---------------------------------------------------------------- well-formedness


def wire_set(e: Expr) -> frozenset:
    """Wires spanned by ``e``; raises on any linearity violation."""
    if isinstance(e, Atom):
        return frozenset((e.wire,))
    if isinstance(e, Trivial):
        return frozenset()
    if isinstance(e, Neg):
        return wire_set(e.child)
    if isinstance(e, (Tensor, Arrow, Prec, Succ)):
        parts = e.children if isinstance(e, Tensor) else (e.lhs, e.rhs)
        seen = frozenset()
        for p in parts:
            ws = wire_set(p)
            clash = seen & ws
            if clash:
                raise WellFormednessError(f"wire {sorted(clash)[0]} used twice")
            seen |= ws
        return seen
    if isinstance(e, (Cap, Cup)):
        sets = [wire_set(c) for c in e.children]
        for s in sets[1:]:
            if s != sets[0]:
                sym = "&" if isinstance(e, Cap) else "|"
                raise WellFormednessError(
                    f"operands of '{sym}' span different wires: "
                    f"{sorted(sets[0])} vs {sorted(s)}"
                )
        return sets[0]
    raise TypeError(f"not an expression: {e!r}")


def check(e: Expr, theory: Optional[Theory] = None) -> frozenset:
    ws = wire_set(e)
    if theory is not None:
        for w in sorted(ws):
            if w not in theory:
                raise WellFormednessError(f"undeclared wire {w!r}")
    return ws


def wires_of(e: Expr, theory: Optional[Theory] = None) -> tuple:
    """Wires of ``e`` in theory order (first-appearance order without a theory)."""
    if theory is not None:
        try:
            return theory.ordered(wire_set(e))
        except TheoryError as exc:
            raise WellFormednessError(str(exc)) from None
    seen = []
    for a in atoms(e):
        if a.wire not in seen:
            seen.append(a.wire)
    return tuple(seen)


def atoms(e: Expr):
    """Yield atom nodes left to right."""
    if isinstance(e, Atom):
        yield e
    elif isinstance(e, Neg):
        yield from atoms(e.child)
    elif isinstance(e, (Tensor, Cap, Cup)):
        for c in e.children:
            yield from atoms(c)
    elif isinstance(e, (Arrow, Prec, Succ)):
        yield from atoms(e.lhs)
        yield from atoms(e.rhs)


# ---------------------------------------------------------------- printer

_LEVEL = {Cup: 1, Cap: 2, Arrow: 3, Prec: 4, Succ: 4, Tensor: 5, Neg: 6, Atom: 7, Trivial: 7}


def _level(e):
    return _LEVEL[type(e)]


def format_expr(e: Expr) -> str:
    """Print with the fewest parentheses that still round-trip structurally."""
    if isinstance(e, Atom):
        return e.wire if e.which == "P" else f"{e.which}[{e.wire}]"
    if isinstance(e, Trivial):
        return "1"
    if isinstance(e, Neg):
        return "~" + _wrap(e.child, _level(e.child) < 6)
    if isinstance(e, (Cup, Cap, Tensor)):
        sym = {Cup: " | ", Cap: " & ", Tensor: " * "}[type(e)]
        mine = _level(e)
        return sym.join(_wrap(c, _level(c) <= mine) for c in e.children)
    if isinstance(e, Arrow):
        return f"{_wrap(e.lhs, _level(e.lhs) <= 3)} -> {_wrap(e.rhs, _level(e.rhs) <= 3)}"
    if isinstance(e, (Prec, Succ)):
        sym = " << " if isinstance(e, Prec) else " >> "
        lhs_bare = type(e.lhs) is type(e) or _level(e.lhs) > 4
        return f"{_wrap(e.lhs, not lhs_bare)}{sym}{_wrap(e.rhs, _level(e.rhs) <= 4)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e, paren):
    s = format_expr(e)
    return f"({s})" if paren else s


# ---------------------------------------------------------------- desugaring


def desugar(e: Expr) -> Expr:
    """Rewrite ``a -> b`` as ``~(a * ~b)`` and ``a >> b`` as ``b << a``."""
    if isinstance(e, (Atom, Trivial)):
        return e
    if isinstance(e, Neg):
        return Neg(desugar(e.child))
    if isinstance(e, Arrow):
        return Neg(Tensor((desugar(e.lhs), Neg(desugar(e.rhs)))))
    if isinstance(e, Succ):
        return Prec(desugar(e.rhs), desugar(e.lhs))
    if isinstance(e, Prec):
        return Prec(desugar(e.lhs), desugar(e.rhs))
    if isinstance(e, (Tensor, Cap, Cup)):
        return type(e)(tuple(desugar(c) for c in e.children))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- builders


def tensor(*parts: Expr) -> Expr:
    return parts[0] if len(parts) == 1 else Tensor(parts)


def prec_chain(parts) -> Expr:
    """Left-nested ``p0 << p1 << ... << pn``."""
    parts = list(parts)
    if not parts:
        return TRIVIAL
    out = parts[0]
    for p in parts[1:]:
        out = Prec(out, p)
    return out
