"""Exact semantics of projector expressions over minimal-idempotent cells.

Every wire splits the identity superoperator into three orthogonal idempotents:
``E0`` (depolarizing part), ``E1`` (base projector minus depolarizing) and
``E2`` (identity minus base projector).  All connectives act diagonally on
tensor products of these cells, so an expression is exactly a set of cell
tuples and equality/inclusion reduce to set comparison.

Cell sets are Python ints used as bitsets over the ``3**n`` tuple indices
(first wire most significant).  Sub-expressions are evaluated as cylinders
over the root's wires, which turns the tensor into a plain intersection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import (
    NotRepresentableError,
    UnsupportedExpressionError,
    WireLimitError,
    WireMismatchError,
)
from .expr import (
    Arrow,
    Atom,
    Cap,
    Cup,
    Expr,
    Neg,
    Prec,
    Succ,
    Tensor,
    Trivial,
    desugar,
    parse,
    prec_chain,
    tensor,
    wire_set,
    wires_of,
)
from .theory import E0, E1, E2, Theory

DEFAULT_MAX_WIRES = 8
CELL_NAMES = ("E0", "E1", "E2")


def _to_int(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


class _Space:
    """Bit masks for the cell-tuple universe of an ordered wire list."""

    def __init__(self, theory: Theory, wires: tuple):
        self.wires = wires
        self.n = n = len(wires)
        self.size = 3**n
        self.pos = {w: i for i, w in enumerate(wires)}
        idx = np.arange(self.size)
        self.digits = np.empty((n, self.size), dtype=np.int8)
        for i in range(n):
            self.digits[i] = (idx // 3 ** (n - 1 - i)) % 3
        valid = np.ones(self.size, dtype=bool)
        self.universes = tuple(theory[w].cells for w in wires)
        for i, cells in enumerate(self.universes):
            valid &= np.isin(self.digits[i], list(cells))
        self.valid = valid
        self.U = _to_int(valid)
        self.cell = [
            [_to_int(valid & (self.digits[i] == c)) for c in (E0, E1, E2)] for i in range(n)
        ]

    def zero(self, positions) -> int:
        out = self.U
        for i in positions:
            out &= self.cell[i][E0]
        return out

    def to_mask(self, bits: int) -> np.ndarray:
        nbytes = (self.size + 7) // 8
        raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.size].astype(bool)

    def index(self, tup) -> int:
        out = 0
        for c in tup:
            out = out * 3 + c
        return out


@lru_cache(maxsize=256)
def _space(theory: Theory, wires: tuple) -> _Space:
    return _Space(theory, wires)


@dataclass(frozen=True)
class CellSet:
    """A set of cell tuples, one cell per wire, over a fixed wire order."""

    wires: tuple
    bits: int
    theory: Theory

    @property
    def space(self) -> _Space:
        return _space(self.theory, self.wires)

    def __len__(self):
        return bin(self.bits).count("1")

    def __contains__(self, tup):
        return bool(self.bits >> self.space.index(tup) & 1)

    def __iter__(self):
        return iter(self.members())

    def members(self) -> list:
        sp = self.space
        hits = np.nonzero(sp.to_mask(self.bits))[0]
        return [tuple(int(d) for d in sp.digits[:, k]) for k in hits]

    def _check(self, other):
        if self.wires != other.wires or self.theory != other.theory:
            raise WireMismatchError(f"cell sets over {self.wires} and {other.wires}")

    def __eq__(self, other):
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.wires == other.wires and self.bits == other.bits

    def __hash__(self):
        return hash((self.wires, self.bits))

    def __le__(self, other):
        self._check(other)
        return self.bits & ~other.bits == 0

    def __lt__(self, other):
        return self <= other and self.bits != other.bits

    def __and__(self, other):
        self._check(other)
        return CellSet(self.wires, self.bits & other.bits, self.theory)

    def __or__(self, other):
        self._check(other)
        return CellSet(self.wires, self.bits | other.bits, self.theory)

    def issubset(self, other):
        return self <= other

    def negate(self) -> "CellSet":
        sp = self.space
        return CellSet(self.wires, (sp.U ^ self.bits) | sp.zero(range(sp.n)), self.theory)

    def pretty(self) -> str:
        body = ", ".join("(" + ",".join(CELL_NAMES[c] for c in t) + ")" for t in self.members())
        return "{" + body + "}"

    def __repr__(self):
        return f"CellSet({self.wires}, {self.pretty()})"


def _as_expr(e: Union[Expr, str], theory: Theory) -> Expr:
    return parse(e, theory) if isinstance(e, str) else e


def _atom_bits(sp: _Space, i: int, which: str) -> int:
    if which == "I":
        return sp.U
    if which == "D":
        return sp.cell[i][E0]
    return sp.cell[i][E0] | sp.cell[i][E1]


def _eval(e: Expr, sp: _Space) -> tuple:
    """Return (cylinder bits, wire positions) for ``e``."""
    if isinstance(e, Atom):
        i = sp.pos[e.wire]
        return _atom_bits(sp, i, e.which), (i,)
    if isinstance(e, Trivial):
        return sp.U, ()
    if isinstance(e, Neg):
        bits, ws = _eval(e.child, sp)
        return (sp.U ^ bits) | sp.zero(ws), ws
    if isinstance(e, Arrow):
        return _eval(Neg(Tensor((e.lhs, Neg(e.rhs)))), sp)
    if isinstance(e, (Prec, Succ)):
        first, second = (e.lhs, e.rhs) if isinstance(e, Prec) else (e.rhs, e.lhs)
        a, wa = _eval(first, sp)
        b, wb = _eval(second, sp)
        # b holds, and either b is non-depolarizing or a holds
        return b & ((sp.U ^ sp.zero(wb)) | a), wa + wb
    if isinstance(e, Tensor):
        bits, ws = sp.U, ()
        for c in e.children:
            cb, cw = _eval(c, sp)
            bits &= cb
            ws += cw
        return bits, ws
    if isinstance(e, (Cap, Cup)):
        parts = [_eval(c, sp) for c in e.children]
        bits = parts[0][0]
        for cb, _ in parts[1:]:
            bits = bits & cb if isinstance(e, Cap) else bits | cb
        return bits, parts[0][1]
    raise TypeError(f"not an expression: {e!r}")


def semantics(e: Union[Expr, str], theory: Theory, wires: Optional[tuple] = None) -> CellSet:
    """Exact cell set of ``e`` over its wires in theory order."""
    e = _as_expr(e, theory)
    own = wires_of(e, theory)
    if wires is None:
        wires = own
    elif set(wires) != set(own):
        raise WireMismatchError(f"expression spans {own}, requested {tuple(wires)}")
    sp = _space(theory, tuple(wires))
    bits, _ = _eval(e, sp)
    return CellSet(sp.wires, bits, theory)


def _pair(e1, e2, theory):
    e1, e2 = _as_expr(e1, theory), _as_expr(e2, theory)
    w1, w2 = wire_set(e1), wire_set(e2)
    if w1 != w2:
        raise WireMismatchError(f"expressions span {sorted(w1)} and {sorted(w2)}")
    return semantics(e1, theory), semantics(e2, theory)


def eq(e1, e2, theory: Theory) -> bool:
    s1, s2 = _pair(e1, e2, theory)
    return s1 == s2


def subset(e1, e2, theory: Theory) -> bool:
    s1, s2 = _pair(e1, e2, theory)
    return s1 <= s2


# ---------------------------------------------------------------- no-signaling atoms


@dataclass(frozen=True)
class NoSigAtoms:
    """Per-wire atom of the no-signaling subset: base atom and negation flag."""

    entries: tuple  # ((wire, which, negated), ...) in appearance order

    def negated(self, wire) -> bool:
        return self._entry(wire)[2]

    def _entry(self, wire):
        for entry in self.entries:
            if entry[0] == wire:
                return entry
        raise KeyError(wire)

    def atom(self, wire) -> Expr:
        _, which, neg = self._entry(wire)
        a = Atom(wire, which)
        return Neg(a) if neg else a

    @property
    def wires(self):
        return tuple(e[0] for e in self.entries)


def _bar_count(e: Expr, bars: int, out: dict, extended: bool):
    if isinstance(e, Atom):
        out[e.wire] = (e.which, bars % 2 == 1)
    elif isinstance(e, Trivial):
        pass
    elif isinstance(e, Neg):
        _bar_count(e.child, bars + 1, out, extended)
    elif isinstance(e, Tensor):
        for c in e.children:
            _bar_count(c, bars, out, extended)
    elif isinstance(e, Arrow):
        _bar_count(e.lhs, bars + 1, out, extended)
        _bar_count(e.rhs, bars + 2, out, extended)
    elif extended and isinstance(e, (Prec, Succ)):
        # negation commutes with the prec, so bars pass straight through
        _bar_count(e.lhs, bars, out, extended)
        _bar_count(e.rhs, bars, out, extended)
    elif extended and isinstance(e, (Cap, Cup)):
        first = {}
        _bar_count(e.children[0], bars, first, extended)
        for c in e.children[1:]:
            other = {}
            _bar_count(c, bars, other, extended)
            if other != first:
                raise UnsupportedExpressionError(
                    "operands of a cap/cup disagree on their no-signaling atoms"
                )
        out.update(first)
    else:
        kind = type(e).__name__.lower()
        raise UnsupportedExpressionError(
            f"no-signaling subset is defined for ~, * and -> expressions only (found {kind})"
        )


def _atoms_of(e: Expr, extended: bool) -> NoSigAtoms:
    found = {}
    _bar_count(e, 0, found, extended)
    order = []
    for w in _appearance(e):
        if w not in order:
            order.append(w)
    return NoSigAtoms(tuple((w, *found[w]) for w in order))


def _appearance(e):
    from .expr import atoms

    return [a.wire for a in atoms(e)]


def nosig_subset(e: Expr) -> tuple:
    """Tensor of the bar-counted atoms, and the atoms themselves.

    A wire's atom is negated iff the number of negations above it is odd once
    every arrow ``a -> b`` is read as ``~(a * ~b)``.
    """
    if isinstance(e, str):
        e = parse(e)
    atoms = _atoms_of(e, extended=False)
    if not atoms.entries:
        return Trivial(), atoms
    return tensor(*(atoms.atom(w) for w in atoms.wires)), atoms


# ---------------------------------------------------------------- prec chains


class _ChainSpace:
    """Chain membership over the atoms of one expression.

    A tuple belongs to the chain ``X_s(1) << ... << X_s(n)`` iff it is all-E0
    or its nonzero wire ranked last by ``s`` carries a cell of that wire's atom.
    """

    def __init__(self, theory: Theory, wires: tuple, atoms: NoSigAtoms):
        self.sp = sp = _space(theory, wires)
        self.atoms = atoms
        self.wires = wires
        n = sp.n
        good_cells = []
        for i, w in enumerate(wires):
            a = atoms.atom(w)
            cells = sp.universes[i]
            base = {"I": set(cells), "D": {E0}, "P": {E0, E1} & set(cells)}[
                a.child.which if isinstance(a, Neg) else a.which
            ]
            if isinstance(a, Neg):
                base = (set(cells) - base) | {E0}
            good_cells.append(frozenset(base - {E0}))
        self.good_cells = good_cells
        self.good_bits = [
            sum((sp.cell[i][c] for c in good_cells[i]), 0) for i in range(n)
        ]
        self.zero_all = sp.zero(range(n))
        # per-tuple support and good masks, as wire bitmasks
        support = np.zeros(sp.size, dtype=np.int64)
        good = np.zeros(sp.size, dtype=np.int64)
        for i in range(n):
            d = sp.digits[i]
            support |= (d != E0).astype(np.int64) << i
            is_good = np.isin(d, list(good_cells[i])) if good_cells[i] else np.zeros_like(d, bool)
            good |= is_good.astype(np.int64) << i
        self.support = support
        self.good = good
        self._cache = {}

    def chain(self, perm) -> int:
        """Bitset of the chain over wire positions ``perm`` (first = earliest)."""
        hit = self._cache.get(perm)
        if hit is not None:
            return hit
        sp = self.sp
        out = self.zero_all
        later_zero = sp.U
        for i in reversed(perm):
            out |= self.good_bits[i] & later_zero
            later_zero &= sp.cell[i][E0]
        if len(self._cache) < 50000:
            self._cache[perm] = out
        return out

    def closure(self, support: int, good: int) -> np.ndarray:
        """Intersection of all chains containing a tuple with this support/good pattern."""
        s2, g2 = self.support, self.good
        bad2 = s2 & ~g2
        ok = (
            (bad2 == 0)
            | (((good & ~s2) == 0) & ((bad2 & ~support) == 0) & ((good & bad2) == 0))
        )
        return ok & self.sp.valid

    def containing(self, support: int, good: int):
        """Permutations (lexicographic) whose chain contains the pattern."""
        for perm in itertools.permutations(range(self.sp.n)):
            if support == 0:
                yield perm
                continue
            last = next(i for i in reversed(perm) if support >> i & 1)
            if good >> last & 1:
                yield perm

    def expr(self, perm) -> Expr:
        return prec_chain(self.atoms.atom(self.wires[i]) for i in perm)


@dataclass(frozen=True)
class ChainForm:
    """Union over terms of intersections of permuted prec chains."""

    atoms: NoSigAtoms
    wires: tuple  # theory order
    terms: tuple  # tuple of tuples of permutations (each a tuple of labels)

    def chain_expr(self, perm) -> Expr:
        return prec_chain(self.atoms.atom(w) for w in perm)

    def to_expr(self) -> Expr:
        inters = []
        for term in self.terms:
            chains = [self.chain_expr(p) for p in term]
            inters.append(chains[0] if len(chains) == 1 else Cap(tuple(chains)))
        return inters[0] if len(inters) == 1 else Cup(tuple(inters))

    def __str__(self):
        from .expr import format_expr

        return format_expr(self.to_expr())


def _check_limit(n, max_wires):
    if n > max_wires:
        raise WireLimitError(f"{n} wires exceed the permutation limit of {max_wires}")


def _prepare(e, theory, max_wires):
    e = _as_expr(e, theory)
    wires = wires_of(e, theory)
    _check_limit(len(wires), max_wires)
    atoms = _atoms_of(desugar(e), extended=True)
    target = semantics(e, theory)
    return e, wires, atoms, target


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _intersection_term(cs: _ChainSpace, support: int, good: int, target: int) -> tuple:
    """Greedy admissible intersection of chains containing one tuple.

    Chains are added by how many outside tuples they cut (ties: lexicographic)
    until the intersection fits inside ``target``, then pruned in
    lexicographic order while it still fits.
    """
    candidates = [(perm, cs.chain(perm)) for perm in cs.containing(support, good)]
    chosen = []
    acc = cs.sp.U
    while acc & ~target:
        best = max(candidates, key=lambda pc: _popcount(acc & ~pc[1] & ~target))
        if acc & ~best[1] & ~target == 0:  # pragma: no cover - closure check rules this out
            raise NotRepresentableError("no admissible chain intersection")
        chosen.append(best)
        acc &= best[1]
    chosen.sort(key=lambda pc: pc[0])
    for pc in list(chosen):
        rest = [x for x in chosen if x is not pc]
        inter = cs.sp.U
        for _, c in rest:
            inter &= c
        if rest and inter & ~target == 0:
            chosen = rest
    acc = cs.sp.U
    for _, c in chosen:
        acc &= c
    return tuple(p for p, _ in chosen), acc


def canonical_form(
    e: Union[Expr, str], theory: Theory, max_wires: int = DEFAULT_MAX_WIRES
) -> ChainForm:
    """Irredundant union of intersections of prec chains equal to ``e``.

    Each member tuple determines its closure, the intersection of every chain
    containing it; the expression is representable iff no closure leaves it.
    Terms are the maximal chains lying inside the expression, completed by
    greedy chain intersections for any member they leave uncovered.  Chain
    terms are never dropped, even when other chains happen to cover them.
    """
    e, wires, atoms, target = _prepare(e, theory, max_wires)
    cs = _ChainSpace(theory, wires, atoms)
    sp = cs.sp
    target_mask = sp.to_mask(target.bits)
    members = np.nonzero(target_mask)[0]

    seen = set()
    for k in members:
        key = (int(cs.support[k]), int(cs.good[k]))
        if key in seen:
            continue
        seen.add(key)
        support, good = key
        if support and not good:
            raise NotRepresentableError(
                f"tuple {_fmt_tuple(sp, k)} lies in no prec chain", witness=_tuple(sp, k)
            )
        escaped = np.nonzero(cs.closure(support, good) & ~target_mask)[0]
        if escaped.size:
            raise NotRepresentableError(
                f"closure of tuple {_fmt_tuple(sp, k)} escapes the expression "
                f"at {_fmt_tuple(sp, escaped[0])}",
                witness=_tuple(sp, k),
            )

    goal = target.bits
    admissible = {}
    for perm in itertools.permutations(range(sp.n)):
        c = cs.chain(perm)
        if c & ~goal == 0:
            admissible.setdefault(c, perm)
    terms = [
        ((perm,), c)
        for c, perm in admissible.items()
        if not any(c != o and c & ~o == 0 for o in admissible)
    ]
    covered = 0
    for _, c in terms:
        covered |= c
    for k in members:
        if covered >> int(k) & 1:
            continue
        perms, bits = _intersection_term(cs, int(cs.support[k]), int(cs.good[k]), goal)
        terms.append((perms, bits))
        covered |= bits

    distinct = {}
    for perms, bits in terms:
        if bits not in distinct or perms < distinct[bits]:
            distinct[bits] = perms
    terms = [
        (perms, bits)
        for bits, perms in distinct.items()
        if not any(bits != o and bits & ~o == 0 for o in distinct)
    ]
    # only intersections may be dropped as covered by the rest: every maximal
    # chain inside the expression is a causal order it admits, so it stays
    terms.sort(key=lambda t: (-len(t[0]), t[0]))
    kept = list(terms)
    for term in terms:
        if len(term[0]) == 1:
            continue
        others = 0
        for other in kept:
            if other is not term:
                others |= other[1]
        if len(kept) > 1 and term[1] & ~others == 0:
            kept.remove(term)
    kept.sort(key=lambda t: (len(t[0]), t[0]))

    union = 0
    for _, bits in kept:
        union |= bits
    if union != goal:  # pragma: no cover - guarded by the closure argument
        raise NotRepresentableError("chain cover does not reproduce the expression")

    named = tuple(tuple(tuple(wires[i] for i in perm) for perm in perms) for perms, _ in kept)
    return ChainForm(atoms, wires, named)


def _tuple(sp, k):
    return tuple(int(d) for d in sp.digits[:, k])


def _fmt_tuple(sp, k):
    return "(" + ",".join(CELL_NAMES[c] for c in _tuple(sp, k)) + ")"


def chain_semantics(form: ChainForm, theory: Theory) -> CellSet:
    """Cell set of a chain form, evaluated through the generic expression semantics."""
    return semantics(form.to_expr(), theory, wires=form.wires)


# ---------------------------------------------------------------- signaling structure


@dataclass(frozen=True)
class OrderReport:
    wires: tuple
    atoms: NoSigAtoms
    forced: tuple  # permutations whose chain contains the whole expression
    admissible: tuple  # permutations whose chain lies inside the expression
    realizable: tuple  # admissible chains not strictly inside another admissible one

    def chain_text(self, perm) -> str:
        from .expr import format_expr

        return format_expr(prec_chain(self.atoms.atom(w) for w in perm))


def order_report(
    e: Union[Expr, str], theory: Theory, max_wires: int = DEFAULT_MAX_WIRES
) -> OrderReport:
    e, wires, atoms, target = _prepare(e, theory, max_wires)
    cs = _ChainSpace(theory, wires, atoms)
    forced, admissible = [], []
    for perm in itertools.permutations(range(len(wires))):
        c = cs.chain(perm)
        if target.bits & ~c == 0:
            forced.append(perm)
        if c & ~target.bits == 0:
            admissible.append((perm, c))
    realizable = [
        perm
        for perm, c in admissible
        if not any(c != o and c & ~o == 0 for _, o in admissible)
    ]

    def names(perms):
        return tuple(tuple(wires[i] for i in p) for p in perms)

    return OrderReport(
        wires,
        atoms,
        names(forced),
        names(p for p, _ in admissible),
        names(realizable),
    )


def independent_of(e: Union[Expr, str], wire: str, theory: Theory) -> bool:
    """Whether no choice plugged in at ``wire`` can signal to the other wires.

    Holds iff the structure lies inside ``atom(wire) (x) I(rest)``, where the
    atom is the wire's no-signaling atom; the operators plugged in at that
    wire are members of the atom's negation.
    """
    e = _as_expr(e, theory)
    wires = wires_of(e, theory)
    if wire not in wires:
        raise WireMismatchError(f"wire {wire!r} does not occur in the expression")
    atoms = _atoms_of(desugar(e), extended=True)
    target = semantics(e, theory)
    sp = target.space
    local, _ = _eval(atoms.atom(wire), sp)
    return target.bits & ~local == 0
