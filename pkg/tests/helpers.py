"""Random theories and expressions shared by the test modules."""

import random

from hoqt.expr import Arrow, Atom, Cap, Cup, Neg, Prec, Succ, Tensor
from hoqt.theory import BaseKind, NumericSpan, Theory, WireDecl

KINDS = list(BaseKind)

# acceptance lines, printed again in the terminal summary by conftest
ACCEPTANCE = {}


def report(number, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE[number] = line
    print(line)
    return ok


def random_theory(rng, n, kinds=KINDS, dim=2, prefix="A"):
    return Theory([WireDecl(f"{prefix}{i}", dim, 1, rng.choice(kinds)) for i in range(n)])


def qubit_theory(rng, n):
    """Instantiable qubit wires: identity, depolarizing or a random span."""
    wires = []
    for i in range(n):
        r = rng.random()
        if r < 0.35:
            base = BaseKind.IDENTITY
        elif r < 0.55:
            base = BaseKind.DEPOLARIZING
        else:
            base = NumericSpan((0,) + tuple(sorted(rng.sample(range(1, 4), rng.randint(1, 2)))))
        wires.append(WireDecl(f"A{i}", 2, 1, base))
    return Theory(wires)


def random_atom(rng, w, kinds="PPPPID"):
    a = Atom(w, rng.choice(kinds))
    return Neg(a) if rng.random() < 0.3 else a


def random_expr(rng, wires, depth=0, additive=True):
    """Any connective; cap/cup operands share their wire set."""
    wires = list(wires)
    if additive and depth < 2 and rng.random() < 0.15:
        node = rng.choice((Cap, Cup))
        return node((random_expr(rng, wires, depth + 1, additive), random_expr(rng, wires, depth + 1, additive)))
    if len(wires) == 1:
        return random_atom(rng, wires[0])
    rng.shuffle(wires)
    k = rng.randint(1, len(wires) - 1)
    lhs = random_expr(rng, wires[:k], depth + 1, additive)
    rhs = random_expr(rng, wires[k:], depth + 1, additive)
    node = rng.choice((Tensor, Arrow, Prec, Succ))
    e = Tensor((lhs, rhs)) if node is Tensor else node(lhs, rhs)
    return Neg(e) if rng.random() < 0.25 else e


def random_multiplicative(rng, wires):
    """Only atoms, negation, tensor and arrow."""
    wires = list(wires)
    if len(wires) == 1:
        return random_atom(rng, wires[0])
    k = rng.randint(1, len(wires) - 1)
    lhs = random_multiplicative(rng, wires[:k])
    rhs = random_multiplicative(rng, wires[k:])
    e = Tensor((lhs, rhs)) if rng.random() < 0.4 else Arrow(lhs, rhs)
    return Neg(e) if rng.random() < 0.3 else e


def split(rng, labels, parts):
    labels = list(labels)
    rng.shuffle(labels)
    cuts = sorted(rng.sample(range(1, len(labels)), parts - 1))
    return [labels[i:j] for i, j in zip([0] + cuts, cuts + [len(labels)])]


def rng_for(seed):
    return random.Random(seed)
