"""Concrete superoperator projectors and Choi-operator checks.

Conventions
-----------
* ``vec`` is column stacking, ``vec(X) = X.reshape(-1, order="F")``, so
  ``<vec X, vec Y> = Tr(X^dagger Y)``.  For an operator on wires with dims
  ``d1..dn`` the vec index runs over (column multi-index, row multi-index),
  i.e. over the tensor order ``d1..dn d1..dn``.
* Every wire uses the normalized generalized Gell-Mann basis with
  ``G0 = 1/sqrt(d)``.  A projector is diagonal in the product basis: it keeps
  the product elements whose per-wire cells form a tuple of ``semantics(e)``.
* Choi operators are ``M = [(id (x) Map)(phi+)]^T`` with unnormalized ``phi+``
  and a full transpose; the map is recovered as ``(Tr_in[M (A (x) 1)])^T``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .cells import semantics
from .errors import DimensionError, InstantiationError
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
    parse,
    wires_of,
)
from .theory import E0, E1, E2, Theory

DEFAULT_TOL = 1e-9


# ---------------------------------------------------------------- bases


@dataclass(frozen=True)
class OperatorBasis:
    dim: int
    elements: np.ndarray = field(repr=False)  # shape (d*d, d, d)

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


@lru_cache(maxsize=None)
def _ggm(d: int) -> np.ndarray:
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            out += [sym / np.sqrt(2), anti / np.sqrt(2)]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag).astype(complex) / np.sqrt(l * (l + 1)))
    arr = np.array(out)
    arr.setflags(write=False)
    return arr


def default_basis(d: int) -> OperatorBasis:
    """Normalized generalized Gell-Mann basis; d=2 gives 1, sx, sy, sz over sqrt(2)."""
    if d < 1:
        raise DimensionError("dimension must be at least 1")
    return OperatorBasis(d, _ggm(d))


def _cell_of_index(wire, theory: Theory) -> np.ndarray:
    decl = theory[wire]
    span = decl.span_indices()
    if span is None:
        raise InstantiationError(
            f"wire {wire} has a generic base and no concrete matrix; "
            "declare a numeric span such as {\"span\": [0, 1, 2]}"
        )
    cells = np.full(decl.dim**2, E2, dtype=np.int64)
    cells[list(span)] = E1
    cells[0] = E0
    return cells


# ---------------------------------------------------------------- vec helpers


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).reshape(-1, order="F")


def unvec(v: np.ndarray, D: Optional[int] = None) -> np.ndarray:
    if D is None:
        D = int(round(np.sqrt(v.size)))
    if D * D != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized square matrix")
    return np.asarray(v).reshape(D, D, order="F")


def _letters(k, start=0):
    alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return alphabet[start : start + k]


# ---------------------------------------------------------------- superoperators


class SuperOp:
    """Projector diagonal in the product Gell-Mann basis of its wires.

    ``mask[a1, ..., an]`` says whether the product element
    ``G_a1 (x) ... (x) G_an`` is kept.
    """

    def __init__(self, wires: Sequence[str], dims: Sequence[int], mask: np.ndarray):
        self.wires = tuple(wires)
        self.dims = tuple(int(d) for d in dims)
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.shape != tuple(d * d for d in self.dims):
            raise DimensionError("mask shape does not match wire dimensions")
        self._matrix = None

    @property
    def D(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def rank(self) -> int:
        return int(self.mask.sum())

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        """Product-basis coefficients ``Tr(G_a X)``, shape (d1^2, ..., dn^2)."""
        n = len(self.dims)
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.D, self.D):
            raise DimensionError(f"operator of shape {X.shape} on wires of total dim {self.D}")
        if n == 0:
            return X.reshape(())
        rows, cols, outs = _letters(n), _letters(n, n), _letters(n, 2 * n)
        # Tr(G X) = sum G[col, row] X[row, col]
        spec = ",".join(f"{o}{c}{r}" for o, r, c in zip(outs, rows, cols))
        spec += f",{rows}{cols}->{outs}"
        ops = [_ggm(d) for d in self.dims]
        return np.einsum(spec, *ops, X.reshape(self.dims + self.dims), optimize=True)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        n = len(self.dims)
        if n == 0:
            return np.asarray(coeffs, dtype=complex).reshape(1, 1)
        rows, cols, outs = _letters(n), _letters(n, n), _letters(n, 2 * n)
        spec = ",".join(f"{o}{r}{c}" for o, r, c in zip(outs, rows, cols))
        spec += f",{outs}->{rows}{cols}"
        ops = [_ggm(d) for d in self.dims]
        return np.einsum(spec, *ops, coeffs, optimize=True).reshape(self.D, self.D)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.synthesize(self.coefficients(X) * self.mask)

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``D^2 x D^2`` matrix acting on column-stacked vectors."""
        if self._matrix is None:
            V = self.basis_vectors()
            keep = self.mask.reshape(-1)
            self._matrix = V[:, keep] @ V[:, keep].conj().T
        return self._matrix

    def basis_vectors(self) -> np.ndarray:
        """Columns are ``vec`` of the product basis elements in mask order."""
        ops = np.ones((1, 1, 1), dtype=complex)
        for d in self.dims:
            g = _ggm(d)
            a, D = ops.shape[0], ops.shape[1]
            ops = np.einsum("aij,bkl->abikjl", ops, g).reshape(a * d * d, D * d, D * d)
        N = ops.shape[0]
        return ops.transpose(0, 2, 1).reshape(N, -1).T

    def expand(self, wires: Sequence[str], dims: Sequence[int]) -> "SuperOp":
        """This projector tensored with the identity on extra wires, in ``wires`` order."""
        wires = tuple(wires)
        if not set(self.wires) <= set(wires):
            raise DimensionError(f"wires {self.wires} are not all among {wires}")
        for w, d in zip(wires, dims):
            if w in self.wires and self.dims[self.wires.index(w)] != d:
                raise DimensionError(f"wire {w}: dimension {d} vs {self.dims[self.wires.index(w)]}")
        mask = self.mask
        extra = [w for w in wires if w not in self.wires]
        for w in extra:
            d = dims[wires.index(w)]
            mask = mask[..., None] & np.ones(d * d, dtype=bool)
        full = list(self.wires) + extra
        mask = np.transpose(mask, [full.index(w) for w in wires])
        return SuperOp(wires, dims, mask)

    def __repr__(self):
        return f"SuperOp(wires={self.wires}, dims={self.dims}, rank={self.rank})"


def projector_matrix(e: Union[Expr, str], theory: Theory) -> SuperOp:
    """Concrete projector of ``e``; wires in theory order."""
    if isinstance(e, str):
        e = parse(e, theory)
    wires = wires_of(e, theory)
    cell_idx = [_cell_of_index(w, theory) for w in wires]
    cs = semantics(e, theory)
    allowed = cs.space.to_mask(cs.bits)
    if not wires:
        return SuperOp((), (), np.ones((), dtype=bool))
    n = len(wires)
    tup = np.zeros(tuple(len(c) for c in cell_idx), dtype=np.int64)
    for i, c in enumerate(cell_idx):
        shape = [1] * n
        shape[i] = len(c)
        tup = tup + c.reshape(shape) * 3 ** (n - 1 - i)
    return SuperOp(wires, [theory[w].dim for w in wires], allowed[tup])


def apply(S: SuperOp, X: np.ndarray) -> np.ndarray:
    return S(X)


def numeric_eq(e1, e2, theory: Theory, tol: float = DEFAULT_TOL) -> bool:
    return numeric_distance(e1, e2, theory) <= tol


def numeric_distance(e1, e2, theory: Theory) -> float:
    """Frobenius distance between the two projector matrices."""
    s1, s2 = projector_matrix(e1, theory), projector_matrix(e2, theory)
    if s1.wires != s2.wires:
        from .errors import WireMismatchError

        raise WireMismatchError(f"projectors over {s1.wires} and {s2.wires}")
    return float(np.linalg.norm(s1.matrix - s2.matrix))


def numeric_subset(e1, e2, theory: Theory, tol: float = DEFAULT_TOL) -> bool:
    s1, s2 = projector_matrix(e1, theory), projector_matrix(e2, theory)
    return float(np.linalg.norm(s2.matrix @ s1.matrix - s1.matrix)) <= tol


# ---------------------------------------------------------------- norms


def expected_norm(e: Union[Expr, str], theory: Theory) -> Fraction:
    """Trace shared by every member of the structure ``e``."""
    if isinstance(e, str):
        e = parse(e, theory)
    if isinstance(e, Atom):
        return theory[e.wire].norm
    if isinstance(e, Trivial):
        return Fraction(1)
    if isinstance(e, Neg):
        D = 1
        for w in wires_of(e, theory):
            D *= theory[w].dim
        return Fraction(D) / expected_norm(e.child, theory)
    if isinstance(e, Arrow):
        return expected_norm(Neg(Tensor((e.lhs, Neg(e.rhs)))), theory)
    if isinstance(e, Tensor):
        out = Fraction(1)
        for c in e.children:
            out *= expected_norm(c, theory)
        return out
    if isinstance(e, (Prec, Succ)):
        return expected_norm(e.lhs, theory) * expected_norm(e.rhs, theory)
    if isinstance(e, (Cap, Cup)):
        norms = {expected_norm(c, theory) for c in e.children}
        if len(norms) != 1:
            raise InstantiationError(f"operands normalize differently: {sorted(norms)}")
        return norms.pop()
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- Choi operators


@dataclass
class ChoiOperator:
    wires: tuple
    dims: tuple
    matrix: np.ndarray = field(repr=False)
    declared_norm: float = 1.0

    def __post_init__(self):
        self.wires = tuple(self.wires)
        self.dims = tuple(int(d) for d in self.dims)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if len(self.wires) != len(self.dims):
            raise DimensionError("one dimension per wire is required")
        D = int(np.prod(self.dims, dtype=np.int64))
        if self.matrix.shape != (D, D):
            raise DimensionError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")
        self.declared_norm = float(self.declared_norm)

    @property
    def D(self) -> int:
        return self.matrix.shape[0]

    def permuted(self, wires: Sequence[str]) -> "ChoiOperator":
        """Same operator with its tensor factors reordered to ``wires``."""
        wires = tuple(wires)
        if sorted(wires) != sorted(self.wires):
            raise DimensionError(f"cannot reorder wires {self.wires} as {wires}")
        order = [self.wires.index(w) for w in wires]
        dims = tuple(self.dims[i] for i in order)
        return ChoiOperator(wires, dims, permute(self.matrix, self.dims, order), self.declared_norm)

    def dump(self, fh) -> None:
        write_matrix(fh, self.dims, self.declared_norm, self.matrix)

    @classmethod
    def load(cls, path, wires: Sequence[str]) -> "ChoiOperator":
        dims, norm, matrix = read_matrix(path)
        if len(dims) != len(wires):
            raise DimensionError(f"matrix file has {len(dims)} factors, expected {len(wires)}")
        return cls(tuple(wires), dims, matrix, norm)


def permute(X: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of ``X``; new factor k is old factor ``order[k]``."""
    n = len(dims)
    t = np.asarray(X).reshape(tuple(dims) * 2)
    t = t.transpose(list(order) + [n + i for i in order])
    D = int(np.prod(dims, dtype=np.int64))
    return t.reshape(D, D)


def partial_trace(X: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (kept factors stay in order)."""
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(X).reshape(tuple(dims) * 2)
    rows = list(_letters(n))
    cols = [rows[i] if i not in keep else _letters(1, n + i) for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    Dk = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    return res.reshape(Dk, Dk)


def partial_transpose(X: np.ndarray, dims: Sequence[int], which: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = np.asarray(X).reshape(tuple(dims) * 2)
    axes = list(range(2 * n))
    for i in which:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return t.transpose(axes).reshape(X.shape)


@dataclass(frozen=True)
class Verdict:
    positive: bool
    trace_ok: bool
    in_structure: bool
    min_eigenvalue: float
    trace_residual: float
    projector_residual: float

    @property
    def passed(self) -> bool:
        return self.positive and self.trace_ok and self.in_structure

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "positive": self.positive,
            "trace_ok": self.trace_ok,
            "in_structure": self.in_structure,
            "min_eigenvalue": self.min_eigenvalue,
            "trace_residual": self.trace_residual,
            "projector_residual": self.projector_residual,
        }


def _aligned(W: ChoiOperator, S: SuperOp) -> ChoiOperator:
    if set(W.wires) != set(S.wires):
        raise DimensionError(f"operator wires {W.wires} vs structure wires {S.wires}")
    W = W.permuted(S.wires)
    if W.dims != S.dims:
        raise DimensionError(f"operator dims {W.dims} vs structure dims {S.dims}")
    return W


def validate(W: ChoiOperator, e: Union[Expr, str], theory: Theory, tol: float = DEFAULT_TOL) -> Verdict:
    """Positivity, declared trace and projector fixed point of ``W`` in ``e``."""
    S = projector_matrix(e, theory)
    W = _aligned(W, S)
    H = (W.matrix + W.matrix.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(H)[0])
    tr_res = float(abs(np.trace(W.matrix) - W.declared_norm))
    proj_res = float(np.linalg.norm(S(W.matrix) - W.matrix))
    return Verdict(min_eig >= -tol, tr_res <= tol, proj_res <= tol, min_eig, tr_res, proj_res)


def sample_member(S: SuperOp, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Random positive operator in the image of ``S`` with trace ``norm``."""
    D = S.D
    G = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    H = S((G + G.conj().T) / 2)
    H = (H + H.conj().T) / 2
    lam = max(0.0, -float(np.linalg.eigvalsh(H)[0])) + 0.1
    H = H + lam * np.eye(D)
    return H * (norm / np.trace(H).real)


def quasi_ortho_check(Abar: np.ndarray, A: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return quasi_ortho_residual(Abar, A) <= tol


def quasi_ortho_residual(Abar: np.ndarray, A: np.ndarray) -> float:
    Abar, A = np.asarray(Abar), np.asarray(A)
    if Abar.shape != A.shape:
        raise DimensionError(f"shapes {Abar.shape} and {A.shape} differ")
    d = A.shape[0]
    return float(abs(np.trace(Abar @ A) - np.trace(Abar) * np.trace(A) / d))


def factorization_residual(M: ChoiOperator, group: Sequence[str], A: np.ndarray) -> float:
    """``|| Tr_A[M (A (x) 1)] - Tr(A)/d_A Tr_A M ||_F`` for group ``A`` of wires."""
    idx = [M.wires.index(w) for w in group]
    rest = [i for i in range(len(M.wires)) if i not in idx]
    order = idx + rest
    dims = [M.dims[i] for i in order]
    Mp = permute(M.matrix, M.dims, order)
    dA = int(np.prod([M.dims[i] for i in idx], dtype=np.int64))
    dB = Mp.shape[0] // dA
    keep = list(range(len(idx), len(order)))
    lhs = partial_trace(Mp @ np.kron(A, np.eye(dB)), dims, keep)
    rhs = np.trace(A) / dA * partial_trace(Mp, dims, keep)
    return float(np.linalg.norm(lhs - rhs))


def signaling_test(
    M: ChoiOperator,
    group: Sequence[str],
    e_A: Union[Expr, str],
    theory: Theory,
    tol: float = DEFAULT_TOL,
    rng: Optional[np.random.Generator] = None,
) -> bool:
    """Whether nothing plugged in at ``group`` (members of ``e_A``) signals to the rest.

    True iff ``M`` is fixed by the negation of ``e_A`` tensored with the
    identity elsewhere.  A true verdict is cross-checked against the trace
    factorization on 20 random members of ``e_A``.
    """
    group = tuple(group)
    if not group or len(set(group)) != len(group):
        raise DimensionError("wire group must be nonempty and free of repeats")
    if not set(group) < set(M.wires):
        raise DimensionError(f"group {group} must be a proper subset of {M.wires}")
    if isinstance(e_A, str):
        e_A = parse(e_A, theory)
    if set(wires_of(e_A, theory)) != set(group):
        raise DimensionError(f"structure spans {wires_of(e_A, theory)}, group is {group}")
    bar = projector_matrix(Neg(e_A), theory)
    full = bar.expand(M.wires, M.dims)
    residual = float(np.linalg.norm(full(M.matrix) - M.matrix))
    if residual > tol:
        return False
    rng = rng if rng is not None else np.random.default_rng(0)
    local = projector_matrix(e_A, theory)
    norm = float(expected_norm(e_A, theory))
    scale = max(1.0, float(np.linalg.norm(M.matrix)))
    for _ in range(20):
        A = sample_member(local, norm, rng)
        A = permute(A, local.dims, [local.wires.index(w) for w in group])
        res = factorization_residual(M, group, A)
        if res > tol * scale * max(1.0, float(np.linalg.norm(A))) + 1e-12 * scale:
            raise RuntimeError(f"internal error: factorization residual {res:.3e} after passing")
    return True


def choi_from_kraus(kraus, wires: Sequence[str] = ("A0", "A1"), declared_norm=None) -> ChoiOperator:
    """Choi operator of ``X -> sum K X K^dagger``; input wire first."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    if not kraus:
        raise DimensionError("at least one Kraus operator is required")
    d1, d0 = kraus[0].shape
    if any(K.shape != (d1, d0) for K in kraus):
        raise DimensionError("Kraus operators must share one shape")
    phi = np.zeros(d0 * d0, dtype=complex)
    phi[:: d0 + 1] = 1
    out = np.zeros((d0 * d1, d0 * d1), dtype=complex)
    for K in kraus:
        v = np.kron(np.eye(d0), K) @ phi
        out += np.outer(v, v.conj())
    out = out.T
    if declared_norm is None:
        declared_norm = float(np.trace(out).real)
    return ChoiOperator(tuple(wires), (d0, d1), out, declared_norm)


def apply_choi(M: ChoiOperator, A: np.ndarray, inputs: Sequence[str]) -> np.ndarray:
    """Map represented by ``M`` applied to ``A`` on the ``inputs`` wires."""
    inputs = tuple(inputs)
    if not set(inputs) <= set(M.wires):
        raise DimensionError(f"inputs {inputs} are not wires of {M.wires}")
    outputs = tuple(w for w in M.wires if w not in inputs)
    Mp = M.permuted(inputs + outputs)
    d_in = int(np.prod(Mp.dims[: len(inputs)], dtype=np.int64))
    d_out = Mp.D // d_in
    A = np.asarray(A, dtype=complex)
    if A.shape != (d_in, d_in):
        raise DimensionError(f"input of shape {A.shape}, expected {(d_in, d_in)}")
    keep = list(range(len(inputs), len(Mp.dims)))
    return partial_trace(Mp.matrix @ np.kron(A, np.eye(d_out)), Mp.dims, keep).T


def link_product(M: ChoiOperator, N: ChoiOperator, shared: Sequence[str]) -> ChoiOperator:
    """Choi operator of the composite obtained by joining ``M`` and ``N`` on ``shared``.

    With the transposed Choi convention this is
    ``Tr_s[(M^{T_s} (x) 1)(1 (x) N)]``; result wires are the remaining wires
    of ``M`` followed by those of ``N``.
    """
    shared = tuple(shared)
    for w in shared:
        if w not in M.wires or w not in N.wires:
            raise DimensionError(f"shared wire {w} missing from an operand")
        if M.dims[M.wires.index(w)] != N.dims[N.wires.index(w)]:
            raise DimensionError(f"shared wire {w} has mismatched dimensions")
    clash = (set(M.wires) & set(N.wires)) - set(shared)
    if clash:
        raise DimensionError(f"wires {sorted(clash)} appear in both operands but are not shared")
    a = [w for w in M.wires if w not in shared]
    c = [w for w in N.wires if w not in shared]
    Mp = M.permuted(tuple(a) + shared)
    Np = N.permuted(shared + tuple(c))
    da = int(np.prod(Mp.dims[: len(a)], dtype=np.int64))
    db = Mp.D // da
    dc = Np.D // db
    m = Mp.matrix.reshape(da, db, da, db)
    n = Np.matrix.reshape(db, dc, db, dc)
    # out[a c, a' c'] = sum_{b, b''} M[a b'', a' b] N[b'' c, b c']
    out = np.einsum("aBxb,BcbC->acxC", m, n).reshape(da * dc, da * dc)
    wires = tuple(a) + tuple(c)
    dims = Mp.dims[: len(a)] + Np.dims[len(shared):]
    return ChoiOperator(wires, dims, out, float(np.trace(out).real))


@dataclass(frozen=True)
class ResolutionVerdict:
    elements_positive: tuple
    total: Verdict

    @property
    def passed(self) -> bool:
        return all(self.elements_positive) and self.total.passed

    def __bool__(self):
        return self.passed


def resolution_check(
    family, e: Union[Expr, str], theory: Theory, tol: float = DEFAULT_TOL
) -> ResolutionVerdict:
    """Each element positive and the sum a member of ``e``."""
    family = [np.asarray(F, dtype=complex) for F in family]
    if not family:
        raise DimensionError("a resolution needs at least one element")
    if any(F.shape != family[0].shape for F in family):
        raise DimensionError("resolution elements must share one shape")
    if isinstance(e, str):
        e = parse(e, theory)
    wires = wires_of(e, theory)
    pos = tuple(
        bool(np.linalg.eigvalsh((F + F.conj().T) / 2)[0] >= -tol) for F in family
    )
    total = ChoiOperator(
        wires, [theory[w].dim for w in wires], sum(family), float(expected_norm(e, theory))
    )
    return ResolutionVerdict(pos, validate(total, e, theory, tol))


# ---------------------------------------------------------------- matrix files


def write_matrix(fh, dims: Sequence[int], norm: float, matrix: np.ndarray) -> None:
    fh.write("dims: " + " ".join(str(int(d)) for d in dims) + "\n")
    fh.write(f"norm: {float(norm)!r}\n")
    for row in np.asarray(matrix, dtype=complex):
        fh.write("\t".join(f"{z.real:.16e} {z.imag:.16e}" for z in row) + "\n")


def format_matrix(dims, norm, matrix) -> str:
    buf = io.StringIO()
    write_matrix(buf, dims, norm, matrix)
    return buf.getvalue()


def read_matrix(path) -> tuple:
    """Return ``(dims, norm, matrix)`` from a matrix file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DimensionError(f"cannot read matrix file {path}: {exc.strerror}") from None
    return parse_matrix(text, str(path))


def parse_matrix(text: str, source: str = "<matrix>") -> tuple:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("dims:") or not lines[1].startswith("norm:"):
        raise DimensionError(f"{source}: expected 'dims:' and 'norm:' header lines")
    try:
        dims = tuple(int(x) for x in lines[0][5:].split())
        norm = float(lines[1][5:])
    except ValueError:
        raise DimensionError(f"{source}: malformed header") from None
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"{source}: dimensions must be positive")
    D = int(np.prod(dims, dtype=np.int64))
    rows = lines[2:]
    if len(rows) != D:
        raise DimensionError(f"{source}: expected {D} rows, found {len(rows)}")
    out = np.empty((D, D), dtype=complex)
    for i, row in enumerate(rows):
        entries = row.split("\t")
        if len(entries) != D:
            raise DimensionError(f"{source}: row {i + 1} has {len(entries)} entries, expected {D}")
        for j, ent in enumerate(entries):
            parts = ent.split()
            if len(parts) != 2:
                raise DimensionError(f"{source}: entry ({i + 1},{j + 1}) is not 're im'")
            try:
                out[i, j] = complex(float(parts[0]), float(parts[1]))
            except ValueError:
                raise DimensionError(f"{source}: entry ({i + 1},{j + 1}) is not numeric") from None
    return dims, norm, out
