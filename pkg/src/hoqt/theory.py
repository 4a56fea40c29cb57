"""Wire declarations and the theory registry that fixes the global tensor order."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

from .errors import TheoryError

LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Cell indices: E0 = image of D, E1 = image of P - D, E2 = image of I - P.
E0, E1, E2 = 0, 1, 2


class BaseKind(enum.Enum):
    GENERIC = "generic"
    IDENTITY = "identity"
    DEPOLARIZING = "depolarizing"


@dataclass(frozen=True)
class NumericSpan:
    """Base projector spanned by a subset of the default operator basis."""

    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(int(i) for i in self.indices)))


Base = Union[BaseKind, NumericSpan]


@dataclass(frozen=True)
class WireDecl:
    label: str
    dim: int
    norm: Fraction = Fraction(1)
    base: Base = BaseKind.GENERIC

    def __post_init__(self):
        if not isinstance(self.label, str) or not LABEL_RE.match(self.label):
            raise TheoryError(f"invalid wire label {self.label!r}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise TheoryError(f"wire {self.label}: dimension must be a positive integer")
        if self.dim == 1:
            raise TheoryError(
                f"wire {self.label}: dimension 1 is reserved for the trivial system '1'"
            )
        norm = Fraction(self.norm)
        if norm <= 0:
            raise TheoryError(f"wire {self.label}: trace normalization must be > 0")
        object.__setattr__(self, "norm", norm)
        if isinstance(self.base, NumericSpan):
            idx = self.base.indices
            if 0 not in idx:
                raise TheoryError(f"wire {self.label}: numeric span must contain index 0")
            if len(set(idx)) != len(idx):
                raise TheoryError(f"wire {self.label}: numeric span has duplicate indices")
            if any(i < 0 or i >= self.dim**2 for i in idx):
                raise TheoryError(
                    f"wire {self.label}: numeric span indices must lie in [0, {self.dim**2})"
                )
        elif not isinstance(self.base, BaseKind):
            raise TheoryError(f"wire {self.label}: unknown base {self.base!r}")

    @property
    def cells(self) -> frozenset:
        """Nonzero minimal idempotents available on this wire."""
        base = self.base
        if base is BaseKind.IDENTITY:
            return frozenset((E0, E1))
        if base is BaseKind.DEPOLARIZING:
            return frozenset((E0, E2))
        if isinstance(base, NumericSpan):
            # a full or trivial span collapses a cell to the zero subspace
            out = {E0}
            if len(base.indices) > 1:
                out.add(E1)
            if len(base.indices) < self.dim**2:
                out.add(E2)
            return frozenset(out)
        return frozenset((E0, E1, E2))

    def span_indices(self):
        """Basis indices spanned by the base projector, or None for Generic."""
        base = self.base
        if base is BaseKind.IDENTITY:
            return tuple(range(self.dim**2))
        if base is BaseKind.DEPOLARIZING:
            return (0,)
        if isinstance(base, NumericSpan):
            return base.indices
        return None

    def to_json(self) -> dict:
        if isinstance(self.base, NumericSpan):
            base = {"span": list(self.base.indices)}
        else:
            base = self.base.value
        norm = self.norm
        norm_out = int(norm) if norm.denominator == 1 else str(norm)
        return {"label": self.label, "dim": self.dim, "norm": norm_out, "base": base}

    @classmethod
    def from_json(cls, obj) -> "WireDecl":
        if not isinstance(obj, dict):
            raise TheoryError("wire entry must be an object")
        try:
            label = obj["label"]
            dim = obj["dim"]
        except KeyError as exc:
            raise TheoryError(f"wire entry missing field {exc.args[0]!r}") from None
        if isinstance(dim, bool) or not isinstance(dim, int):
            raise TheoryError(f"wire {label}: dim must be an integer")
        try:
            norm = Fraction(str(obj.get("norm", 1)))
        except (ValueError, ZeroDivisionError):
            raise TheoryError(f"wire {label}: bad norm {obj.get('norm')!r}") from None
        return cls(label, dim, norm, _parse_base(obj.get("base", "generic"), label))


def _parse_base(raw, label) -> Base:
    if isinstance(raw, str):
        try:
            return BaseKind(raw)
        except ValueError:
            raise TheoryError(f"wire {label}: unknown base {raw!r}") from None
    if isinstance(raw, dict) and set(raw) == {"span"} and isinstance(raw["span"], list):
        if not all(isinstance(i, int) and not isinstance(i, bool) for i in raw["span"]):
            raise TheoryError(f"wire {label}: span entries must be integers")
        if len(set(raw["span"])) != len(raw["span"]):
            raise TheoryError(f"wire {label}: numeric span has duplicate indices")
        return NumericSpan(tuple(raw["span"]))
    raise TheoryError(f"wire {label}: unknown base {raw!r}")


class Theory:
    """Ordered registry of wires; the order is the tensor order of every matrix."""

    def __init__(self, wires: Iterable[WireDecl]):
        self.wires = tuple(wires)
        self._index = {}
        for i, w in enumerate(self.wires):
            if w.label in self._index:
                raise TheoryError(f"duplicate wire label {w.label!r}")
            self._index[w.label] = i

    def __contains__(self, label):
        return label in self._index

    def __getitem__(self, label) -> WireDecl:
        try:
            return self.wires[self._index[label]]
        except KeyError:
            raise TheoryError(f"undeclared wire {label!r}") from None

    def __iter__(self):
        return iter(self.wires)

    def __len__(self):
        return len(self.wires)

    def __eq__(self, other):
        return isinstance(other, Theory) and self.wires == other.wires

    def __hash__(self):
        return hash(self.wires)

    def __repr__(self):
        return f"Theory({list(self.wires)!r})"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(w.label for w in self.wires)

    def position(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise TheoryError(f"undeclared wire {label!r}") from None

    def ordered(self, labels) -> tuple[str, ...]:
        return tuple(sorted(labels, key=self.position))

    def restrict(self, labels) -> "Theory":
        keep = set(labels)
        return Theory(w for w in self.wires if w.label in keep)

    def replace(self, label, **changes) -> "Theory":
        from dataclasses import replace

        return Theory(replace(w, **changes) if w.label == label else w for w in self.wires)

    @classmethod
    def uniform(cls, labels, dim=2, base: Base = BaseKind.GENERIC, norm=1) -> "Theory":
        return cls(WireDecl(label, dim, Fraction(norm), base) for label in labels)

    def to_json(self) -> dict:
        return {"wires": [w.to_json() for w in self.wires]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, obj) -> "Theory":
        if not isinstance(obj, dict) or not isinstance(obj.get("wires"), list):
            raise TheoryError('theory must be an object with a "wires" list')
        return cls(WireDecl.from_json(w) for w in obj["wires"])

    @classmethod
    def loads(cls, text: str) -> "Theory":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TheoryError(f"theory file is not valid JSON: {exc}") from None
        return cls.from_json(obj)

    @classmethod
    def load(cls, path) -> "Theory":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise TheoryError(f"cannot read theory file {path}: {exc.strerror}") from None
        return cls.loads(text)
