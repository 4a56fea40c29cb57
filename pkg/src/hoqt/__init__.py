"""Projector algebra for higher-order quantum theories."""

from .cells import (
    CellSet,
    ChainForm,
    canonical_form,
    eq,
    independent_of,
    nosig_subset,
    order_report,
    semantics,
    subset,
)
from .errors import HoqtError
from .expr import desugar, format_expr, parse, wires_of
from .superop import (
    ChoiOperator,
    SuperOp,
    apply_choi,
    choi_from_kraus,
    default_basis,
    link_product,
    projector_matrix,
    signaling_test,
    validate,
)
from .theory import BaseKind, NumericSpan, Theory, WireDecl

__version__ = "0.1.0"

__all__ = [
    "BaseKind",
    "CellSet",
    "ChainForm",
    "ChoiOperator",
    "HoqtError",
    "NumericSpan",
    "SuperOp",
    "Theory",
    "WireDecl",
    "apply_choi",
    "canonical_form",
    "choi_from_kraus",
    "default_basis",
    "desugar",
    "eq",
    "format_expr",
    "independent_of",
    "link_product",
    "nosig_subset",
    "order_report",
    "parse",
    "projector_matrix",
    "semantics",
    "signaling_test",
    "subset",
    "validate",
    "wires_of",
]
