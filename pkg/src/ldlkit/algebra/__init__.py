"""Symbolic engine for the master-field operator algebra."""

from .expr import Expr, Term, from_text, to_text
from .relations import CAUSAL_MODE, SYMMETRIC_MODE, commutator
from .rewrite import (
    contract_deltas,
    expand_number,
    normal_order,
    to_symmetric,
    vacuum_expectation,
)
from .symbols import (
    CommMarker,
    Evolution,
    Generator,
    SysOp,
    b_int,
    b_op,
    bd_int,
    bd_op,
    d_sys,
    n_int,
    n_op,
    t_sys,
)

__all__ = [
    "Expr", "Term", "from_text", "to_text",
    "CAUSAL_MODE", "SYMMETRIC_MODE", "commutator",
    "contract_deltas", "expand_number", "normal_order",
    "to_symmetric", "vacuum_expectation",
    "CommMarker", "Evolution", "Generator", "SysOp",
    "b_int", "b_op", "bd_int", "bd_op", "d_sys", "n_int", "n_op", "t_sys",
]
