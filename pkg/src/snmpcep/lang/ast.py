"""Syntax tree for detection patterns.

All nodes are frozen dataclasses, so ``==`` is structural equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

# surface accessor name -> canonical accessor
ACCESSORS = {
    "getSNMPvalue": "value",
    "getMeasure": "measure",
    "getAdapterFlag": "kind",
}
ACCESSOR_NAMES = {v: k for k, v in ACCESSORS.items()}


# --- literals and where-clause expressions ---------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


Literal = Union[IntLit, TextLit, BoolLit]


@dataclass(frozen=True)
class Ref:
    """Accessor applied to a bound variable, e.g. ``e1.getSNMPvalue()``.

    ``arg`` is the optional measure qualifier of ``getSNMPvalue('name')``:
    the value is only known when the bound event is that measure.
    """
    var: str
    accessor: str
    arg: Optional[str] = None


@dataclass(frozen=True)
class Arith:
    op: str  # "+" or "-"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # > < >= <= = !=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" or "or"
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, TextLit, BoolLit, Ref, Arith, Compare, BoolOp]


# --- pattern expressions ---------------------------------------------------

@dataclass(frozen=True)
class FilterAtom:
    accessor: str
    arg: Optional[str]
    op: str
    literal: Literal


@dataclass(frozen=True)
class FilterNode:
    var: str
    atoms: tuple[FilterAtom, ...]


@dataclass(frozen=True)
class EveryNode:
    child: "PatternExpr"


@dataclass(frozen=True)
class FollowedBy:
    left: "PatternExpr"
    right: "PatternExpr"


@dataclass(frozen=True)
class AndNode:
    left: "PatternExpr"
    right: "PatternExpr"


@dataclass(frozen=True)
class OrNode:
    left: "PatternExpr"
    right: "PatternExpr"


@dataclass(frozen=True)
class WithinNode:
    child: "PatternExpr"
    duration_ms: int


PatternExpr = Union[FilterNode, EveryNode, FollowedBy, AndNode, OrNode, WithinNode]


@dataclass(frozen=True)
class PatternAst:
    name: str
    expr: PatternExpr
    window_ms: Optional[int] = None
    where: Optional[Expr] = None


def iter_filters(node: PatternExpr) -> Iterator[FilterNode]:
    """Filters in source (left-to-right) order."""
    if isinstance(node, FilterNode):
        yield node
    elif isinstance(node, (EveryNode, WithinNode)):
        yield from iter_filters(node.child)
    else:
        yield from iter_filters(node.left)
        yield from iter_filters(node.right)


def iter_refs(expr: Optional[Expr]) -> Iterator[Ref]:
    if expr is None:
        return
    if isinstance(expr, Ref):
        yield expr
    elif isinstance(expr, (Arith, Compare, BoolOp)):
        yield from iter_refs(expr.left)
        yield from iter_refs(expr.right)


def pattern_vars(ast: PatternAst) -> tuple[str, ...]:
    return tuple(f.var for f in iter_filters(ast.expr))


def max_within_ms(node: PatternExpr) -> int:
    if isinstance(node, FilterNode):
        return 0
    if isinstance(node, WithinNode):
        return max(node.duration_ms, max_within_ms(node.child))
    if isinstance(node, EveryNode):
        return max_within_ms(node.child)
    return max(max_within_ms(node.left), max_within_ms(node.right))
