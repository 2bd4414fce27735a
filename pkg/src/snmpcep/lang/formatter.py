"""Canonical single-line rendering of a PatternAst."""

from __future__ import annotations

from .ast import (
    ACCESSOR_NAMES, AndNode, Arith, BoolLit, BoolOp, Compare, EveryNode,
    FilterNode, FollowedBy, IntLit, OrNode, PatternAst, Ref, TextLit, WithinNode,
)

_PATTERN_PREC = {OrNode: (1, "or"), AndNode: (2, "and"), FollowedBy: (3, "->")}


def _text(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _literal(lit) -> str:
    if isinstance(lit, BoolLit):
        return "true" if lit.value else "false"
    if isinstance(lit, TextLit):
        return _text(lit.value)
    return str(lit.value)


def _call(var: str, accessor: str, arg) -> str:
    inner = _text(arg) if arg is not None else ""
    return f"{var}.{ACCESSOR_NAMES[accessor]}({inner})"


def _pattern(node, ctx: int = 0, right: bool = False) -> str:
    if isinstance(node, FilterNode):
        atoms = " and ".join(
            f"{_call(node.var, a.accessor, a.arg)}{a.op}{_literal(a.literal)}" for a in node.atoms
        )
        return f"{node.var}=Event({atoms})"
    if isinstance(node, EveryNode):
        child = node.child
        if isinstance(child, (FilterNode, EveryNode, WithinNode)):
            return "every " + _pattern(child)
        return f"every ({_pattern(child)})"
    if isinstance(node, WithinNode):
        return f"({_pattern(node.child)}) where timer:within({node.duration_ms // 1000} sec)"
    prec, op = _PATTERN_PREC[type(node)]
    text = f"{_pattern(node.left, prec)} {op} {_pattern(node.right, prec, True)}"
    if prec < ctx or (prec == ctx and right):
        return f"({text})"
    return text


def _expr_prec(e) -> int:
    if isinstance(e, BoolOp):
        return 1 if e.op == "or" else 2
    if isinstance(e, Compare):
        return 3
    if isinstance(e, Arith):
        return 4
    return 5


def _expr(e, ctx: int = 0, right: bool = False) -> str:
    if isinstance(e, (IntLit, TextLit, BoolLit)):
        return _literal(e)
    if isinstance(e, Ref):
        return _call(e.var, e.accessor, e.arg)
    prec = _expr_prec(e)
    if isinstance(e, Compare):
        # comparisons do not chain: parenthesise any comparison-or-looser child
        text = f"{_expr(e.left, prec + 1)} {e.op} {_expr(e.right, prec + 1)}"
    else:
        text = f"{_expr(e.left, prec)} {e.op} {_expr(e.right, prec, True)}"
    if prec < ctx or (prec == ctx and right):
        return f"({text})"
    return text


def format_pattern(ast: PatternAst) -> str:
    out = f"select * from pattern [{_pattern(ast.expr)}]"
    if ast.window_ms is not None:
        out += f" win:time({ast.window_ms // 1000} sec)"
    if ast.where is not None:
        out += f" where {_expr(ast.where)}"
    return out


def format_pattern_file(asts) -> str:
    return "\n".join(f"pattern: {a.name}\n{format_pattern(a)}\n" for a in asts)
