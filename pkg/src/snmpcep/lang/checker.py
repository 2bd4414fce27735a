"""Static validation of parsed patterns against a measure registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..errors import PatternValidationError
from ..events import STANDARD_MEASURES, MeasureKind, base_measure
from .ast import (
    Arith, BoolLit, BoolOp, Compare, EveryNode, FilterNode, PatternAst, Ref,
    TextLit, WithinNode, iter_filters, iter_refs,
)


@dataclass(frozen=True)
class CheckedPattern:
    """A validated pattern plus what the checker resolved about each variable."""

    ast: PatternAst
    var_measures: Mapping[str, Optional[MeasureKind]] = field(compare=False)
    signal_vars: frozenset = field(compare=False)

    @property
    def name(self) -> str:
        return self.ast.name


def _filter_facts(f: FilterNode):
    measure = None
    signal = None
    for atom in f.atoms:
        if atom.accessor == "measure" and atom.op == "=" and isinstance(atom.literal, TextLit):
            measure = measure or atom.literal.value
        elif atom.accessor == "kind" and isinstance(atom.literal, BoolLit):
            flag = atom.literal.value if atom.op == "=" else not atom.literal.value
            signal = flag
    return measure, signal


def _check_durations(node):
    if isinstance(node, WithinNode):
        if node.duration_ms <= 0:
            raise PatternValidationError("timer:within duration must be positive")
        _check_durations(node.child)
    elif isinstance(node, EveryNode):
        _check_durations(node.child)
    elif not isinstance(node, FilterNode):
        _check_durations(node.left)
        _check_durations(node.right)


def validate(ast: PatternAst, registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> CheckedPattern:
    """Check measure names and counter-delta arithmetic.

    Measure literals attached to a variable whose filter pins it to
    application signals are signal names and are not looked up.
    """
    filters = list(iter_filters(ast.expr))
    names = [f.var for f in filters]
    dupes = {v for v in names if names.count(v) > 1}
    if dupes:
        v = sorted(dupes)[0]
        raise PatternValidationError(f"variable {v!r} is bound more than once", v)
    if ast.window_ms is not None and ast.window_ms <= 0:
        raise PatternValidationError("win:time duration must be positive")
    _check_durations(ast.expr)

    def lookup(name: str) -> MeasureKind:
        try:
            return registry[base_measure(name)]
        except KeyError:
            raise PatternValidationError(f"unknown measure {name!r}", name) from None

    facts = {f.var: _filter_facts(f) for f in filters}
    signal_vars = frozenset(v for v, (_, sig) in facts.items() if sig)
    var_measures: dict[str, Optional[MeasureKind]] = {}
    for f in filters:
        for atom in f.atoms:
            if atom.arg is not None:
                lookup(atom.arg)
            if atom.accessor == "measure" and f.var not in signal_vars:
                lookup(atom.literal.value)
        measure = facts[f.var][0]
        var_measures[f.var] = None if (measure is None or f.var in signal_vars) else lookup(measure)

    for ref in iter_refs(ast.where):
        if ref.var not in facts:
            raise PatternValidationError(f"variable {ref.var!r} is not bound in the pattern", ref.var)
        if ref.arg is not None:
            lookup(ref.arg)

    def walk(e):
        if isinstance(e, Compare):
            for side, other in ((e.left, e.right), (e.right, e.left)):
                if isinstance(side, Ref) and side.accessor == "measure" and isinstance(other, TextLit) \
                        and side.var not in signal_vars:
                    lookup(other.value)
        if isinstance(e, Arith) and e.op == "-" and isinstance(e.left, Ref) and isinstance(e.right, Ref) \
                and e.left.accessor == "value" and e.right.accessor == "value":
            _check_delta(e.left, e.right)
        if isinstance(e, (Arith, Compare, BoolOp)):
            walk(e.left)
            walk(e.right)

    def delta_measure(ref: Ref) -> str:
        name = ref.arg or facts[ref.var][0]
        if name is None or ref.var in signal_vars:
            raise PatternValidationError(f"cannot resolve the measure of {ref.var!r} in a delta", ref.var)
        return name

    def _check_delta(a: Ref, b: Ref):
        ma, mb = delta_measure(a), delta_measure(b)
        if ma != mb:
            raise PatternValidationError(f"delta over mismatched measures {ma!r} and {mb!r}", mb)
        if not lookup(ma).is_counter:
            raise PatternValidationError(f"delta over non-counter measure {ma!r}", ma)

    walk(ast.where)
    return CheckedPattern(ast, var_measures, signal_vars)
