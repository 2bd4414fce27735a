"""Brute-force reference matcher.

Computes, offline and by direct recursion over the whole trace, the set of
binding tuples a pattern denotes.  It interprets the syntax tree directly and
shares no matching code with :mod:`snmpcep.correlator.engine`; the two are
cross-checked by the property tests.

Denotation, for a sub-pattern started at *origin* ``(after, after_ts, act)``
(events eligible iff position > after and ts > after_ts; ``act`` is the
activation time used by ``timer:within``):

* filter: the first eligible event satisfying it, if any;
* ``L -> R``: every match of L, each extended by the matches of R started at
  L's completion event (strictly later timestamps only);
* ``L and R``: every pairing of a match of L with a match of R;
* ``L or R``: the matches of L followed by the matches of R;
* ``every C``: for every eligible event satisfying an initial filter of C,
  the matches of C with that filter pinned to the event;
* ``(C) where timer:within(d)``: matches of C completing by ``act + d``.

When a filter is pinned to event ``i``, siblings under ``and`` see only
positions after ``i`` and ``timer:within`` counts from ``ts(i)``.
"""

from __future__ import annotations

import math

from ..errors import SnmpCepError
from ..events import COUNTER_MODULUS, EventKind, make_alert, measure_matches
from ..lang.ast import (
    AndNode, Arith, BoolLit, BoolOp, Compare, EveryNode, FilterNode, FollowedBy,
    IntLit, OrNode, Ref, TextLit, WithinNode,
)

MAX_TRACE = 10_000
_MISSING = object()


class OracleLimitError(SnmpCepError, ValueError):
    pass


def _vars(node) -> set:
    if isinstance(node, FilterNode):
        return {node.var}
    if isinstance(node, (EveryNode, WithinNode)):
        return _vars(node.child)
    return _vars(node.left) | _vars(node.right)


def _initial(node) -> list:
    if isinstance(node, FilterNode):
        return [node]
    if isinstance(node, (EveryNode, WithinNode)):
        return _initial(node.child)
    if isinstance(node, FollowedBy):
        return _initial(node.left)
    return _initial(node.left) + _initial(node.right)


def _holds(op, x, y) -> bool:
    if op == ">":
        return x > y
    if op == "<":
        return x < y
    if op == ">=":
        return x >= y
    if op == "<=":
        return x <= y
    if op == "=":
        return x == y
    return x != y


def _satisfies(f: FilterNode, ev) -> bool:
    for atom in f.atoms:
        lit = atom.literal.value
        if atom.accessor == "value":
            if ev.kind != EventKind.MEASUREMENT:
                return False
            if atom.arg is not None and not measure_matches(ev.measure, atom.arg):
                return False
            ok = _holds(atom.op, ev.value, lit)
        elif atom.accessor == "measure":
            if atom.op in ("=", "!="):
                ok = measure_matches(ev.measure, lit) == (atom.op == "=")
            else:
                ok = _holds(atom.op, ev.measure, lit)
        else:
            ok = _holds(atom.op, ev.kind == EventKind.SIGNAL, lit)
        if not ok:
            return False
    return True


def _term(e, b):
    """Value of a where-clause term, or _MISSING when it is unknown."""
    if isinstance(e, (IntLit, TextLit, BoolLit)):
        return e.value
    if isinstance(e, Ref):
        if e.var not in b:
            return _MISSING
        ev = b[e.var][1]
        if e.accessor == "measure":
            return ev.measure
        if e.accessor == "kind":
            return ev.kind == EventKind.SIGNAL
        if ev.kind != EventKind.MEASUREMENT:
            return _MISSING
        if e.arg is not None and not measure_matches(ev.measure, e.arg):
            return _MISSING
        return ev.value
    if isinstance(e, Arith):
        x, y = _term(e.left, b), _term(e.right, b)
        if x is _MISSING or y is _MISSING:
            return _MISSING
        if e.op == "+":
            return x + y
        is_delta = (isinstance(e.left, Ref) and isinstance(e.right, Ref)
                    and e.left.accessor == "value" and e.right.accessor == "value")
        if is_delta and x < y and b[e.left.var][1].ts_ms >= b[e.right.var][1].ts_ms:
            return x + COUNTER_MODULUS - y
        return x - y
    return _truth(e, b)


def _truth(e, b) -> bool:
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, BoolOp):
        if e.op == "and":
            return _truth(e.left, b) and _truth(e.right, b)
        return _truth(e.left, b) or _truth(e.right, b)
    # comparison atom: unknown operands make it false
    x, y = _term(e.left, b), _term(e.right, b)
    if x is _MISSING or y is _MISSING:
        return False
    if e.op in ("=", "!="):
        measure_side = None
        if isinstance(e.left, Ref) and e.left.accessor == "measure" and isinstance(e.right, TextLit):
            measure_side = (x, y)
        elif isinstance(e.right, Ref) and e.right.accessor == "measure" and isinstance(e.left, TextLit):
            measure_side = (y, x)
        if measure_side is not None:
            return measure_matches(*measure_side) == (e.op == "=")
    return _holds(e.op, x, y)


class _Trace:
    def __init__(self, items):
        self.items = items  # [(global index, event)] of one source

    def eligible(self, after, after_ts):
        return [(i, ev) for i, ev in self.items if i > after and ev.ts_ms > after_ts]


def _completion(m) -> tuple:
    i = max(hit[0] for hit in m.values())
    return i, next(hit[1] for hit in m.values() if hit[0] == i)


def _matches(node, tr: _Trace, after, after_ts, act) -> list:
    if isinstance(node, FilterNode):
        for i, ev in tr.eligible(after, after_ts):
            if _satisfies(node, ev):
                return [{node.var: (i, ev)}]
        return []
    if isinstance(node, FollowedBy):
        out = []
        for m in _matches(node.left, tr, after, after_ts, act):
            c, cev = _completion(m)
            for r in _matches(node.right, tr, c, cev.ts_ms, cev.ts_ms):
                out.append({**m, **r})
        return out
    if isinstance(node, AndNode):
        rights = _matches(node.right, tr, after, after_ts, act)
        return [{**l, **r} for l in _matches(node.left, tr, after, after_ts, act) for r in rights]
    if isinstance(node, OrNode):
        return _matches(node.left, tr, after, after_ts, act) + _matches(node.right, tr, after, after_ts, act)
    if isinstance(node, WithinNode):
        limit = act + node.duration_ms
        return [m for m in _matches(node.child, tr, after, after_ts, act) if _completion(m)[1].ts_ms <= limit]
    out = []
    starters = _initial(node.child)
    for i, ev in tr.eligible(after, after_ts):
        for f in starters:
            if _satisfies(f, ev):
                out.extend(_pinned(node.child, f, i, ev, tr))
    return out


def _pinned(node, f, i, ev, tr: _Trace) -> list:
    if isinstance(node, FilterNode):
        return [{node.var: (i, ev)}]
    if isinstance(node, EveryNode):
        return _pinned(node.child, f, i, ev, tr)
    if isinstance(node, WithinNode):
        limit = ev.ts_ms + node.duration_ms
        return [m for m in _pinned(node.child, f, i, ev, tr) if _completion(m)[1].ts_ms <= limit]
    if isinstance(node, OrNode):
        side = node.left if f.var in _vars(node.left) else node.right
        return _pinned(side, f, i, ev, tr)
    if isinstance(node, FollowedBy):
        out = []
        for m in _pinned(node.left, f, i, ev, tr):
            c, cev = _completion(m)
            for r in _matches(node.right, tr, c, cev.ts_ms, cev.ts_ms):
                out.append({**m, **r})
        return out
    if f.var in _vars(node.left):
        pinned = _pinned(node.left, f, i, ev, tr)
        others = _matches(node.right, tr, i, -math.inf, ev.ts_ms)
        return [{**l, **r} for l in pinned for r in others]
    pinned = _pinned(node.right, f, i, ev, tr)
    others = _matches(node.left, tr, i, -math.inf, ev.ts_ms)
    return [{**l, **r} for l in others for r in pinned]


def _var_order(node) -> list:
    if isinstance(node, FilterNode):
        return [node.var]
    if isinstance(node, (EveryNode, WithinNode)):
        return _var_order(node.child)
    return _var_order(node.left) + _var_order(node.right)


def _keyed_matches(checked, trace, start_ms):
    ast = checked.ast
    order = _var_order(ast.expr)
    by_source: dict = {}
    for i, ev in enumerate(trace):
        by_source.setdefault(ev.source, []).append((i, ev))
    found = {}
    for items in by_source.values():
        for m in _matches(ast.expr, _Trace(items), -1, -math.inf, start_ms):
            c, cev = _completion(m)
            if ast.window_ms is not None and any(h[1].ts_ms < cev.ts_ms - ast.window_ms for h in m.values()):
                continue
            if ast.where is not None and not _truth(ast.where, m):
                continue
            key = tuple(m[v][0] if v in m else -1 for v in order)
            found[key] = (c, m)
    return order, found


def oracle_match(checked, trace, start_ms: int = 0) -> list:
    """All alerts ``checked`` raises on ``trace``, sorted by firing position."""
    trace = list(trace)
    if len(trace) > MAX_TRACE:
        raise OracleLimitError(f"oracle refuses traces longer than {MAX_TRACE} events")
    order, found = _keyed_matches(checked, trace, start_ms)
    ranked = sorted(found.items(), key=lambda kv: (kv[1][0], kv[0]))
    return [make_alert(checked.name, [(v, m[v][1]) for v in order if v in m]) for _, (_, m) in ranked]


def oracle_match_all(patterns, trace, start_ms: int = 0) -> list:
    """Alerts of several patterns merged in engine delivery order."""
    trace = list(trace)
    if len(trace) > MAX_TRACE:
        raise OracleLimitError(f"oracle refuses traces longer than {MAX_TRACE} events")
    rows = []
    for rank, checked in enumerate(patterns):
        order, found = _keyed_matches(checked, trace, start_ms)
        for key, (c, m) in found.items():
            rows.append(((c, rank, key), checked.name, [(v, m[v][1]) for v in order if v in m]))
    rows.sort(key=lambda r: r[0])
    return [make_alert(name, bindings) for _, name, bindings in rows]
