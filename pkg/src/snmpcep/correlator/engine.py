"""Incremental pattern-matching engine.

Each registered pattern gets a :class:`Listener`.  A listener compiles the
pattern tree into a plan and, per event source, keeps one live *instance*
tree mirroring it:

* a filter instance binds the first eligible event satisfying its predicate
  and then retires;
* a followed-by instance starts a fresh right-hand instance for every
  completion of its left side, eligible only for strictly later timestamps;
* an ``every`` instance spawns, for each event satisfying one of the child's
  initial filters, a child instance *anchored* on that event;
* ``and`` keeps the completions of both sides and pairs them; ``or`` passes
  either side through;
* ``timer:within`` and ``win:time`` become expiry times on instances, so an
  instance past its deadline is discarded before it sees the next event.

Completions reaching the root are checked against the sliding window, the
where-clause and the per-listener fingerprint set before an Alert is made.
"""

from __future__ import annotations

import logging
import math
import operator
from typing import Callable, Iterable, Optional

from ..errors import OutOfOrderError, RegistrationError
from ..events import COUNTER_MODULUS, Alert, Event, EventKind, make_alert, measure_matches
from ..lang.ast import (
    AndNode, Arith, BoolLit, BoolOp, Compare, EveryNode, FilterNode, FollowedBy,
    IntLit, OrNode, Ref, TextLit, WithinNode, iter_filters, max_within_ms,
)
from ..lang.checker import CheckedPattern

log = logging.getLogger(__name__)

INF = math.inf
NEG_INF = -math.inf
_NONE: list = []
_DEAD = object()

_CMP = {
    ">": operator.gt, "<": operator.lt, ">=": operator.ge,
    "<=": operator.le, "=": operator.eq, "!=": operator.ne,
}


_FLIP = {">": "<", "<": ">", ">=": "<=", "<=": ">=", "=": "=", "!=": "!="}


class _Unknown:
    __slots__ = ()

    def __repr__(self):
        return "UNKNOWN"


UNKNOWN = _Unknown()


# --------------------------------------------------------------------------
# compilation


def _matcher(name: str) -> Callable[[str], bool]:
    """Fast ``measure_matches(m, name)`` with the row prefix precomputed."""
    prefix = name + "."
    return lambda m: m == name or m.startswith(prefix)


def _compile_atom(atom):
    lit = atom.literal.value
    cmp = _CMP[atom.op]
    if atom.accessor == "value":
        name = atom.arg
        if name is None:
            return lambda ev: ev.value is not None and cmp(ev.value, lit)
        is_name = _matcher(name)
        return lambda ev: ev.value is not None and is_name(ev.measure) and cmp(ev.value, lit)
    if atom.accessor == "measure":
        is_lit = _matcher(lit)
        if atom.op == "=":
            return lambda ev: is_lit(ev.measure)
        if atom.op == "!=":
            return lambda ev: not is_lit(ev.measure)
        return lambda ev: cmp(ev.measure, lit)
    return lambda ev: cmp(ev.kind is EventKind.SIGNAL, lit)


def _compile_filter(node: FilterNode) -> Callable[[Event], bool]:
    tests = [_compile_atom(a) for a in node.atoms]
    if len(tests) == 1:
        return tests[0]
    if len(tests) == 2:
        t0, t1 = tests
        return lambda ev: t0(ev) and t1(ev)
    return lambda ev: all(t(ev) for t in tests)


def _compile_static(node: FilterNode) -> Callable[[str, EventKind], bool]:
    """Predicate over (measure, kind) only: value atoms are assumed satisfiable."""
    probes = []
    for atom in node.atoms:
        if atom.accessor == "value":
            if atom.arg is not None:
                arg = atom.arg
                probes.append(lambda m, k, arg=arg: k is EventKind.MEASUREMENT and measure_matches(m, arg))
            else:
                probes.append(lambda m, k: k is EventKind.MEASUREMENT)
            continue
        pred = _compile_atom(atom)
        probes.append(lambda m, k, pred=pred: pred(Event(0, k, m, None, "")))
    return lambda m, k: all(p(m, k) for p in probes)


def _compile_value(e):
    """Compile a where-clause term to ``f(bindings) -> value | UNKNOWN``."""
    if isinstance(e, (IntLit, TextLit, BoolLit)):
        v = e.value
        return lambda b: v
    if isinstance(e, Ref):
        var, arg = e.var, e.arg
        is_arg = _matcher(arg) if arg is not None else None
        if e.accessor == "value":
            def value(b):
                hit = b.get(var)
                if hit is None:
                    return UNKNOWN
                ev = hit[1]
                if ev.value is None or (is_arg is not None and not is_arg(ev.measure)):
                    return UNKNOWN
                return ev.value
            return value
        if e.accessor == "measure":
            def measure(b):
                hit = b.get(var)
                return UNKNOWN if hit is None else hit[1].measure
            return measure

        def kind(b):
            hit = b.get(var)
            return UNKNOWN if hit is None else hit[1].kind is EventKind.SIGNAL
        return kind
    if isinstance(e, Arith):
        left, right = _compile_value(e.left), _compile_value(e.right)
        if e.op == "+":
            def add(b):
                x, y = left(b), right(b)
                return UNKNOWN if x is UNKNOWN or y is UNKNOWN else x + y
            return add
        wraps = (isinstance(e.left, Ref) and isinstance(e.right, Ref)
                 and e.left.accessor == "value" and e.right.accessor == "value")
        lvar, rvar = (e.left.var, e.right.var) if wraps else (None, None)

        def sub(b):
            x, y = left(b), right(b)
            if x is UNKNOWN or y is UNKNOWN:
                return UNKNOWN
            # counter delta: a smaller later reading means one 32-bit wrap
            if wraps and x < y and b[lvar][1].ts_ms >= b[rvar][1].ts_ms:
                return x + COUNTER_MODULUS - y
            return x - y
        return sub
    return _compile_bool(e)


def _compile_bool(e):
    if isinstance(e, BoolOp):
        left, right = _compile_bool(e.left), _compile_bool(e.right)
        if e.op == "and":
            return lambda b: left(b) and right(b)
        return lambda b: left(b) or right(b)
    if isinstance(e, Compare):
        for side, other in ((e.left, e.right), (e.right, e.left)):
            if isinstance(side, Ref) and side.accessor == "measure" and isinstance(other, TextLit) \
                    and e.op in ("=", "!="):
                get, is_lit, negate = _compile_value(side), _matcher(other.value), e.op == "!="

                def measure_cmp(b):
                    m = get(b)
                    if m is UNKNOWN:
                        return False
                    return is_lit(m) != negate
                return measure_cmp
        left, right, cmp = _compile_value(e.left), _compile_value(e.right), _CMP[e.op]

        def compare(b):
            x, y = left(b), right(b)
            if x is UNKNOWN or y is UNKNOWN:
                return False
            return cmp(x, y)
        return compare
    if isinstance(e, BoolLit):
        v = e.value
        return lambda b: v
    raise TypeError(f"not a boolean expression: {e!r}")


def _ref_vars(e) -> frozenset:
    if isinstance(e, Ref):
        return frozenset((e.var,))
    if isinstance(e, (Arith, Compare, BoolOp)):
        return _ref_vars(e.left) | _ref_vars(e.right)
    return frozenset()


def _compile_viable(where, possible: frozenset):
    """Three-valued test of a partial binding: False once no extension can pass.

    Variables outside ``possible`` will never be bound alongside the partial,
    so comparisons over them are already false; comparisons waiting on a
    variable in ``possible`` stay undecided (None).
    """
    def build(e):
        if isinstance(e, BoolOp):
            left, right = build(e.left), build(e.right)
            if e.op == "and":
                def both(b):
                    x = left(b)
                    if x is False:
                        return False
                    y = right(b)
                    if y is False:
                        return False
                    return True if x and y else None
                return both

            def either(b):
                x = left(b)
                if x is True:
                    return True
                y = right(b)
                if y is True:
                    return True
                return False if x is False and y is False else None
            return either
        if isinstance(e, BoolLit):
            v = e.value
            return lambda b: v
        needs = _ref_vars(e)
        if not needs <= possible:
            return lambda b: False
        full = _compile_bool(e)

        def atom(b):
            for v in needs:
                if v not in b:
                    return None
            return full(b)
        return atom

    test = build(where)
    return lambda b: test(b) is not False


def _compile_event_test(where, var: str, possible: frozenset):
    """Three-valued clause test with only ``var`` bound, as ``f(event)``."""
    if isinstance(where, BoolOp):
        left = _compile_event_test(where.left, var, possible)
        right = _compile_event_test(where.right, var, possible)
        if where.op == "and":
            def both(ev):
                x = left(ev)
                if x is False:
                    return False
                y = right(ev)
                if y is False:
                    return False
                return True if x and y else None
            return both

        def either(ev):
            x = left(ev)
            if x is True:
                return True
            y = right(ev)
            if y is True:
                return True
            return False if x is False and y is False else None
        return either
    if isinstance(where, BoolLit):
        v = where.value
        return lambda ev: v
    needs = _ref_vars(where)
    if not needs <= possible:
        return lambda ev: False
    if needs != {var}:
        return lambda ev: None
    if isinstance(where, Compare) and where.op in _CMP:
        ref, lit, op = where.left, where.right, where.op
        if isinstance(lit, Ref):
            ref, lit, op = lit, ref, _FLIP[op]
        if isinstance(ref, Ref) and ref.accessor == "value" and isinstance(lit, IntLit):
            cmp, k = _CMP[op], lit.value
            if ref.arg is None:
                return lambda ev: ev.value is not None and cmp(ev.value, k)
            is_arg = _matcher(ref.arg)
            return lambda ev: ev.value is not None and is_arg(ev.measure) and cmp(ev.value, k)
    full = _compile_bool(where)
    return lambda ev: full({var: (0, ev)})


def _spawn_hint(where, var: str) -> Optional[tuple[str, ...]]:
    """Measures ``var`` must bind for the where-clause to possibly hold.

    Returns None when no such restriction can be derived.  Relies on the
    clause being monotone (only and/or over comparisons): if the clause is
    false whenever every comparison touching ``var`` is false, an anchoring
    event outside the returned measures can never produce an alert.
    """
    if where is None:
        return None

    def mentions(e) -> bool:
        if isinstance(e, Ref):
            return e.var == var
        if isinstance(e, (Arith, Compare, BoolOp)):
            return mentions(e.left) or mentions(e.right)
        return False

    def upper(e) -> bool:
        if isinstance(e, BoolOp):
            l, r = upper(e.left), upper(e.right)
            return (l and r) if e.op == "and" else (l or r)
        if isinstance(e, Compare):
            return not mentions(e)
        return True

    if upper(where):
        return None
    allowed: set[str] = set()

    def requirement(cmp: Compare) -> Optional[set]:
        reqs = set()
        for side, other in ((cmp.left, cmp.right), (cmp.right, cmp.left)):
            if isinstance(side, Ref) and side.var == var and side.accessor == "measure" \
                    and cmp.op == "=" and isinstance(other, TextLit):
                return {other.value}
        stack = [cmp]
        while stack:
            e = stack.pop()
            if isinstance(e, Ref) and e.var == var:
                if e.accessor == "value" and e.arg is not None:
                    reqs.add(e.arg)
                else:
                    return None
            elif isinstance(e, (Arith, Compare, BoolOp)):
                stack.extend((e.left, e.right))
        return reqs

    stack = [where]
    while stack:
        e = stack.pop()
        if isinstance(e, BoolOp):
            stack.extend((e.left, e.right))
        elif isinstance(e, Compare) and mentions(e):
            req = requirement(e)
            if req is None:
                return None
            allowed |= req
    return tuple(sorted(allowed))


class _Plan:
    __slots__ = ("kind", "node", "var", "pred", "static", "left", "right", "child",
                 "duration", "vars", "initial", "spawn", "_fresh", "_rel", "viable", "pair")

    def __init__(self, node, where):
        self.node = node
        self._rel = {}
        self.viable = None
        self.pair = None
        self.left = self.right = self.child = None
        self.var = None
        if isinstance(node, FilterNode):
            self.kind = "filter"
            self.var = node.var
            self.pred = _compile_filter(node)
            self.static = _compile_static(node)
            self.vars = frozenset((node.var,))
            self.initial = (self,)
        elif isinstance(node, (EveryNode, WithinNode)):
            self.kind = "every" if isinstance(node, EveryNode) else "within"
            self.child = _Plan(node.child, where)
            self.vars = self.child.vars
            self.initial = self.child.initial
            self.duration = getattr(node, "duration_ms", None)
        else:
            self.kind = {FollowedBy: "follow", AndNode: "and", OrNode: "or"}[type(node)]
            self.left = _Plan(node.left, where)
            self.right = _Plan(node.right, where)
            self.vars = self.left.vars | self.right.vars
            if self.kind == "follow":
                self.initial = self.left.initial
            else:
                self.initial = self.left.initial + self.right.initial
        if self.kind == "every":
            spawn = []
            for f in self.initial:
                hint = _spawn_hint(where, f.var)
                if hint is None:
                    spawn.append((f, f.pred))
                elif len(hint) == 1:
                    spawn.append((f, lambda ev, base=f.pred, h=_matcher(hint[0]): base(ev) and h(ev.measure)))
                else:
                    hints = tuple(_matcher(h) for h in hint)
                    spawn.append((f, lambda ev, base=f.pred, hints=hints:
                                  base(ev) and any(h(ev.measure) for h in hints)))
            self.spawn = tuple(spawn)
            # every [within] (F1 -> F2): pending matches fit in flat tuples
            inner = self.child.child if self.child.kind == "within" else self.child
            if inner.kind == "follow" and inner.left.kind == "filter" and inner.right.kind == "filter":
                duration = self.child.duration if self.child.kind == "within" else None
                self.pair = (inner, inner.right, duration)

    def wants(self, ev) -> bool:
        """Could any filter below this node bind ``ev``?  Cached per (measure, kind)."""
        key = (ev.measure, ev.kind)
        hit = self._rel.get(key)
        if hit is None:
            hit = self._rel[key] = any(f.static(ev.measure, ev.kind) for f in _filters(self))
        return hit


# --------------------------------------------------------------------------
# runtime instances


class _FilterInst:
    __slots__ = ("plan", "after_seq", "after_ts", "expires_at", "dead")

    def __init__(self, plan, after_seq, after_ts, expires_at):
        self.plan = plan
        self.after_seq = after_seq
        self.after_ts = after_ts
        self.expires_at = expires_at
        self.dead = False

    def feed(self, seq, ev):
        if ev.ts_ms <= self.after_ts or seq <= self.after_seq:
            return _NONE
        if self.plan.pred(ev):
            self.dead = True
            return [{self.plan.var: (seq, ev)}]
        return _NONE

    def prune(self, now):
        return not self.dead and self.expires_at >= now

    def partials(self):
        return 0


class _FollowInst:
    __slots__ = ("plan", "left", "rights", "floor", "window", "expires_at", "dead")

    def __init__(self, plan, left, floor, window, expires_at):
        self.plan = plan
        self.left = left
        self.rights = []
        self.floor = floor
        self.window = window
        self.expires_at = expires_at
        self.dead = left is None

    def start_right(self, m, seq, ts):
        viable = self.plan.viable
        if viable is not None and not viable(m):
            return
        floor = min(self.floor, min(hit[1].ts_ms for hit in m.values()))
        expires = self.expires_at if self.window is None else min(self.expires_at, floor + self.window)
        inst = _fresh(self.plan.right, seq, ts, ts, floor, self.window, expires)
        self.rights.append((m, inst))
        self.dead = False

    def feed(self, seq, ev):
        ts = ev.ts_ms
        out = _NONE
        if self.rights and self.plan.right.wants(ev):
            keep = []
            for b, r in self.rights:
                if r.expires_at < ts:
                    continue
                res = r.feed(seq, ev)
                if res:
                    if out is _NONE:
                        out = []
                    for m in res:
                        merged = dict(b)
                        merged.update(m)
                        out.append(merged)
                if not r.dead:
                    keep.append((b, r))
            self.rights = keep
        left = self.left
        if left is not None:
            if left.expires_at < ts:
                self.left = None
            else:
                res = left.feed(seq, ev)
                for m in res:
                    self.start_right(m, seq, ts)
                if left.dead:
                    self.left = None
        self.dead = self.left is None and not self.rights
        return out

    def prune(self, now):
        if self.left is not None and not self.left.prune(now):
            self.left = None
        self.rights = [(b, r) for b, r in self.rights if r.prune(now)]
        self.dead = self.left is None and not self.rights
        return not self.dead and self.expires_at >= now

    def partials(self):
        n = len(self.rights) + sum(r.partials() for _, r in self.rights)
        return n + (self.left.partials() if self.left is not None else 0)


class _AndInst:
    __slots__ = ("plan", "left", "right", "lstore", "rstore", "window", "expires_at", "dead")

    def __init__(self, plan, left, right, window, expires_at, lstore=None):
        self.plan = plan
        self.left = left
        self.right = right
        self.lstore = lstore or []
        self.rstore = []
        self.window = window
        self.expires_at = expires_at
        self.dead = False
        self._update_dead()

    def _update_dead(self):
        lgone = self.left is None
        rgone = self.right is None
        self.dead = (lgone and rgone) or (lgone and not self.lstore) or (rgone and not self.rstore)

    def _drop_stale(self, now):
        w = self.window
        if w is not None:
            if self.lstore:
                self.lstore = [x for x in self.lstore if x[0] + w >= now]
            if self.rstore:
                self.rstore = [x for x in self.rstore if x[0] + w >= now]

    def feed(self, seq, ev):
        ts = ev.ts_ms
        nl = nr = _NONE
        if self.left is not None:
            if self.left.expires_at < ts:
                self.left = None
            else:
                nl = self.left.feed(seq, ev)
                if self.left.dead:
                    self.left = None
        if self.right is not None:
            if self.right.expires_at < ts:
                self.right = None
            else:
                nr = self.right.feed(seq, ev)
                if self.right.dead:
                    self.right = None
        out = _NONE
        viable = self.plan.viable
        if viable is not None:
            if nl:
                nl = [m for m in nl if viable(m)]
            if nr:
                nr = [m for m in nr if viable(m)]
        if nl or nr:
            self._drop_stale(ts)
            out = []
            nl = [(min(h[1].ts_ms for h in m.values()), m) for m in nl]
            nr = [(min(h[1].ts_ms for h in m.values()), m) for m in nr]
            for _, l in nl:
                for _, r in self.rstore:
                    out.append({**l, **r})
                for _, r in nr:
                    out.append({**l, **r})
            for _, l in self.lstore:
                for _, r in nr:
                    out.append({**l, **r})
            self.lstore.extend(nl)
            self.rstore.extend(nr)
        self._update_dead()
        return out

    def prune(self, now):
        if self.left is not None and not self.left.prune(now):
            self.left = None
        if self.right is not None and not self.right.prune(now):
            self.right = None
        self._drop_stale(now)
        self._update_dead()
        return not self.dead and self.expires_at >= now

    def partials(self):
        n = len(self.lstore) + len(self.rstore)
        for side in (self.left, self.right):
            if side is not None:
                n += side.partials()
        return n


class _OrInst:
    __slots__ = ("left", "right", "expires_at", "dead")

    def __init__(self, left, right, expires_at):
        self.left = left
        self.right = right
        self.expires_at = expires_at
        self.dead = False

    def feed(self, seq, ev):
        ts = ev.ts_ms
        out = _NONE
        for attr in ("left", "right"):
            side = getattr(self, attr)
            if side is None:
                continue
            if side.expires_at < ts:
                setattr(self, attr, None)
                continue
            res = side.feed(seq, ev)
            if res:
                out = res if out is _NONE else out + res
            if side.dead:
                setattr(self, attr, None)
        self.dead = self.left is None and self.right is None
        return out

    def prune(self, now):
        if self.left is not None and not self.left.prune(now):
            self.left = None
        if self.right is not None and not self.right.prune(now):
            self.right = None
        self.dead = self.left is None and self.right is None
        return not self.dead and self.expires_at >= now

    def partials(self):
        return sum(s.partials() for s in (self.left, self.right) if s is not None)


class _EveryInst:
    __slots__ = ("plan", "after_seq", "after_ts", "floor", "window", "expires_at", "children", "dead")

    def __init__(self, plan, after_seq, after_ts, floor, window, expires_at):
        self.plan = plan
        self.after_seq = after_seq
        self.after_ts = after_ts
        self.floor = floor
        self.window = window
        self.expires_at = expires_at
        self.children = []
        self.dead = False

    def _feed_pair(self, seq, ev, pair):
        """Same semantics as the general path, for ``every [within] (F1 -> F2)``.

        Each pending entry is (left binding, left seq, left ts, deadline).
        """
        follow, right, duration = pair
        ts = ev.ts_ms
        out = _NONE
        pending = self.children
        if pending and right.wants(ev):
            keep = []
            pred = right.pred
            hit = None
            for entry in pending:
                if entry[3] < ts:
                    continue
                if ts > entry[2] and seq > entry[1]:
                    if hit is None:
                        hit = pred(ev)
                    if hit:
                        # first match consumes the entry even if the clause rejects it
                        merged = dict(entry[0])
                        merged[right.var] = (seq, ev)
                        if follow.viable is None or follow.viable(merged):
                            if out is _NONE:
                                out = []
                            out.append(merged)
                        continue
                keep.append(entry)
            self.children = keep
        if ts > self.after_ts and seq > self.after_seq:
            for f, pred in self.plan.spawn:
                if not pred(ev):
                    continue
                floor, expires, window = self.floor, self.expires_at, self.window
                if ts < floor:
                    floor = ts
                    if window is not None:
                        expires = min(expires, floor + window)
                if duration is not None:
                    expires = min(expires, ts + duration)
                m = {f.var: (seq, ev)}
                viable = follow.viable
                if viable is not None and not viable(m):
                    continue
                if window is not None:
                    expires = min(expires, floor + window)
                self.children.append((m, seq, ts, expires))
        return out

    def feed(self, seq, ev):
        pair = self.plan.pair
        if pair is not None:
            return self._feed_pair(seq, ev, pair)
        ts = ev.ts_ms
        out = _NONE
        if self.children and self.plan.child.wants(ev):
            keep = []
            for child in self.children:
                if child.expires_at < ts:
                    continue
                res = child.feed(seq, ev)
                if res:
                    out = res if out is _NONE else out + res
                if not child.dead:
                    keep.append(child)
            self.children = keep
        if ts > self.after_ts and seq > self.after_seq:
            plan = self.plan
            if plan.child.kind == "filter":
                # every over a single filter: each hit completes on the spot
                f, pred = plan.spawn[0]
                if pred(ev):
                    m = [{f.var: (seq, ev)}]
                    return m if out is _NONE else out + m
                return out
            for f, pred in plan.spawn:
                if pred(ev):
                    inst, imm = _anchor(self.plan.child, f, seq, ev, self.floor, self.window, self.expires_at)
                    if imm:
                        out = imm if out is _NONE else out + imm
                    if inst is not None and not inst.dead:
                        self.children.append(inst)
        return out

    def prune(self, now):
        if self.plan.pair is not None:
            self.children = [c for c in self.children if c[3] >= now]
        else:
            self.children = [c for c in self.children if c.prune(now)]
        return self.expires_at >= now

    def partials(self):
        if self.plan.pair is not None:
            return len(self.children)
        return len(self.children) + sum(c.partials() for c in self.children)


def _fresh(plan, after_seq, after_ts, act_ts, floor, window, expires):
    kind = plan.kind
    if kind == "filter":
        return _FilterInst(plan, after_seq, after_ts, expires)
    if kind == "within":
        return _fresh(plan.child, after_seq, after_ts, act_ts, floor, window,
                      min(expires, act_ts + plan.duration))
    if kind == "every":
        return _EveryInst(plan, after_seq, after_ts, floor, window, expires)
    if kind == "follow":
        left = _fresh(plan.left, after_seq, after_ts, act_ts, floor, window, expires)
        return _FollowInst(plan, left, floor, window, expires)
    left = _fresh(plan.left, after_seq, after_ts, act_ts, floor, window, expires)
    right = _fresh(plan.right, after_seq, after_ts, act_ts, floor, window, expires)
    if kind == "and":
        return _AndInst(plan, left, right, window, expires)
    return _OrInst(left, right, expires)


def _anchor(plan, f, seq, ev, floor, window, expires):
    """Instantiate ``plan`` with filter ``f`` already bound to ``ev``.

    Returns ``(instance or None, completions produced by the anchor itself)``.
    """
    ts = ev.ts_ms
    if ts < floor:
        floor = ts
        if window is not None:
            expires = min(expires, floor + window)
    kind = plan.kind
    if kind == "filter":
        return None, [{plan.var: (seq, ev)}]
    if kind == "every":
        return _anchor(plan.child, f, seq, ev, floor, window, expires)
    if kind == "within":
        return _anchor(plan.child, f, seq, ev, floor, window, min(expires, ts + plan.duration))
    if kind == "or":
        side = plan.left if f.var in plan.left.vars else plan.right
        return _anchor(side, f, seq, ev, floor, window, expires)
    if kind == "follow":
        left, imm = _anchor(plan.left, f, seq, ev, floor, window, expires)
        inst = _FollowInst(plan, left if left is not None and not left.dead else None,
                           floor, window, expires)
        for m in imm:
            inst.start_right(m, seq, ts)
        return inst, _NONE
    # and: the anchored side starts bound, the other side only sees later events
    if f.var in plan.left.vars:
        left, imm = _anchor(plan.left, f, seq, ev, floor, window, expires)
        right = _fresh(plan.right, seq, NEG_INF, ts, floor, window, expires)
        if plan.viable is not None:
            imm = [m for m in imm if plan.viable(m)]
        inst = _AndInst(plan, left if left is not None and not left.dead else None, right, window, expires,
                        lstore=[(ts, m) for m in imm])
        return inst, _NONE
    right, imm = _anchor(plan.right, f, seq, ev, floor, window, expires)
    left = _fresh(plan.left, seq, NEG_INF, ts, floor, window, expires)
    if plan.viable is not None:
        imm = [m for m in imm if plan.viable(m)]
    inst = _AndInst(plan, left, right if right is not None and not right.dead else None, window, expires)
    inst.rstore = [(ts, m) for m in imm]
    inst._update_dead()
    return inst, _NONE


def _mark_fresh(plan, fresh: bool, anchor=None):
    """Record on each filter plan whether it can ever run un-anchored."""
    kind = plan.kind
    if kind == "filter":
        if fresh or (anchor is not None and anchor is not plan):
            plan._fresh = True
        return
    if kind == "every":
        for f in plan.initial:
            _mark_fresh(plan.child, False, f)
        return
    if kind == "within":
        _mark_fresh(plan.child, fresh, anchor)
        return
    if anchor is None:
        _mark_fresh(plan.left, fresh)
        _mark_fresh(plan.right, fresh)
        return
    in_left = anchor.var in plan.left.vars
    if kind == "or":
        _mark_fresh(plan.left if in_left else plan.right, False, anchor)
    elif kind == "follow":
        _mark_fresh(plan.left, False, anchor)
        _mark_fresh(plan.right, True)
    else:
        _mark_fresh(plan.left, not in_left, anchor if in_left else None)
        _mark_fresh(plan.right, in_left, None if in_left else anchor)


def _mark_viable(plan, where, possible: frozenset):
    """Attach early-rejection tests to the nodes that hold partial matches."""
    kind = plan.kind
    if kind in ("follow", "and"):
        plan.viable = _compile_viable(where, possible)
    elif kind == "every" and plan.child.kind == "filter":
        # the anchor is the whole match: test the clause before spawning
        f, pred = plan.spawn[0]
        test = _compile_event_test(where, f.var, possible)
        plan.spawn = ((f, lambda ev, pred=pred: pred(ev) and test(ev) is not False),)
    if plan.child is not None:
        _mark_viable(plan.child, where, possible)
    elif plan.left is not None:
        if kind == "or":
            # the two sides of an or never bind together
            _mark_viable(plan.left, where, possible - plan.right.vars)
            _mark_viable(plan.right, where, possible - plan.left.vars)
        else:
            _mark_viable(plan.left, where, possible)
            _mark_viable(plan.right, where, possible)


def _filters(plan):
    if plan.kind == "filter":
        yield plan
    elif plan.child is not None:
        yield from _filters(plan.child)
    else:
        yield from _filters(plan.left)
        yield from _filters(plan.right)


# --------------------------------------------------------------------------
# listeners and engine


class Listener:
    """Evaluates one checked pattern over the event stream, per source."""

    def __init__(self, checked: CheckedPattern, listener_id: int, start_ms: int):
        ast = checked.ast
        self.id = listener_id
        self.checked = checked
        self.name = ast.name
        self.window = ast.window_ms
        self.start_ms = start_ms
        self.var_order = tuple(f.var for f in iter_filters(ast.expr))
        self.where = _compile_bool(ast.where) if ast.where is not None else None
        self.plan = self._build_plan(ast)
        self.horizon = max(self.window or 0, max_within_ms(ast.expr))
        self.states: dict = {}
        self.fired: dict = {}
        self._last_fp_prune = NEG_INF
        self._fp_every = max(self.horizon, 1000)
        # every over one filter: each match is a single event, whose stream
        # position is unique, so no state or dedup is needed
        plan = self.plan
        self._single = plan.spawn[0] if plan.kind == "every" and plan.child.kind == "filter" else None

    def _build_plan(self, ast):
        plan = _Plan(ast.expr, ast.where)
        for f in _filters(plan):
            f._fresh = False
        _mark_fresh(plan, True)
        if ast.where is not None:
            _mark_viable(plan, ast.where, plan.vars)
        probes = [f.static for f in _filters(plan) if f._fresh]
        probes.extend(self._spawn_probes(plan))
        self._probes = tuple(probes)
        return plan

    def _spawn_probes(self, plan):
        if plan.kind == "every":
            for f, _ in plan.spawn:
                hint = _spawn_hint(self.checked.ast.where, f.var)
                if hint is None:
                    yield f.static
                else:
                    yield (lambda m, k, s=f.static, h=hint:
                           s(m, k) and any(measure_matches(m, x) for x in h))
        for sub in (plan.child, plan.left, plan.right):
            if sub is not None:
                yield from self._spawn_probes(sub)

    def relevant(self, measure: str, kind: EventKind) -> bool:
        """Could an event with this measure and kind bind any variable usefully?"""
        return any(p(measure, kind) for p in self._probes)

    def _root(self, source):
        root = self.states.get(source)
        if root is None:
            root = _fresh(self.plan, -1, NEG_INF, self.start_ms, INF, self.window, INF)
            self.states[source] = root
        return root

    def feed(self, seq: int, ev: Event) -> list[Alert]:
        single = self._single
        if single is not None:
            f, pred = single
            if not pred(ev):
                return _NONE
            b = {f.var: (seq, ev)}
            if self.where is not None and not self.where(b):
                return _NONE
            return [make_alert(self.name, ((f.var, ev),))]
        root = self.states.get(ev.source)
        if root is None:
            root = self._root(ev.source)
        elif root is _DEAD:
            return _NONE
        ts = ev.ts_ms
        if root.expires_at < ts:
            self.states[ev.source] = _DEAD
            return _NONE
        completions = root.feed(seq, ev)
        if root.dead:
            self.states[ev.source] = _DEAD
        if not completions:
            return _NONE
        return self._finish(completions, ts)

    def _finish(self, completions, ts):
        order = self.var_order
        w = self.window
        if len(completions) == 1:
            b = completions[0]
            if w is not None and any(hit[1].ts_ms < ts - w for hit in b.values()):
                return _NONE
            if self.where is not None and not self.where(b):
                return _NONE
            key = tuple(b[v][0] if v in b else -1 for v in order)
            if key in self.fired:
                return _NONE
            self.fired[key] = ts
            if ts - self._last_fp_prune >= self._fp_every:
                self._prune_fired(ts)
            return [make_alert(self.name, [(v, b[v][1]) for v in order if v in b])]
        keyed = {}
        for b in completions:
            if w is not None and any(hit[1].ts_ms < ts - w for hit in b.values()):
                continue
            key = tuple(b[v][0] if v in b else -1 for v in order)
            if key in keyed or key in self.fired:
                continue
            keyed[key] = b
        alerts = []
        for key in sorted(keyed):
            b = keyed[key]
            if self.where is not None and not self.where(b):
                continue
            self.fired[key] = ts
            alerts.append(make_alert(self.name, [(v, b[v][1]) for v in order if v in b]))
        self._prune_fired(ts)
        return alerts

    def _prune_fired(self, now):
        if now - self._last_fp_prune < self._fp_every:
            return
        self._last_fp_prune = now
        cutoff = now - 2 * self.horizon
        if self.fired:
            self.fired = {k: t for k, t in self.fired.items() if t >= cutoff}

    def prune(self, now: int) -> None:
        for source, root in list(self.states.items()):
            if root is _DEAD:
                continue
            if not root.prune(now):
                self.states[source] = _DEAD
        self._prune_fired(now)

    def partial_count(self) -> int:
        return sum(r.partials() for r in self.states.values() if r is not _DEAD)


class Engine:
    """Single-threaded correlator over an in-order event stream.

    >>> from snmpcep.lang import parse_pattern, validate
    >>> from snmpcep.events import make_measurement_event
    >>> eng = Engine()
    >>> _ = eng.register_pattern(validate(parse_pattern("cpu",
    ...     "select * from pattern [every e=Event(e.getMeasure()='hrProcessorLoad')]"
    ...     " where e.getSNMPvalue() > 90")))
    >>> [a.pattern_name for a in eng.on_event(make_measurement_event(5, "hrProcessorLoad", 95, "gw"))]
    ['cpu']
    """

    def __init__(self, start_ms: int = 0):
        self.now_ms = start_ms
        self._listeners: dict[int, Listener] = {}
        self._names: dict[str, int] = {}
        self._next_id = 1
        self._seq = 0
        self._routes: dict = {}

    def register_pattern(self, checked: CheckedPattern) -> int:
        if not isinstance(checked, CheckedPattern):
            raise RegistrationError("register_pattern needs a validated pattern")
        if checked.name in self._names:
            raise RegistrationError(f"pattern {checked.name!r} is already registered")
        lid = self._next_id
        self._next_id += 1
        self._listeners[lid] = Listener(checked, lid, self.now_ms)
        self._names[checked.name] = lid
        self._routes.clear()
        log.debug("registered pattern %r as listener %d", checked.name, lid)
        return lid

    def deregister(self, listener_id: int) -> None:
        listener = self._listeners.pop(listener_id)
        del self._names[listener.name]
        self._routes.clear()

    @property
    def listeners(self) -> list[Listener]:
        return list(self._listeners.values())

    def _route(self, ev: Event):
        key = (ev.measure, ev.kind)
        targets = self._routes.get(key)
        if targets is None:
            targets = tuple(l for l in self._listeners.values() if l.relevant(ev.measure, ev.kind))
            self._routes[key] = targets
        return targets

    def on_event(self, ev: Event) -> list[Alert]:
        """Deliver one event; returns the alerts it completes.

        Alerts are ordered by listener registration, then by the bound
        events' stream positions in variable order.
        """
        if ev.ts_ms < self.now_ms:
            raise OutOfOrderError(self.now_ms, ev.ts_ms)
        self.now_ms = ev.ts_ms
        seq = self._seq
        self._seq += 1
        alerts = _NONE
        for listener in self._route(ev):
            fired = listener.feed(seq, ev)
            if fired:
                alerts = fired if alerts is _NONE else alerts + fired
        return alerts if alerts is not _NONE else []

    def advance_time(self, t_ms: int) -> list[Alert]:
        """Move the clock forward without an event, expiring stale partials."""
        if t_ms < self.now_ms:
            raise OutOfOrderError(self.now_ms, t_ms)
        self.now_ms = t_ms
        for listener in self._listeners.values():
            listener.prune(t_ms)
        return []

    def partial_count(self) -> int:
        return sum(l.partial_count() for l in self._listeners.values())

    def run(self, events: Iterable[Event]) -> list[Alert]:
        out: list[Alert] = []
        for ev in events:
            out.extend(self.on_event(ev))
        return out
