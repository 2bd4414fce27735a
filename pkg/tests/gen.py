"""Seeded random traces and patterns for engine/oracle cross-checks."""

from __future__ import annotations

import random

from snmpcep.errors import PatternError
from snmpcep.events import make_measurement_event, make_signal_event
from snmpcep.lang.ast import (
    AndNode, Arith, BoolLit, BoolOp, Compare, EveryNode, FilterAtom, FilterNode,
    FollowedBy, IntLit, OrNode, PatternAst, Ref, TextLit, WithinNode,
)
from snmpcep.lang import validate

COUNTERS = ("icmpInEchos", "tcpEstabResets", "tcpRetransSegs")
GAUGES = ("hrProcessorLoad", "hrSystemProcesses")
SIGNALS = ("SocketException", "Timeout")


def random_trace(rng: random.Random, n: int | None = None, sources=("gw",)) -> list:
    """Mixed measures, random deltas (including 32-bit wraps), random signals."""
    n = rng.randint(0, 200) if n is None else n
    counters = {(s, m): rng.choice((rng.randint(0, 50), 2 ** 32 - rng.randint(1, 10)))
                for s in sources for m in COUNTERS}
    ts = rng.randint(0, 2000)
    out = []
    for _ in range(n):
        ts += rng.choice((0, 0, 100, 250, 500, 900, 1000, 1000, 1500, 3000))
        src = rng.choice(sources)
        r = rng.random()
        if r < 0.1:
            out.append(make_signal_event(ts, rng.choice(SIGNALS), src))
        elif r < 0.3:
            m = rng.choice(GAUGES)
            if m == "hrProcessorLoad" and rng.random() < 0.5:
                m += f".{rng.randint(1, 2)}"
            out.append(make_measurement_event(ts, m, rng.randint(0, 100), src))
        else:
            m = rng.choice(COUNTERS)
            v = (counters[(src, m)] + rng.choice((0, 1, 2, 3, 4, 5, 7, 40))) % 2 ** 32
            counters[(src, m)] = v
            out.append(make_measurement_event(ts, m, v, src))
    return out


def _filter(rng, var):
    r = rng.random()
    if r < 0.15:
        atoms = [FilterAtom("kind", None, "=", BoolLit(True))]
        if rng.random() < 0.7:
            atoms.append(FilterAtom("measure", None, "=", TextLit(rng.choice(SIGNALS))))
        return FilterNode(var, tuple(atoms)), None
    m = rng.choice(COUNTERS + GAUGES)
    atoms = [FilterAtom("measure", None, "=", TextLit(m))]
    if rng.random() < 0.2:
        atoms.append(FilterAtom("value", None, rng.choice((">", "<", "!=")), IntLit(rng.randint(0, 60))))
    if rng.random() < 0.1:
        atoms = [FilterAtom("kind", None, "=", BoolLit(False))]
        m = None
    return FilterNode(var, tuple(atoms)), m


def random_pattern(rng: random.Random, name="p", max_every: int = 2):
    # nested every nodes multiply match sets; cap them so both matchers stay fast
    counter = [0]
    everies = [0]
    measures = {}

    def fresh_filter():
        counter[0] += 1
        var = f"v{counter[0]}"
        node, m = _filter(rng, var)
        measures[var] = m
        return node

    def build(depth):
        if depth <= 0 or rng.random() < 0.3:
            node = fresh_filter()
        else:
            op = rng.choice((FollowedBy, FollowedBy, AndNode, OrNode))
            node = op(build(depth - 1), build(depth - 1))
        r = rng.random()
        if r < 0.25 and everies[0] < max_every - 1:
            everies[0] += 1
            node = EveryNode(node)
        elif r < 0.35:
            node = WithinNode(node, 1000 * rng.randint(1, 4))
        return node

    expr = build(rng.randint(1, 3))
    if rng.random() < 0.6:
        expr = EveryNode(expr)
    window = 1000 * rng.randint(1, 10) if rng.random() < 0.4 else None

    atoms = []
    vars_ = list(measures)
    for a in vars_:
        for b in vars_:
            if a < b and measures[a] and measures[a] == measures[b] and measures[a] in COUNTERS:
                later, earlier = (b, a) if rng.random() < 0.8 else (a, b)
                atoms.append(Compare(">", Arith("-", Ref(later, "value"), Ref(earlier, "value")),
                                     IntLit(rng.randint(0, 6))))
    for v in vars_:
        if rng.random() < 0.3:
            if measures[v] is None:
                if rng.random() < 0.5:
                    atoms.append(Compare(">", Ref(v, "value", rng.choice(GAUGES)), IntLit(rng.randint(0, 90))))
                else:
                    atoms.append(Compare("=", Ref(v, "measure"), TextLit(rng.choice(SIGNALS))))
            else:
                atoms.append(Compare(rng.choice((">", "<")), Ref(v, "value"), IntLit(rng.randint(0, 60))))
    rng.shuffle(atoms)
    where = None
    for atom in atoms[:4]:
        where = atom if where is None else BoolOp(rng.choice(("and", "or")), where, atom)
    if where is None and rng.random() < 0.1:
        where = BoolLit(True)
    try:
        return validate(PatternAst(name, expr, window, where))
    except PatternError:
        return None
