"""JSONL trace files: one event per line, ordered by timestamp."""

from __future__ import annotations

import json
import os
import re
from typing import IO, Iterable, Iterator, Mapping

from ..errors import EventError, TraceFormatError, UnknownMeasureError
from ..events import (
    COUNTER_MODULUS, STANDARD_MEASURES, Event, EventKind, MeasureKind, lookup_measure,
    make_measurement_event, make_signal_event,
)

_FIELDS_MEASUREMENT = {"ts_ms", "kind", "measure", "value", "source"}

# a measurement line exactly as event_to_json writes it, with escape-free strings
_CANONICAL = re.compile(
    r'\{"ts_ms":(-?(?:0|[1-9][0-9]*)),"kind":"measurement","measure":"([^"\\\x00-\x1f]*)",'
    r'"value":(-?(?:0|[1-9][0-9]*)),"source":"([^"\\\x00-\x1f]*)"\}')
_FIELDS_SIGNAL = {"ts_ms", "kind", "measure", "source"}


def event_to_json(ev: Event) -> str:
    obj = {"ts_ms": ev.ts_ms, "kind": ev.kind.value, "measure": ev.measure}
    if ev.kind is EventKind.MEASUREMENT:
        obj["value"] = ev.value
    obj["source"] = ev.source
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _int_field(obj, name, lineno):
    v = obj.get(name)
    if isinstance(v, bool) or not isinstance(v, int):
        raise TraceFormatError(f"{name!r} must be an integer", lineno)
    return v


def event_from_json(line: str, lineno: int | None = None,
                    registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> Event:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise TraceFormatError("expected a JSON object", lineno)
    kind = obj.get("kind")
    expected = {"measurement": _FIELDS_MEASUREMENT, "signal": _FIELDS_SIGNAL}.get(kind)
    if expected is None:
        raise TraceFormatError(f"unknown event kind {kind!r}", lineno)
    if set(obj) != expected:
        extra = sorted(set(obj) - expected)
        missing = sorted(expected - set(obj))
        raise TraceFormatError(f"bad fields for {kind} event (missing {missing}, unexpected {extra})", lineno)
    ts = _int_field(obj, "ts_ms", lineno)
    measure, source = obj["measure"], obj["source"]
    if not isinstance(measure, str) or not isinstance(source, str):
        raise TraceFormatError("'measure' and 'source' must be strings", lineno)
    try:
        if kind == "signal":
            return make_signal_event(ts, measure, source)
        return make_measurement_event(ts, measure, _int_field(obj, "value", lineno), source, registry)
    except UnknownMeasureError as exc:
        raise TraceFormatError(str(exc), lineno) from None
    except EventError as exc:
        raise TraceFormatError(str(exc), lineno) from None


def parse_trace_lines(lines: Iterable[str],
                      registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> Iterator[Event]:
    """Decode trace lines lazily, enforcing non-decreasing timestamps."""
    canonical = _CANONICAL.fullmatch
    counters: dict[str, bool] = {}  # measures already resolved in ``registry``
    measurement = EventKind.MEASUREMENT
    new_event = tuple.__new__  # skips the NamedTuple constructor's Python frame
    last = None
    for lineno, raw in enumerate(lines, 1):
        line = raw[:-1] if raw.endswith("\n") else raw
        if line.endswith("\r"):
            raise TraceFormatError("CRLF line ending", lineno)
        if not line:
            raise TraceFormatError("empty line", lineno)
        if lineno == 1 and line.startswith("\ufeff"):
            raise TraceFormatError("byte order mark is not allowed", lineno)
        ev = None
        # fast path for canonical measurement lines; anything else goes through
        # event_from_json, which also produces the error messages
        m = canonical(line)
        if m is not None:
            ts, measure, value, source = m.groups()
            ts, value = int(ts), int(value)
            is_counter = counters.get(measure)
            if is_counter is None:
                try:
                    is_counter = counters[measure] = lookup_measure(measure, registry).is_counter
                except UnknownMeasureError:
                    is_counter = None
            if is_counter is not None and (not is_counter or 0 <= value < COUNTER_MODULUS):
                ev = new_event(Event, (ts, measurement, measure, value, source))
        if ev is None:
            ev = event_from_json(line, lineno, registry)
        if last is not None and ev.ts_ms < last:
            raise TraceFormatError(f"timestamp regression {last} -> {ev.ts_ms}", lineno)
        last = ev.ts_ms
        yield ev


def iter_trace(path, registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> Iterator[Event]:
    with open(path, encoding="utf-8", newline="") as fh:
        yield from parse_trace_lines(fh, registry)


def read_trace(path, registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> list[Event]:
    """Load a whole trace file.

    >>> import tempfile, os
    >>> d = tempfile.mkdtemp()
    >>> p = os.path.join(d, "t.jsonl")
    >>> write_trace([make_signal_event(5, "SocketException", "gw")], p)
    >>> read_trace(p)[0].measure
    'SocketException'
    """
    return list(iter_trace(path, registry))


def dump_trace(events: Iterable[Event], fh: IO[str]) -> int:
    n = 0
    last = None
    for ev in events:
        if last is not None and ev.ts_ms < last:
            raise TraceFormatError(f"events out of order: {last} then {ev.ts_ms}")
        last = ev.ts_ms
        fh.write(event_to_json(ev))
        fh.write("\n")
        n += 1
    return n


def write_trace(events: Iterable[Event], path) -> None:
    """Write ``events`` atomically-ish: to a temp file, then rename."""
    events = list(events)
    tmp = f"{os.fspath(path)}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            dump_trace(events, fh)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
