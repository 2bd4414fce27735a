"""Event vocabulary: stream elements, measure registry and alerts."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional

from .errors import EventError, UnknownMeasureError

COUNTER_MODULUS = 2 ** 32


class EventKind(str, Enum):
    MEASUREMENT = "measurement"
    SIGNAL = "signal"


class Semantics(str, Enum):
    COUNTER = "counter"   # monotone, wraps at 2**32
    GAUGE = "gauge"


@dataclass(frozen=True)
class MeasureKind:
    name: str
    semantics: Semantics

    @property
    def is_counter(self) -> bool:
        return self.semantics is Semantics.COUNTER


STANDARD_MEASURES: Mapping[str, MeasureKind] = MappingProxyType({
    m.name: m for m in (
        MeasureKind("hrProcessorLoad", Semantics.GAUGE),
        MeasureKind("hrStorageUsed", Semantics.GAUGE),
        MeasureKind("hrSystemProcesses", Semantics.GAUGE),
        MeasureKind("icmpInEchos", Semantics.COUNTER),
        MeasureKind("tcpEstabResets", Semantics.COUNTER),
        MeasureKind("tcpRetransSegs", Semantics.COUNTER),
    )
})


def base_measure(measure: str) -> str:
    """Strip a table row suffix: ``hrProcessorLoad.3`` -> ``hrProcessorLoad``."""
    return measure.split(".", 1)[0]


def measure_matches(measure: str, name: str) -> bool:
    """True if ``measure`` is ``name`` itself or one of its table rows."""
    if measure == name:
        return True
    return measure.startswith(name) and measure[len(name):len(name) + 1] == "."


def lookup_measure(measure: str, registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> MeasureKind:
    try:
        return registry[base_measure(measure)]
    except KeyError:
        raise UnknownMeasureError(measure) from None


class Event(NamedTuple):
    """One timestamped observation.

    Measurements carry an integer SNMP reading in ``value``; application
    signals (e.g. ``SocketException``) have ``value=None``.  Build events
    through :func:`make_measurement_event` / :func:`make_signal_event` to get
    validation; the tuple itself is immutable.
    """

    ts_ms: int
    kind: EventKind
    measure: str
    value: Optional[int]
    source: str

    @property
    def is_signal(self) -> bool:
        return self.kind is EventKind.SIGNAL


def make_measurement_event(ts_ms: int, measure: str, value: int, source: str,
                           registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> Event:
    if not measure:
        raise EventError("measure name must be non-empty")
    kind = lookup_measure(measure, registry)
    if isinstance(value, bool) or not isinstance(value, int):
        raise EventError(f"measurement value must be an integer, got {value!r}")
    if kind.is_counter and not 0 <= value < COUNTER_MODULUS:
        raise EventError(f"counter {measure!r} value {value} outside 0..2**32-1")
    return Event(int(ts_ms), EventKind.MEASUREMENT, measure, value, source)


def make_signal_event(ts_ms: int, signal: str, source: str) -> Event:
    if not signal:
        raise EventError("signal name must be non-empty")
    return Event(int(ts_ms), EventKind.SIGNAL, signal, None, source)


def counter_delta(earlier: Event, later: Event,
                  registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> int:
    """Increase of a 32-bit counter between two samples, tolerating one wrap."""
    if earlier.is_signal or later.is_signal:
        raise EventError("counter_delta needs two measurement events")
    if earlier.measure != later.measure:
        raise EventError(f"mismatched measures {earlier.measure!r} and {later.measure!r}")
    if not lookup_measure(earlier.measure, registry).is_counter:
        raise EventError(f"{earlier.measure!r} is a gauge, not a counter")
    if earlier.ts_ms > later.ts_ms:
        raise EventError("earlier sample is newer than later sample")
    return wrapped_delta(earlier.value, later.value)


def wrapped_delta(earlier: int, later: int) -> int:
    if later < earlier:
        return later + COUNTER_MODULUS - earlier
    return later - earlier


@dataclass(frozen=True)
class Alert:
    pattern_name: str
    fired_at_ms: int
    bindings: tuple[tuple[str, Event], ...]
    description: str

    def to_json_dict(self) -> dict:
        return {
            "ts_ms": self.fired_at_ms,
            "pattern": self.pattern_name,
            "bindings": [
                {"var": var, "measure": ev.measure, "value": ev.value, "ts_ms": ev.ts_ms}
                for var, ev in self.bindings
            ],
            "description": self.description,
        }


def describe(pattern_name: str, bindings) -> str:
    """Operator-facing one-line summary of a match."""
    parts = []
    sources = []
    for var, ev in bindings:
        if ev.source not in sources:
            sources.append(ev.source)
        if ev.value is None:
            parts.append(f"{var} {ev.measure} @{ev.ts_ms}")
        else:
            parts.append(f"{var} {ev.measure}={ev.value} @{ev.ts_ms}")
    return f"{pattern_name} at {','.join(sources)}: " + ", ".join(parts)


def make_alert(pattern_name: str, bindings) -> Alert:
    bindings = tuple(bindings)
    if not bindings:
        raise EventError("an alert needs at least one bound event")
    fired = max(ev.ts_ms for _, ev in bindings)
    return Alert(pattern_name, fired, bindings, describe(pattern_name, bindings))
