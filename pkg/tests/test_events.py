import pytest
from hypothesis import given, strategies as st

from snmpcep.errors import EventError, UnknownMeasureError
from snmpcep.events import (
    COUNTER_MODULUS, STANDARD_MEASURES, EventKind, counter_delta, lookup_measure,
    make_alert, make_measurement_event, make_signal_event, measure_matches,
)


def m(ts, measure, value, source="ictgw"):
    return make_measurement_event(ts, measure, value, source)


def test_measurement_event_copies_fields():
    ev = m(1000, "icmpInEchos", 5021)
    assert ev == (1000, EventKind.MEASUREMENT, "icmpInEchos", 5021, "ictgw")
    assert m(0, "hrProcessorLoad", 0).value == 0


def test_unknown_measure_names_offender():
    with pytest.raises(UnknownMeasureError) as info:
        m(2500, "bogusMeasure", 1)
    assert info.value.measure == "bogusMeasure"


def test_row_suffix_resolves_to_base_measure():
    assert m(0, "hrProcessorLoad.3", 12).measure == "hrProcessorLoad.3"
    assert measure_matches("hrProcessorLoad.3", "hrProcessorLoad")
    assert not measure_matches("hrProcessorLoadX", "hrProcessorLoad")


def test_non_integer_value_rejected():
    for bad in (1.5, "3", True, None):
        with pytest.raises(EventError):
            m(0, "icmpInEchos", bad)


def test_signal_events():
    ev = make_signal_event(3000, "SocketException", "ictgw")
    assert ev.kind is EventKind.SIGNAL and ev.value is None and ev.ts_ms == 3000
    assert make_signal_event(0, "SocketException", "ictgw").ts_ms == 0
    with pytest.raises(EventError):
        make_signal_event(5, "", "ictgw")


def test_measure_registry_semantics():
    counters = {n for n, k in STANDARD_MEASURES.items() if k.is_counter}
    assert counters == {"tcpEstabResets", "tcpRetransSegs", "icmpInEchos"}
    assert set(STANDARD_MEASURES) - counters == {"hrProcessorLoad", "hrStorageUsed", "hrSystemProcesses"}
    assert lookup_measure("hrStorageUsed.1").name == "hrStorageUsed"


@pytest.mark.parametrize("a, b, expected", [
    (("icmpInEchos", 100), ("icmpInEchos", 104), 4),
    (("tcpEstabResets", 10), ("tcpEstabResets", 17), 7),
    (("icmpInEchos", 2 ** 32 - 2), ("icmpInEchos", 3), 5),
])
def test_counter_delta_examples(a, b, expected):
    assert counter_delta(m(0, *a), m(1000, *b)) == expected


def test_counter_delta_rejections():
    with pytest.raises(EventError):
        counter_delta(m(0, "icmpInEchos", 1), m(1, "tcpEstabResets", 2))
    with pytest.raises(EventError):
        counter_delta(m(0, "hrProcessorLoad", 1), m(1, "hrProcessorLoad", 2))
    with pytest.raises(EventError):
        counter_delta(m(5, "icmpInEchos", 1), m(1, "icmpInEchos", 2))
    with pytest.raises(EventError):
        counter_delta(make_signal_event(0, "x", "s"), m(1, "icmpInEchos", 2))


u32 = st.integers(0, COUNTER_MODULUS - 1)


@given(u32)
def test_delta_of_event_with_itself_is_zero(v):
    ev = m(7, "tcpRetransSegs", v)
    assert counter_delta(ev, ev) == 0


@given(u32, st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_delta_additive_without_wrap(a, d1, d2):
    if a + d1 + d2 >= COUNTER_MODULUS:
        a = COUNTER_MODULUS - 1 - d1 - d2
    ea, eb, ec = m(0, "icmpInEchos", a), m(1, "icmpInEchos", a + d1), m(2, "icmpInEchos", a + d1 + d2)
    assert counter_delta(ea, ec) == counter_delta(ea, eb) + counter_delta(eb, ec)


@given(u32, st.integers(0, COUNTER_MODULUS - 1))
def test_delta_recovers_increment_modulo_one_wrap(a, d):
    later = (a + d) % COUNTER_MODULUS
    assert counter_delta(m(0, "icmpInEchos", a), m(1, "icmpInEchos", later)) == d


def test_alert_fires_at_latest_binding_and_needs_bindings():
    e1, e2 = m(0, "icmpInEchos", 100), m(900, "icmpInEchos", 104)
    alert = make_alert("ICMP Flooding Attack", [("e1", e1), ("e2", e2)])
    assert alert.fired_at_ms == 900
    assert alert.to_json_dict() == {
        "ts_ms": 900,
        "pattern": "ICMP Flooding Attack",
        "bindings": [
            {"var": "e1", "measure": "icmpInEchos", "value": 100, "ts_ms": 0},
            {"var": "e2", "measure": "icmpInEchos", "value": 104, "ts_ms": 900},
        ],
        "description": alert.description,
    }
    assert "e2 icmpInEchos=104 @900" in alert.description
    with pytest.raises(EventError):
        make_alert("x", [])


def test_events_are_immutable():
    ev = m(1, "icmpInEchos", 1)
    with pytest.raises(AttributeError):
        ev.value = 2


@pytest.mark.parametrize("value", [-1, 2 ** 32])
def test_counter_value_out_of_range(value):
    with pytest.raises(EventError):
        make_measurement_event(0, "tcpEstabResets", value, "gw")


def test_gauge_value_is_free():
    assert make_measurement_event(0, "hrSystemProcesses", -3, "gw").value == -3
