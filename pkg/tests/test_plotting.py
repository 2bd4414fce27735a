import pytest

from snmpcep.correlator import Engine
from snmpcep.faults import ScenarioKind, ScenarioSpec, generate
from snmpcep.plotting import _series, render_scenario


@pytest.fixture
def strong(patterns):
    spec = ScenarioSpec(ScenarioKind.ICMP_FLOOD_STRONG, 20_000, 10_000, 1)
    events = generate(spec)
    eng = Engine()
    for p in patterns:
        eng.register_pattern(p)
    return spec, events, eng.run(events)


def test_series_split(strong):
    _, events, _ = strong
    deltas, levels, signals = _series(events)
    assert set(deltas) == {"icmpInEchos", "tcpEstabResets", "tcpRetransSegs"}
    assert "hrProcessorLoad.1" in levels and "hrStorageUsed.1" in levels
    assert [s.measure for s in signals] == ["SocketException"]
    # one delta per sample after the first
    assert len(deltas["icmpInEchos"][1]) == 19
    assert max(deltas["icmpInEchos"][1]) > 30_000


def test_png_is_written_and_deterministic(tmp_path, strong):
    spec, events, alerts = strong
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_scenario(events, alerts, a, spec.injection_start_ms, "strong flood")
    render_scenario(events, alerts, b, spec.injection_start_ms, "strong flood")
    data = a.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert data == b.read_bytes()


def test_svg_and_empty_input(tmp_path):
    out = tmp_path / "empty.svg"
    render_scenario([], [], out)
    assert out.read_text().lstrip().startswith("<?xml")
