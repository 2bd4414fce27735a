import json

import pytest

from snmpcep.correlator import Engine
from snmpcep.errors import ScenarioError
from snmpcep.events import EventKind, wrapped_delta
from snmpcep.faults import (
    Baseline, ScenarioKind, ScenarioSpec, gen_icmp_flood, gen_nominal, gen_resource_overload,
    gen_tcp_reset_fast, gen_tcp_reset_slow, generate, nominal_twin,
)
from snmpcep.ingest import write_trace

K = ScenarioKind
SEEDS = range(10)
INJ = 30_000


def spec(kind, seed=0, duration=60_000, inj=INJ, **kw):
    return ScenarioSpec(kind, duration, inj, seed, **kw)


def series(events, measure):
    return [(e.ts_ms, e.value) for e in events if e.measure == measure]


def increase(events, measure, start, end):
    """Counter increase between the last sample at or before ``start`` and the last at or before ``end``."""
    pts = series(events, measure)
    before = [v for t, v in pts if t <= start][-1]
    after = [v for t, v in pts if t <= end][-1]
    return wrapped_delta(before, after)


def signals(events):
    return [(e.ts_ms, e.measure) for e in events if e.kind is EventKind.SIGNAL]


def alerts(events, patterns):
    eng = Engine()
    for p in patterns:
        eng.register_pattern(p)
    return eng.run(events)


# -- nominal envelope ------------------------------------------------------------------

def check_nominal(events, upto=None):
    upto = max(e.ts_ms for e in events) + 1 if upto is None else upto
    evs = [e for e in events if e.ts_ms < upto]
    assert not signals(evs)
    for m in ("hrProcessorLoad.1", "hrProcessorLoad.2"):
        assert all(5 <= v <= 60 for _, v in series(evs, m))
    assert all(20 <= v <= 40 for _, v in series(evs, "hrSystemProcesses"))
    assert all(v < 62000 for _, v in series(evs, "hrStorageUsed.1"))
    resets = series(evs, "tcpEstabResets")
    assert len({v for _, v in resets}) == 1
    icmp = series(evs, "icmpInEchos")
    for (t0, a), (t1, b) in zip(icmp, icmp[1:]):
        assert wrapped_delta(a, b) <= 3
    retrans = series(evs, "tcpRetransSegs")
    for i, (t0, a) in enumerate(retrans):
        later = [v for t, v in retrans[i:] if t <= t0 + 15_000]
        assert wrapped_delta(a, later[-1]) <= 4


@pytest.mark.parametrize("seed", SEEDS)
def test_nominal_envelope(seed):
    check_nominal(gen_nominal(spec(K.NOMINAL, seed)))


def test_nominal_samples_every_measure_each_tick():
    events = gen_nominal(spec(K.NOMINAL, duration=10_000, inj=0))
    by_ts = {}
    for e in events:
        by_ts.setdefault(e.ts_ms, set()).add(e.measure.split(".")[0])
    assert sorted(by_ts) == list(range(0, 10_000, 1000))
    assert all(len(ms) == 6 for ms in by_ts.values())


@pytest.mark.parametrize("seed", SEEDS)
def test_nominal_is_quiet(seed, patterns):
    assert alerts(gen_nominal(spec(K.NOMINAL, seed)), patterns) == []


def test_same_seed_same_bytes(tmp_path):
    for kind in K:
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_trace(generate(spec(kind, 7)), a)
        write_trace(generate(spec(kind, 7)), b)
        assert a.read_bytes() == b.read_bytes()
    assert generate(spec(K.NOMINAL, 1)) != generate(spec(K.NOMINAL, 2))


@pytest.mark.parametrize("kind", [k for k in K if k is not K.NOMINAL])
@pytest.mark.parametrize("seed", SEEDS)
def test_prefix_matches_nominal(kind, seed):
    s = spec(kind, seed)
    attacked = [e for e in generate(s) if e.ts_ms < INJ]
    assert attacked == [e for e in gen_nominal(nominal_twin(s)) if e.ts_ms < INJ]
    check_nominal(attacked)


# -- TCP -------------------------------------------------------------------------------------

@pytest.mark.parametrize("seed", SEEDS)
def test_fast_reset_signature(seed):
    events = gen_tcp_reset_fast(spec(K.TCP_RESET_FAST, seed))
    assert increase(events, "tcpEstabResets", INJ, INJ + 1000) == 7
    assert increase(events, "tcpEstabResets", INJ + 1000, 60_000) == 0
    assert signals(events) == [(INJ + 2000, "SocketException")]


@pytest.mark.parametrize("seed", SEEDS)
def test_slow_reset_signature(seed):
    events = gen_tcp_reset_slow(spec(K.TCP_RESET_SLOW, seed))
    assert increase(events, "tcpEstabResets", 0, 60_000) == 0
    assert increase(events, "tcpRetransSegs", INJ, INJ + 15_000) >= 5
    assert signals(events) == [(INJ + 3000, "SocketException")]


def test_slow_reset_alert_near_signal(by_name):
    for seed in SEEDS:
        fired = alerts(gen_tcp_reset_slow(spec(K.TCP_RESET_SLOW, seed)), [by_name["TCP Reset Attack"]])
        assert fired and abs(fired[0].fired_at_ms - (INJ + 3000)) <= 1000


# -- ICMP ------------------------------------------------------------------------------------

@pytest.mark.parametrize("seed", SEEDS)
def test_moderate_flood_rate(seed):
    events = gen_icmp_flood(spec(K.ICMP_FLOOD_MODERATE, seed, duration=90_000))
    total = increase(events, "icmpInEchos", INJ, INJ + 30_000)
    assert total == 100
    assert 3.1 <= total / 30 <= 3.6
    pts = [(t, v) for t, v in series(events, "icmpInEchos") if INJ <= t <= INJ + 30_000]
    per_sample = [wrapped_delta(a, b) for (_, a), (_, b) in zip(pts, pts[1:])]
    assert set(per_sample) <= {3, 4}
    assert not signals(events)


@pytest.mark.parametrize("seed", SEEDS)
def test_strong_flood_volume(seed):
    events = gen_icmp_flood(spec(K.ICMP_FLOOD_STRONG, seed, attack_duration_ms=5000))
    total = increase(events, "icmpInEchos", INJ, INJ + 5000)
    assert abs(total - 2e5) <= 0.1 * 2e5
    assert [t for t, _ in signals(events)] and signals(events)[0][0] > INJ + 3000


def test_short_strong_flood_keeps_connection():
    events = gen_icmp_flood(spec(K.ICMP_FLOOD_STRONG, attack_duration_ms=2000))
    assert signals(events) == []
    assert increase(events, "icmpInEchos", INJ, INJ + 2000) > 70_000


def test_strong_flood_counter_wraps_cleanly():
    base = Baseline(counter_start=2 ** 32 - 50_000)
    events = gen_icmp_flood(spec(K.ICMP_FLOOD_STRONG, baseline=base))
    assert all(0 <= v < 2 ** 32 for _, v in series(events, "icmpInEchos"))
    assert abs(increase(events, "icmpInEchos", INJ, INJ + 5000) - 2e5) <= 2e4


# -- resource overloads -------------------------------------------------------------------------

@pytest.mark.parametrize("kind, measure, threshold, lo, hi", [
    (K.CPU_OVERLOAD, "hrProcessorLoad", 90, 91, 100),
    (K.RAM_OVERLOAD, "hrStorageUsed", 62000, 62001, None),
    (K.TASK_STORM, "hrSystemProcesses", 40, 41, 60),
])
@pytest.mark.parametrize("seed", SEEDS)
def test_overload_first_crossing(kind, measure, threshold, lo, hi, seed):
    events = gen_resource_overload(spec(kind, seed))
    over = [e for e in events if e.measure.split(".")[0] == measure and e.value > threshold]
    assert over[0].ts_ms == INJ
    assert all(lo <= e.value and (hi is None or e.value <= hi) for e in over)
    if kind is K.TASK_STORM:
        assert over[0].value == 41


# -- spec handling --------------------------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=1000, seed=0),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=-1, seed=0),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=0, seed=0, poll_interval_ms=50),
    dict(kind="Bogus", duration_ms=1000, injection_start_ms=0, seed=0),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=0, seed=1.5),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=0, seed=0, baseline=Baseline(cpu_max=95)),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=0, seed=0, baseline=Baseline(icmp_per_s=4)),
    dict(kind=K.NOMINAL, duration_ms=1000, injection_start_ms=0, seed=0, attack_duration_ms=0),
])
def test_invalid_specs(kw):
    with pytest.raises(ScenarioError):
        ScenarioSpec(**kw)


def test_wrong_generator_for_kind():
    with pytest.raises(ScenarioError):
        gen_tcp_reset_fast(spec(K.NOMINAL))
    with pytest.raises(ScenarioError):
        gen_nominal(spec(K.CPU_OVERLOAD))


def test_signature_must_fit_in_trace():
    with pytest.raises(ScenarioError):
        generate(spec(K.TCP_RESET_SLOW, duration=32_000))
    assert generate(spec(K.TCP_RESET_SLOW, duration=33_001))


def test_json_round_trip(tmp_path):
    s = spec(K.ICMP_FLOOD_STRONG, 4, attack_duration_ms=2000, baseline=Baseline(cpu_max=50))
    path = tmp_path / "s.json"
    path.write_text(s.to_json())
    assert ScenarioSpec.load(path) == s


def test_json_minimal_and_unknown_fields(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "TaskStorm", "duration_ms": 5000, "injection_start_ms": 2000, "seed": 3}))
    assert ScenarioSpec.load(path).kind is K.TASK_STORM
    path.write_text(json.dumps({"kind": "TaskStorm", "duration_ms": 5000, "injection_start_ms": 2000,
                                "seed": 3, "colour": "red"}))
    with pytest.raises(ScenarioError, match="colour"):
        ScenarioSpec.load(path)
    path.write_text("{")
    with pytest.raises(ScenarioError):
        ScenarioSpec.load(path)


def test_other_poll_interval():
    events = generate(spec(K.TCP_RESET_SLOW, poll_interval_ms=500))
    assert increase(events, "tcpRetransSegs", INJ, INJ + 15_000) >= 5
    check_nominal(events, INJ)
