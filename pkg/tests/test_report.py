import json

import pytest

from snmpcep.errors import ReportError
from snmpcep.faults import ScenarioKind, ScenarioSpec
from snmpcep.report import AlertRecord, build_report, parse_alert_lines, run_report

NAMES = ["Memory Overload", "CPU Overload", "Tasks Number Overcoming", "ICMP Flooding Attack", "TCP Reset Attack"]


def spec(kind=ScenarioKind.TCP_RESET_FAST, inj=30_000):
    return ScenarioSpec(kind, 60_000, inj, 3)


def test_empty_alerts_give_zero_rows():
    rep = build_report([], spec(), NAMES)
    assert [r.pattern for r in rep.rows] == NAMES
    assert all(r.alert_count == 0 and r.first_alert_ms is None and r.latency_ms is None for r in rep.rows)
    assert rep.false_positives == 0


def test_latency_and_prefix_false_positives():
    alerts = [AlertRecord(12_000, "CPU Overload"), AlertRecord(31_000, "TCP Reset Attack"),
              AlertRecord(32_000, "TCP Reset Attack")]
    rep = build_report(alerts, spec(), NAMES)
    row = rep.rows[NAMES.index("TCP Reset Attack")]
    assert (row.first_alert_ms, row.latency_ms, row.alert_count) == (31_000, 1000, 2)
    assert rep.rows[NAMES.index("CPU Overload")].alert_count == 0
    assert rep.false_positives == 1


def test_alert_at_injection_has_zero_latency():
    rep = build_report([AlertRecord(30_000, "CPU Overload")], spec(ScenarioKind.CPU_OVERLOAD), NAMES)
    assert rep.rows[1].latency_ms == 0 and rep.false_positives == 0


def test_nominal_counts_everything_as_false_positive():
    rep = build_report([AlertRecord(45_000, "CPU Overload")], spec(ScenarioKind.NOMINAL), NAMES)
    assert rep.false_positives == 1
    assert all(r.alert_count == 0 for r in rep.rows)


def test_unknown_pattern_rejected():
    with pytest.raises(ReportError, match="Bogus"):
        build_report([AlertRecord(1, "Bogus")], spec(), NAMES)


@pytest.mark.parametrize("line", ["{", "[]", '{"ts_ms":"1","pattern":"x"}', '{"ts_ms":1}',
                                  '{"ts_ms":true,"pattern":"x"}'])
def test_bad_alert_lines(line):
    with pytest.raises(ReportError) as info:
        parse_alert_lines(['{"ts_ms":0,"pattern":"x"}\n', line + "\n"])
    assert info.value.line == 2


def test_renderings():
    rep = build_report([AlertRecord(33_000, "TCP Reset Attack")], spec(ScenarioKind.TCP_RESET_SLOW), NAMES)
    obj = json.loads(rep.to_json())
    assert obj["rows"][4] == {"pattern": "TCP Reset Attack", "injection_start_ms": 30_000,
                              "first_alert_ms": 33_000, "latency_ms": 3000, "alert_count": 1}
    tsv = rep.to_tsv().splitlines()
    assert tsv[0].split("\t") == ["pattern", "injection_start_ms", "first_alert_ms", "latency_ms", "alert_count"]
    assert tsv[1].split("\t") == ["Memory Overload", "30000", "", "", "0"]
    assert tsv[5].split("\t") == ["TCP Reset Attack", "30000", "33000", "3000", "1"]
    table = rep.to_table()
    assert "TcpResetSlow" in table and "3000" in table and "false positives" in table


def test_run_report_from_files(tmp_path):
    alerts = tmp_path / "a.jsonl"
    alerts.write_text('{"ts_ms":31000,"pattern":"ICMP Flooding Attack","bindings":[],"description":"x"}\n')
    scenario = tmp_path / "s.json"
    scenario.write_text(spec(ScenarioKind.ICMP_FLOOD_STRONG).to_json())
    rep = run_report(alerts, scenario, NAMES)
    assert rep.rows[3].latency_ms == 1000
