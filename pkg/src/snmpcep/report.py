"""Detection latency per pattern for one generated scenario."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .errors import ReportError
from .faults import ScenarioKind, ScenarioSpec


@dataclass(frozen=True)
class AlertRecord:
    """The fields of an alert line the report needs."""

    ts_ms: int
    pattern: str


@dataclass(frozen=True)
class LatencyRow:
    pattern: str
    injection_start_ms: int
    first_alert_ms: Optional[int]
    latency_ms: Optional[int]
    alert_count: int


@dataclass(frozen=True)
class LatencyReport:
    scenario: str
    seed: int
    injection_start_ms: int
    rows: tuple[LatencyRow, ...]
    false_positives: int  # alerts raised before any fault was injected

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "injection_start_ms": self.injection_start_ms,
            "false_positives": self.false_positives,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_tsv(self) -> str:
        head = ["pattern", "injection_start_ms", "first_alert_ms", "latency_ms", "alert_count"]
        lines = ["\t".join(head)]
        for r in self.rows:
            cells = [r.pattern, r.injection_start_ms, r.first_alert_ms, r.latency_ms, r.alert_count]
            lines.append("\t".join("" if c is None else str(c) for c in cells))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        rows = [("pattern", "first alert ms", "latency ms", "alerts")]
        for r in self.rows:
            rows.append((r.pattern, "-" if r.first_alert_ms is None else str(r.first_alert_ms),
                         "-" if r.latency_ms is None else str(r.latency_ms), str(r.alert_count)))
        widths = [max(len(row[i]) for row in rows) for i in range(4)]
        out = [f"scenario {self.scenario} seed {self.seed}, injection at {self.injection_start_ms} ms"]
        for n, row in enumerate(rows):
            out.append("  ".join([row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]))
            if n == 0:
                out.append("  ".join("-" * w for w in widths))
        out.append(f"false positives before injection: {self.false_positives}")
        return "\n".join(out) + "\n"


def parse_alert_lines(lines: Iterable[str]) -> list[AlertRecord]:
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReportError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise ReportError("expected a JSON object", lineno)
        ts, pattern = obj.get("ts_ms"), obj.get("pattern")
        if isinstance(ts, bool) or not isinstance(ts, int) or not isinstance(pattern, str):
            raise ReportError("alert needs an integer 'ts_ms' and a string 'pattern'", lineno)
        out.append(AlertRecord(ts, pattern))
    return out


def read_alerts(path) -> list[AlertRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_alert_lines(fh)


def build_report(alerts: Iterable[AlertRecord], spec: ScenarioSpec, pattern_names) -> LatencyReport:
    """Rows follow ``pattern_names``; alerts naming any other pattern are rejected.

    For a nominal scenario every alert is a false positive and no row gets a
    latency.
    """
    names = list(pattern_names)
    known = set(names)
    inj = spec.injection_start_ms
    nominal = spec.kind is ScenarioKind.NOMINAL
    first: dict[str, int] = {}
    count = {n: 0 for n in names}
    fp = 0
    for a in alerts:
        if a.pattern not in known:
            raise ReportError(f"alert for unknown pattern {a.pattern!r}")
        if nominal or a.ts_ms < inj:
            fp += 1
            continue
        count[a.pattern] += 1
        if a.pattern not in first or a.ts_ms < first[a.pattern]:
            first[a.pattern] = a.ts_ms
    rows = tuple(
        LatencyRow(n, inj, first.get(n), first[n] - inj if n in first else None, count[n]) for n in names
    )
    return LatencyReport(spec.kind.value, spec.seed, inj, rows, fp)


def run_report(alerts_path, scenario_path, pattern_names) -> LatencyReport:
    return build_report(read_alerts(alerts_path), ScenarioSpec.load(scenario_path), pattern_names)
