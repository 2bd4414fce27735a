"""Command-line front end: detect, report, generate and fmt.

Exit status: 0 on success, 1 for configuration or input errors found before
any event is processed, 2 for failures while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import queue
import signal
import sys
import threading
from pathlib import Path

from .correlator import Engine
from .errors import PatternError, ReportError, ScenarioError, SnmpCepError
from .faults import ScenarioKind, ScenarioSpec, generate
from .ingest import STANDARD_OIDS, PollerConfig, iter_trace, read_trace, run_poller, write_trace
from .lang import default_pattern_path, format_pattern_file, load_checked
from .report import build_report, read_alerts

log = logging.getLogger("snmpcep")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class _AlertSink:
    """One JSON object per line, flushed as soon as it is written."""

    def __init__(self, path):
        self._own = path is not None and path != "-"
        self.fh = open(path, "w", encoding="utf-8", newline="\n") if self._own else sys.stdout
        self.count = 0

    def write(self, alerts):
        for a in alerts:
            self.fh.write(json.dumps(a.to_json_dict(), separators=(",", ":")) + "\n")
            self.fh.flush()
            self.count += 1

    def close(self):
        if self._own:
            self.fh.close()


def _engine(pattern_paths) -> Engine:
    engine = Engine()
    for checked in load_checked(pattern_paths):
        engine.register_pattern(checked)
    return engine


def _detect_trace(engine, path, sink) -> int:
    n = 0
    for ev in iter_trace(path):
        sink.write(engine.on_event(ev))
        n += 1
    return n


def _detect_live(engine, config: PollerConfig, sink) -> int:
    batches: queue.Queue = queue.Queue()
    stop = threading.Event()
    failure: list[BaseException] = []

    def produce():
        try:
            run_poller(config, STANDARD_OIDS, batches.put, stop)
        except BaseException as exc:  # handed to the consumer
            failure.append(exc)
        finally:
            batches.put(None)

    previous = signal.signal(signal.SIGINT, lambda *_: stop.set())
    worker = threading.Thread(target=produce, name="poller", daemon=True)
    worker.start()
    n = 0
    try:
        while True:
            batch = batches.get()
            if batch is None:
                break
            for ev in batch:
                sink.write(engine.on_event(ev))
                n += 1
    finally:
        stop.set()
        worker.join()
        signal.signal(signal.SIGINT, previous)
    if failure:
        raise failure[0]
    return n


def cmd_detect(args) -> int:
    try:
        engine = _engine(args.patterns)
    except PatternError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    if args.trace is not None:
        if not Path(args.trace).is_file():
            log.error("cannot read trace %s", args.trace)
            return EXIT_CONFIG
        config = None
    else:
        try:
            config = PollerConfig(args.live, args.community, args.interval_ms, source=args.source)
        except ValueError as exc:
            log.error("bad poller configuration: %s", exc)
            return EXIT_CONFIG
    try:
        sink = _AlertSink(args.out)
    except OSError as exc:
        log.error("cannot open %s: %s", args.out, exc.strerror)
        return EXIT_CONFIG
    try:
        if config is None:
            n = _detect_trace(engine, args.trace, sink)
        else:
            n = _detect_live(engine, config, sink)
    except (SnmpCepError, OSError) as exc:
        log.error("detection stopped: %s", exc)
        return EXIT_RUNTIME
    finally:
        sink.close()
    log.info("%d events, %d alerts", n, sink.count)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        names = [p.name for p in load_checked(args.patterns)]
        spec = ScenarioSpec.load(args.scenario)
        report = build_report(read_alerts(args.alerts), spec, names)
    except (PatternError, ScenarioError, ReportError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_CONFIG
    sys.stdout.write(report.to_table())
    if args.out is None:
        sys.stdout.write(report.to_json())
        return EXIT_OK
    out = Path(args.out)
    try:
        out.write_text(report.to_json(), encoding="utf-8")
        out.with_suffix(".tsv").write_text(report.to_tsv(), encoding="utf-8")
        if args.trace is not None:
            from .plotting import render_scenario
            alerts = _replay_alerts(args.patterns, args.trace)
            render_scenario(read_trace(args.trace), alerts, out.with_suffix(".png"),
                            spec.injection_start_ms, f"{spec.kind.value} (seed {spec.seed})")
    except (SnmpCepError, OSError) as exc:
        log.error("cannot write report: %s", exc)
        return EXIT_RUNTIME
    log.info("report written to %s", out)
    return EXIT_OK


def _replay_alerts(pattern_paths, trace_path):
    engine = _engine(pattern_paths)
    return engine.run(iter_trace(trace_path))


def cmd_generate(args) -> int:
    try:
        if args.scenario is not None:
            spec = ScenarioSpec.load(args.scenario)
        else:
            spec = ScenarioSpec(ScenarioKind(args.kind), args.duration_ms, args.injection_ms, args.seed,
                                args.interval_ms, attack_duration_ms=args.attack_ms)
        events = generate(spec)
    except (ScenarioError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    try:
        write_trace(events, args.out)
        if args.scenario_out:
            Path(args.scenario_out).write_text(spec.to_json(), encoding="utf-8")
    except OSError as exc:
        log.error("cannot write: %s", exc)
        return EXIT_RUNTIME
    log.info("%d events written to %s", len(events), args.out)
    return EXIT_OK


def cmd_fmt(args) -> int:
    try:
        asts = [c.ast for c in load_checked([args.file])]
    except PatternError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    sys.stdout.write(format_pattern_file(asts))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="snmpcep", description="Pattern-based anomaly detection over SNMP object streams.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    p.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    default_patterns = [str(default_pattern_path())]

    d = sub.add_parser("detect", help="run patterns over a trace file or a live agent")
    d.add_argument("--patterns", nargs="+", default=default_patterns, metavar="FILE",
                   help="pattern files (default: the bundled set)")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", metavar="FILE", help="JSONL event trace")
    src.add_argument("--live", metavar="HOST:PORT", help="poll an SNMPv2c agent")
    d.add_argument("--community", default="public")
    d.add_argument("--interval-ms", type=int, default=1000)
    d.add_argument("--source", default="gw", help="source label for live events")
    d.add_argument("--out", metavar="FILE", help="alert JSONL output (default: stdout)")
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("report", help="detection latency for a generated scenario")
    r.add_argument("--alerts", required=True, metavar="FILE")
    r.add_argument("--scenario", required=True, metavar="FILE")
    r.add_argument("--patterns", nargs="+", default=default_patterns, metavar="FILE")
    r.add_argument("--out", metavar="FILE", help="JSON report; a .tsv (and .png with --trace) go alongside")
    r.add_argument("--trace", metavar="FILE", help="trace to plot next to the report")
    r.set_defaults(func=cmd_report)

    g = sub.add_parser("generate", help="write a synthetic scenario trace")
    g.add_argument("--out", required=True, metavar="FILE")
    g.add_argument("--scenario", metavar="FILE", help="scenario JSON; otherwise use the flags below")
    g.add_argument("--kind", choices=[k.value for k in ScenarioKind], default=ScenarioKind.NOMINAL.value)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--duration-ms", type=int, default=60_000)
    g.add_argument("--injection-ms", type=int, default=30_000)
    g.add_argument("--interval-ms", type=int, default=1000)
    g.add_argument("--attack-ms", type=int, default=None)
    g.add_argument("--scenario-out", metavar="FILE", help="also write the scenario JSON")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fmt", help="print a pattern file in canonical form")
    f.add_argument("file")
    f.set_defaults(func=cmd_fmt)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
