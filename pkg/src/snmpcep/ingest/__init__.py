"""Event sources: JSONL trace files and a live SNMP poller."""

from .oids import STANDARD_OIDS, Indexing, OidEntry, OidMap, format_oid, parse_oid
from .poller import PollerConfig, poll_once, run_poller
from .snmp import SnmpClient, parse_address
from .trace import event_from_json, event_to_json, iter_trace, parse_trace_lines, read_trace, write_trace

__all__ = [
    "STANDARD_OIDS", "Indexing", "OidEntry", "OidMap", "format_oid", "parse_oid",
    "PollerConfig", "poll_once", "run_poller", "SnmpClient", "parse_address",
    "event_from_json", "event_to_json", "iter_trace", "parse_trace_lines", "read_trace", "write_trace",
]
