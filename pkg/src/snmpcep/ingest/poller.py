"""Periodic acquisition of SNMP objects into batches of events."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from ..errors import PollerError, SnmpAuthError, SnmpError
from ..events import Event, make_measurement_event
from .ber import Value
from .oids import STANDARD_OIDS, Indexing, OidMap
from .snmp import DEFAULT_RETRIES, DEFAULT_TIMEOUT_MS, SnmpClient, parse_address

log = logging.getLogger(__name__)

MIN_INTERVAL_MS = 100
MAX_CONSECUTIVE_FAILURES = 10


@dataclass(frozen=True)
class PollerConfig:
    address: str
    community: str = "public"
    poll_interval_ms: int = 1000
    enabled: Optional[frozenset] = None  # None = every measure in the OID map
    source: str = "gw"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES

    def __post_init__(self):
        if self.poll_interval_ms < MIN_INTERVAL_MS:
            raise ValueError(f"poll_interval_ms must be >= {MIN_INTERVAL_MS}, got {self.poll_interval_ms}")
        parse_address(self.address)

    def client(self) -> SnmpClient:
        host, port = parse_address(self.address)
        return SnmpClient(host, port, self.community, self.timeout_ms, self.retries)

    def active(self, oid_map: OidMap) -> OidMap:
        if self.enabled is None:
            return oid_map
        return oid_map.restrict(self.enabled)


def wall_clock_ms() -> int:
    return time.time_ns() // 1_000_000


def _reading(measure: str, val: Value) -> Optional[int]:
    if val.is_exception:
        log.warning("agent has no instance for %s", measure)
        return None
    if not val.is_numeric:
        log.warning("non-numeric value for %s (tag 0x%02x), skipped", measure, val.tag)
        return None
    return val.value


def poll_once(config: PollerConfig, oid_map: OidMap = STANDARD_OIDS, client: Optional[SnmpClient] = None,
              clock: Callable[[], int] = wall_clock_ms) -> list[Event]:
    """Read every enabled object once; all events share one timestamp.

    Table columns are walked and emitted as ``<measure>.<row>``.  Objects
    missing on the agent are skipped with a warning.
    """
    own = client is None
    client = client or config.client()
    try:
        readings: list[tuple[str, int]] = []
        active = config.active(oid_map)
        scalars = [e for e in active if e.indexing is Indexing.SCALAR]
        if scalars:
            vbs = client.get([e.instance_oid for e in scalars])
            if len(vbs) != len(scalars):
                raise SnmpError(f"asked for {len(scalars)} objects, got {len(vbs)}")
            for e, (_, val) in zip(scalars, vbs):
                v = _reading(e.measure, val)
                if v is not None:
                    readings.append((e.measure, v))
        for e in active:
            if e.indexing is not Indexing.PER_ROW:
                continue
            rows = list(client.walk(e.oid))
            if not rows:
                log.warning("agent has no rows for %s", e.measure)
            for oid, val in rows:
                name = f"{e.measure}.{'.'.join(map(str, oid[len(e.oid):]))}"
                v = _reading(name, val)
                if v is not None:
                    readings.append((name, v))
        ts = clock()
        return [make_measurement_event(ts, m, v, config.source) for m, v in readings]
    finally:
        if own:
            client.close()


def run_poller(config: PollerConfig, oid_map: OidMap, sink: Callable[[list[Event]], None],
               stop: threading.Event, client: Optional[SnmpClient] = None,
               clock: Callable[[], int] = wall_clock_ms,
               monotonic: Callable[[], float] = time.monotonic,
               max_failures: int = MAX_CONSECUTIVE_FAILURES) -> int:
    """Poll until ``stop`` is set, handing each complete batch to ``sink``.

    Returns the number of batches delivered.  A batch whose poll was still
    running when ``stop`` was set is dropped.  Timeouts and agent errors skip
    the cycle; more than ``max_failures`` in a row raise PollerError, as does
    an authentication failure.
    """
    own = client is None
    client = client or config.client()
    interval = config.poll_interval_ms / 1000
    delivered = 0
    failures = 0
    last_ts = None
    due = monotonic()
    try:
        while not stop.is_set():
            try:
                batch = poll_once(config, oid_map, client, clock)
            except SnmpAuthError as exc:
                raise PollerError(f"authentication failed: {exc}") from exc
            except (SnmpError, OSError) as exc:
                failures += 1
                log.warning("poll failed (%d in a row): %s", failures, exc)
                if failures > max_failures:
                    raise PollerError(f"giving up after {failures} consecutive failed polls: {exc}") from exc
                batch = None
            else:
                failures = 0
            if stop.is_set():
                break
            if batch:
                ts = batch[0].ts_ms
                if last_ts is not None and ts < last_ts:
                    # wall clock stepped back: keep the stream ordered
                    batch = [ev._replace(ts_ms=last_ts) for ev in batch]
                    ts = last_ts
                last_ts = ts
                sink(batch)
                delivered += 1
            due += interval
            stop.wait(max(0.0, due - monotonic()))
    finally:
        if own:
            client.close()
    return delivered
