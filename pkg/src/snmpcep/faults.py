"""Seeded synthetic traces: nominal gateway behaviour plus injected anomalies.

Every scenario starts from the nominal trace for its seed; the injection is
spliced in afterwards with its own random stream, so the part of the trace
before ``injection_start_ms`` is identical to the nominal trace.

Counter samples taken at tick ``t`` reflect activity in ``(t - interval, t]``,
so an attack starting at ``injection_start_ms`` first shows up in the next
sample.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Optional

from .errors import ScenarioError
from .events import COUNTER_MODULUS, Event, make_measurement_event, make_signal_event

SOCKET_EXCEPTION = "SocketException"

# per-tick emission order; every tick carries all of them
CPU_ROWS = ("hrProcessorLoad.1", "hrProcessorLoad.2")
STORAGE_ROWS = ("hrStorageUsed.1",)
GAUGES = CPU_ROWS + STORAGE_ROWS + ("hrSystemProcesses",)
COUNTERS = ("icmpInEchos", "tcpEstabResets", "tcpRetransSegs")
MEASURE_ORDER = GAUGES + COUNTERS

CPU_THRESHOLD = 90
STORAGE_THRESHOLD = 62000
TASKS_THRESHOLD = 40
ICMP_RATE_LIMIT = 3          # echoes per second
RETRANS_WINDOW_LIMIT = 4     # segments per retrans window
RETRANS_WINDOW_MS = 15_000


class ScenarioKind(str, Enum):
    NOMINAL = "Nominal"
    CPU_OVERLOAD = "CpuOverload"
    RAM_OVERLOAD = "RamOverload"
    TASK_STORM = "TaskStorm"
    TCP_RESET_FAST = "TcpResetFast"
    TCP_RESET_SLOW = "TcpResetSlow"
    ICMP_FLOOD_MODERATE = "IcmpFloodModerate"
    ICMP_FLOOD_STRONG = "IcmpFloodStrong"


@dataclass(frozen=True)
class Baseline:
    """Nominal operating envelope; every bound stays below its alert threshold."""

    cpu_min: int = 5
    cpu_max: int = 60
    tasks_min: int = 20
    tasks_max: int = 40
    storage_min: int = 40_000
    storage_max: int = 50_000
    icmp_per_s: int = 3
    retrans_per_window: int = 4
    retrans_prob: float = 0.05
    counter_start: Optional[int] = None  # None: random offset per counter

    def check(self):
        if not 0 <= self.cpu_min <= self.cpu_max <= CPU_THRESHOLD:
            raise ScenarioError("cpu range must lie within [0, 90]")
        if not 0 <= self.tasks_min <= self.tasks_max <= TASKS_THRESHOLD:
            raise ScenarioError("tasks range must lie within [0, 40]")
        if not 0 <= self.storage_min <= self.storage_max <= STORAGE_THRESHOLD:
            raise ScenarioError("storage range must lie within [0, 62000]")
        if not 0 <= self.icmp_per_s <= ICMP_RATE_LIMIT:
            raise ScenarioError("icmp_per_s must be in [0, 3]")
        if not 0 <= self.retrans_per_window <= RETRANS_WINDOW_LIMIT:
            raise ScenarioError("retrans_per_window must be in [0, 4]")
        if not 0.0 <= self.retrans_prob <= 1.0:
            raise ScenarioError("retrans_prob must be a probability")
        if self.counter_start is not None and not 0 <= self.counter_start < COUNTER_MODULUS:
            raise ScenarioError("counter_start must be a 32-bit unsigned value")


# default attack lengths where the kind has one
_DEFAULT_ATTACK_MS = {
    ScenarioKind.ICMP_FLOOD_MODERATE: 30_000,
    ScenarioKind.ICMP_FLOOD_STRONG: 5_000,
}

# time after injection_start the signature needs to be fully visible
_SIGNATURE_MS = {
    ScenarioKind.TCP_RESET_FAST: 2_000,
    ScenarioKind.TCP_RESET_SLOW: 3_000,
}


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    duration_ms: int
    injection_start_ms: int
    seed: int
    poll_interval_ms: int = 1000
    baseline: Baseline = field(default_factory=Baseline)
    attack_duration_ms: Optional[int] = None
    source: str = "gw"

    def __post_init__(self):
        if not isinstance(self.kind, ScenarioKind):
            try:
                object.__setattr__(self, "kind", ScenarioKind(self.kind))
            except ValueError:
                raise ScenarioError(f"unknown scenario kind {self.kind!r}") from None
        if isinstance(self.baseline, dict):
            object.__setattr__(self, "baseline", Baseline(**self.baseline))
        for name in ("duration_ms", "injection_start_ms", "seed", "poll_interval_ms"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"{name} must be an integer")
        if self.poll_interval_ms < 100:
            raise ScenarioError("poll_interval_ms must be >= 100")
        if not 0 <= self.injection_start_ms < self.duration_ms:
            raise ScenarioError("need 0 <= injection_start_ms < duration_ms")
        if self.attack_duration_ms is not None and self.attack_duration_ms <= 0:
            raise ScenarioError("attack_duration_ms must be positive")
        self.baseline.check()

    @property
    def attack_ms(self) -> int:
        if self.attack_duration_ms is not None:
            return self.attack_duration_ms
        return _DEFAULT_ATTACK_MS.get(self.kind, self.duration_ms - self.injection_start_ms)

    def to_json(self) -> str:
        obj = asdict(self)
        obj["kind"] = self.kind.value
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "ScenarioSpec":
        if not isinstance(obj, dict):
            raise ScenarioError("scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ScenarioError(f"unknown scenario fields {unknown}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON: {exc.msg}") from None
        return cls.from_dict(obj)


class _Series:
    """Per-tick gauge levels, counter increments and signals before assembly."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.ticks = list(range(0, spec.duration_ms, spec.poll_interval_ms))
        self.gauges = {m: [0] * len(self.ticks) for m in GAUGES}
        self.incr = {m: [0] * len(self.ticks) for m in COUNTERS}
        self.start = {m: 0 for m in COUNTERS}
        self.signals: list[tuple[int, str]] = []

    def after(self, t_ms: int, until_ms: Optional[int] = None):
        """Tick indices with t_ms < tick <= until_ms (None = to the end)."""
        return [i for i, t in enumerate(self.ticks) if t > t_ms and (until_ms is None or t <= until_ms)]

    def events(self) -> list[Event]:
        src = self.spec.source
        out = []
        level = dict(self.start)
        signals = sorted(self.signals)
        k = 0
        for i, t in enumerate(self.ticks):
            while k < len(signals) and signals[k][0] < t:
                out.append(make_signal_event(signals[k][0], signals[k][1], src))
                k += 1
            for m in GAUGES:
                out.append(make_measurement_event(t, m, self.gauges[m][i], src))
            for m in COUNTERS:
                level[m] = (level[m] + self.incr[m][i]) % COUNTER_MODULUS
                out.append(make_measurement_event(t, m, level[m], src))
        for ts, name in signals[k:]:
            out.append(make_signal_event(ts, name, src))
        return out


def _windowed_increments(rng, n, per_tick, window_ticks, limit, draw):
    """Random increments whose sum over any ``window_ticks`` ticks stays <= limit."""
    out = [0] * n
    for i in range(n):
        room = limit - sum(out[max(0, i - window_ticks + 1):i])
        out[i] = min(draw(rng, per_tick), max(room, 0))
    return out


def _nominal_series(spec: ScenarioSpec) -> _Series:
    b = spec.baseline
    rng = random.Random(spec.seed)
    s = _Series(spec)
    n = len(s.ticks)
    for row in CPU_ROWS:
        s.gauges[row] = [rng.randint(b.cpu_min, b.cpu_max) for _ in range(n)]
    tasks = rng.randint(b.tasks_min, b.tasks_max)
    storage = rng.randint(b.storage_min, b.storage_max)
    for i in range(n):
        tasks = min(b.tasks_max, max(b.tasks_min, tasks + rng.choice((-1, 0, 0, 1))))
        storage = min(b.storage_max, max(b.storage_min, storage + rng.randint(-200, 200)))
        s.gauges["hrSystemProcesses"][i] = tasks
        s.gauges["hrStorageUsed.1"][i] = storage
    per_s = max(1, math.ceil(1000 / spec.poll_interval_ms))
    s.incr["icmpInEchos"] = _windowed_increments(
        rng, n, b.icmp_per_s, per_s, b.icmp_per_s, lambda r, k: r.randint(0, k))
    win = max(1, math.ceil(RETRANS_WINDOW_MS / spec.poll_interval_ms))
    s.incr["tcpRetransSegs"] = _windowed_increments(
        rng, n, 1, win, b.retrans_per_window, lambda r, k: int(r.random() < b.retrans_prob))
    for m in COUNTERS:
        s.start[m] = b.counter_start if b.counter_start is not None else rng.randint(0, 10 ** 6)
    return s


def _injection_rng(spec: ScenarioSpec) -> random.Random:
    return random.Random(f"{spec.seed}/{spec.kind.value}")


def _require(spec: ScenarioSpec, *kinds: ScenarioKind):
    if spec.kind not in kinds:
        raise ScenarioError(f"scenario kind {spec.kind.value} is not one of {[k.value for k in kinds]}")
    need = _SIGNATURE_MS.get(spec.kind, spec.poll_interval_ms)
    if spec.kind is not ScenarioKind.NOMINAL and spec.injection_start_ms + need >= spec.duration_ms:
        raise ScenarioError(f"{spec.kind.value} needs {need} ms of trace after injection_start_ms")


def _spread(total: int, slots: int) -> list[int]:
    base, extra = divmod(total, slots)
    return [base + (1 if i < extra else 0) for i in range(slots)]


def gen_nominal(spec: ScenarioSpec) -> list[Event]:
    """Background behaviour only; every measure stays inside the baseline."""
    _require(spec, ScenarioKind.NOMINAL)
    return _nominal_series(spec).events()


def gen_tcp_reset_fast(spec: ScenarioSpec) -> list[Event]:
    """Resets jump by 7 within one second, the service times out 2 s later."""
    _require(spec, ScenarioKind.TCP_RESET_FAST)
    s = _nominal_series(spec)
    inj = spec.injection_start_ms
    idx = s.after(inj, inj + 1000)
    for i, d in zip(idx, _spread(7, len(idx))):
        s.incr["tcpEstabResets"][i] += d
    s.signals.append((inj + 2000, SOCKET_EXCEPTION))
    return s.events()


def gen_tcp_reset_slow(spec: ScenarioSpec) -> list[Event]:
    """Resets stay flat; retransmissions climb 6 per second until a socket error at +3 s."""
    _require(spec, ScenarioKind.TCP_RESET_SLOW)
    s = _nominal_series(spec)
    inj = spec.injection_start_ms
    per_tick = max(5, math.ceil(6 * spec.poll_interval_ms / 1000))
    for i in s.after(inj, inj + 3000):
        s.incr["tcpRetransSegs"][i] = per_tick
    s.signals.append((inj + 3000, SOCKET_EXCEPTION))
    return s.events()


def gen_icmp_flood(spec: ScenarioSpec) -> list[Event]:
    """Moderate: about 100 echoes in 30 s.  Strong: about 40000 echoes per second."""
    _require(spec, ScenarioKind.ICMP_FLOOD_MODERATE, ScenarioKind.ICMP_FLOOD_STRONG)
    s = _nominal_series(spec)
    rng = _injection_rng(spec)
    inj, dur = spec.injection_start_ms, spec.attack_ms
    idx = s.after(inj, inj + dur)
    incr = s.incr["icmpInEchos"]
    if spec.kind is ScenarioKind.ICMP_FLOOD_MODERATE:
        prev = 0
        for i in idx:
            total = (100 * (s.ticks[i] - inj)) // 30_000
            incr[i] = total - prev
            prev = total
    else:
        per_tick = 40_000 * spec.poll_interval_ms / 1000
        for i in idx:
            incr[i] = round(per_tick * rng.uniform(0.95, 1.05))
        if dur > 3000:
            # a long flood breaks the connection
            s.signals.append((inj + min(3500, dur), SOCKET_EXCEPTION))
    return s.events()


def gen_resource_overload(spec: ScenarioSpec) -> list[Event]:
    """The designated gauge sits above its threshold from injection_start on."""
    _require(spec, ScenarioKind.CPU_OVERLOAD, ScenarioKind.RAM_OVERLOAD, ScenarioKind.TASK_STORM)
    s = _nominal_series(spec)
    rng = _injection_rng(spec)
    inj = spec.injection_start_ms
    idx = s.after(inj - 1, inj + spec.attack_ms - 1)
    if spec.kind is ScenarioKind.CPU_OVERLOAD:
        for i in idx:
            s.gauges["hrProcessorLoad.1"][i] = rng.randint(91, 100)
    elif spec.kind is ScenarioKind.RAM_OVERLOAD:
        for i in idx:
            s.gauges["hrStorageUsed.1"][i] = rng.randint(STORAGE_THRESHOLD + 1, STORAGE_THRESHOLD + 3000)
    else:
        for n, i in enumerate(idx):
            s.gauges["hrSystemProcesses"][i] = 41 if n == 0 else rng.randint(41, 60)
    return s.events()


_GENERATORS = {
    ScenarioKind.NOMINAL: gen_nominal,
    ScenarioKind.CPU_OVERLOAD: gen_resource_overload,
    ScenarioKind.RAM_OVERLOAD: gen_resource_overload,
    ScenarioKind.TASK_STORM: gen_resource_overload,
    ScenarioKind.TCP_RESET_FAST: gen_tcp_reset_fast,
    ScenarioKind.TCP_RESET_SLOW: gen_tcp_reset_slow,
    ScenarioKind.ICMP_FLOOD_MODERATE: gen_icmp_flood,
    ScenarioKind.ICMP_FLOOD_STRONG: gen_icmp_flood,
}


def generate(spec: ScenarioSpec) -> list[Event]:
    return _GENERATORS[spec.kind](spec)


def nominal_twin(spec: ScenarioSpec) -> ScenarioSpec:
    """The nominal scenario sharing ``spec``'s seed and timing."""
    return ScenarioSpec(ScenarioKind.NOMINAL, spec.duration_ms, spec.injection_start_ms, spec.seed,
                        spec.poll_interval_ms, spec.baseline, None, spec.source)
