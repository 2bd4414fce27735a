"""Hard-registered object identifiers for the monitored SNMP objects."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from ..events import STANDARD_MEASURES, MeasureKind


class Indexing(str, Enum):
    SCALAR = "scalar"    # single instance, read at <oid>.0
    PER_ROW = "per_row"  # table column, walked with GETNEXT


@dataclass(frozen=True)
class OidEntry:
    measure: str
    oid: tuple[int, ...]
    kind: MeasureKind
    indexing: Indexing

    @property
    def dotted(self) -> str:
        return format_oid(self.oid)

    @property
    def instance_oid(self) -> tuple[int, ...]:
        return self.oid + (0,)


def parse_oid(text: str) -> tuple[int, ...]:
    parts = text.strip().lstrip(".").split(".")
    try:
        oid = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"malformed OID {text!r}") from None
    if len(oid) < 2 or any(p < 0 for p in oid):
        raise ValueError(f"malformed OID {text!r}")
    return oid


def format_oid(oid) -> str:
    return ".".join(str(p) for p in oid)


class OidMap:
    """Ordered measure -> OID registry."""

    def __init__(self, entries):
        self._entries: dict[str, OidEntry] = {}
        for e in entries:
            if e.measure in self._entries:
                raise ValueError(f"duplicate measure {e.measure!r}")
            self._entries[e.measure] = e

    def __iter__(self) -> Iterator[OidEntry]:
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, measure: str) -> OidEntry:
        return self._entries[measure]

    def __contains__(self, measure) -> bool:
        return measure in self._entries

    def restrict(self, measures) -> "OidMap":
        wanted = set(measures)
        unknown = wanted - set(self._entries)
        if unknown:
            raise KeyError(f"unknown measures {sorted(unknown)}")
        return OidMap(e for e in self if e.measure in wanted)


def _standard(registry: Mapping[str, MeasureKind]) -> OidMap:
    rows = (
        # HOST-RESOURCES-MIB
        ("hrProcessorLoad", "1.3.6.1.2.1.25.3.3.1.2", Indexing.PER_ROW),
        ("hrStorageUsed", "1.3.6.1.2.1.25.2.3.1.6", Indexing.PER_ROW),
        ("hrSystemProcesses", "1.3.6.1.2.1.25.1.6", Indexing.SCALAR),
        # MIB-II icmp and tcp groups
        ("icmpInEchos", "1.3.6.1.2.1.5.8", Indexing.SCALAR),
        ("tcpEstabResets", "1.3.6.1.2.1.6.8", Indexing.SCALAR),
        ("tcpRetransSegs", "1.3.6.1.2.1.6.12", Indexing.SCALAR),
    )
    return OidMap(OidEntry(m, parse_oid(o), registry[m], ix) for m, o, ix in rows)


STANDARD_OIDS = _standard(STANDARD_MEASURES)
