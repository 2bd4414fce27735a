"""Blocking SNMPv2c client over UDP."""

from __future__ import annotations

import logging
import random
import socket
from dataclasses import dataclass

from ..errors import SnmpAuthError, SnmpError, SnmpTimeout
from .ber import BerError, ErrorStatus, Message, PduType, Value, NULL, decode_message, encode_message

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 2000
DEFAULT_RETRIES = 2


def parse_address(text: str, default_port: int = 161) -> tuple[str, int]:
    """``host``, ``host:port`` or ``[v6]:port`` -> (host, port)."""
    text = text.strip()
    if text.startswith("["):
        host, _, rest = text[1:].partition("]")
        port = rest.lstrip(":") or str(default_port)
    elif text.count(":") == 1:
        host, port = text.split(":")
    else:
        host, port = text, str(default_port)
    if not host:
        raise ValueError(f"missing host in {text!r}")
    try:
        port_n = int(port)
    except ValueError:
        raise ValueError(f"bad port in {text!r}") from None
    if not 0 < port_n < 65536:
        raise ValueError(f"port out of range in {text!r}")
    return host, port_n


@dataclass
class SnmpClient:
    host: str
    port: int = 161
    community: str = "public"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES

    def __post_init__(self):
        self._sock = None
        self._rng = random.Random()

    def _socket(self):
        if self._sock is None:
            info = socket.getaddrinfo(self.host, self.port, type=socket.SOCK_DGRAM)[0]
            self._sock = socket.socket(info[0], socket.SOCK_DGRAM)
            self._addr = info[4]
        return self._sock

    def close(self):
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, pdu_type: PduType, oids) -> list[tuple[tuple, Value]]:
        """Send one request, retrying on timeout; returns the response varbinds."""
        sock = self._socket()
        rid = self._rng.randint(1, 2 ** 31 - 1)
        msg = Message(self.community.encode(), pdu_type, rid, [(tuple(o), Value(NULL)) for o in oids])
        wire = encode_message(msg)
        sock.settimeout(self.timeout_ms / 1000)
        for attempt in range(self.retries + 1):
            sock.sendto(wire, self._addr)
            try:
                resp = self._await(sock, rid)
            except socket.timeout:
                log.debug("no response from %s:%d (attempt %d)", self.host, self.port, attempt + 1)
                continue
            return self._check(resp)
        raise SnmpTimeout(f"no response from {self.host}:{self.port} after {self.retries + 1} attempts")

    def _await(self, sock, rid) -> Message:
        while True:
            data, _ = sock.recvfrom(65535)
            try:
                resp = decode_message(data)
            except BerError as exc:
                log.warning("dropping malformed response: %s", exc)
                continue
            if resp.request_id == rid and resp.pdu_type == PduType.RESPONSE:
                return resp
            log.debug("dropping stale response id %d", resp.request_id)

    def _check(self, resp: Message):
        if resp.community != self.community.encode():
            raise SnmpAuthError("response community does not match")
        status = resp.error_status
        if status == ErrorStatus.AUTHORIZATION_ERROR or status == ErrorStatus.NO_ACCESS:
            raise SnmpAuthError(f"agent refused access ({ErrorStatus(status).name})")
        if status != ErrorStatus.NO_ERROR:
            try:
                name = ErrorStatus(status).name
            except ValueError:
                name = str(status)
            raise SnmpError(f"agent returned error {name} at index {resp.error_index}")
        return resp.varbinds

    def get(self, oids):
        return self.request(PduType.GET, oids)

    def get_next(self, oids):
        return self.request(PduType.GET_NEXT, oids)

    def walk(self, root, max_rows: int = 10_000):
        """Yield (oid, value) for every instance under ``root`` via GETNEXT."""
        root = tuple(root)
        cur = root
        for _ in range(max_rows):
            vbs = self.get_next([cur])
            if len(vbs) != 1:
                raise SnmpError(f"expected one varbind in GETNEXT response, got {len(vbs)}")
            oid, val = vbs[0]
            if val.is_exception or oid[:len(root)] != root or oid <= cur:
                return
            yield oid, val
            cur = oid
        raise SnmpError(f"walk of {root} exceeded {max_rows} rows")
