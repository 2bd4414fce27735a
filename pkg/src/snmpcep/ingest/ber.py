"""Minimal BER codec for SNMPv2c messages (GET, GETNEXT and their responses)."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any

INTEGER = 0x02
OCTET_STRING = 0x04
NULL = 0x05
OBJECT_ID = 0x06
SEQUENCE = 0x30
IP_ADDRESS = 0x40
COUNTER32 = 0x41
GAUGE32 = 0x42
TIMETICKS = 0x43
OPAQUE = 0x44
COUNTER64 = 0x46
NO_SUCH_OBJECT = 0x80
NO_SUCH_INSTANCE = 0x81
END_OF_MIB_VIEW = 0x82

SNMP_V2C = 1


class PduType(IntEnum):
    GET = 0xA0
    GET_NEXT = 0xA1
    RESPONSE = 0xA2
    SET = 0xA3
    GET_BULK = 0xA5
    REPORT = 0xA8


class ErrorStatus(IntEnum):
    NO_ERROR = 0
    TOO_BIG = 1
    NO_SUCH_NAME = 2
    BAD_VALUE = 3
    READ_ONLY = 4
    GEN_ERR = 5
    NO_ACCESS = 6
    AUTHORIZATION_ERROR = 16


class BerError(ValueError):
    pass


@dataclass(frozen=True)
class Value:
    """A tagged varbind value; ``value`` is an int, bytes, OID tuple or None."""

    tag: int
    value: Any = None

    @property
    def is_exception(self) -> bool:
        return self.tag in (NO_SUCH_OBJECT, NO_SUCH_INSTANCE, END_OF_MIB_VIEW)

    @property
    def is_numeric(self) -> bool:
        return self.tag in (INTEGER, COUNTER32, GAUGE32, TIMETICKS, COUNTER64)


@dataclass
class Message:
    community: bytes
    pdu_type: PduType
    request_id: int
    varbinds: list = field(default_factory=list)  # [(oid tuple, Value)]
    error_status: int = 0
    error_index: int = 0
    version: int = SNMP_V2C


# --------------------------------------------------------------------------
# encoding


def _length(n: int) -> bytes:
    if n < 0x80:
        return bytes([n])
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return bytes([0x80 | len(body)]) + body


def _tlv(tag: int, body: bytes) -> bytes:
    return bytes([tag]) + _length(len(body)) + body


def _int_body(n: int, unsigned: bool = False) -> bytes:
    if unsigned:
        if n < 0:
            raise BerError(f"negative value {n} for unsigned type")
        # leading zero byte keeps the high bit clear
        return n.to_bytes(n.bit_length() // 8 + 1, "big")
    size = max(1, (n + (n < 0)).bit_length() // 8 + 1)
    return n.to_bytes(size, "big", signed=True)


def _subid(n: int) -> bytes:
    out = [n & 0x7F]
    n >>= 7
    while n:
        out.append(0x80 | (n & 0x7F))
        n >>= 7
    return bytes(reversed(out))


def encode_oid(oid) -> bytes:
    oid = tuple(oid)
    if len(oid) < 2 or oid[0] > 2 or (oid[0] < 2 and oid[1] > 39):
        raise BerError(f"cannot encode OID {oid}")
    body = _subid(oid[0] * 40 + oid[1]) + b"".join(_subid(p) for p in oid[2:])
    return _tlv(OBJECT_ID, body)


def encode_value(v: Value) -> bytes:
    if v.tag == INTEGER:
        return _tlv(INTEGER, _int_body(v.value))
    if v.tag in (COUNTER32, GAUGE32, TIMETICKS, COUNTER64):
        return _tlv(v.tag, _int_body(v.value, unsigned=True))
    if v.tag in (OCTET_STRING, IP_ADDRESS, OPAQUE):
        return _tlv(v.tag, bytes(v.value))
    if v.tag == OBJECT_ID:
        return encode_oid(v.value)
    if v.tag in (NULL, NO_SUCH_OBJECT, NO_SUCH_INSTANCE, END_OF_MIB_VIEW):
        return _tlv(v.tag, b"")
    raise BerError(f"cannot encode value tag 0x{v.tag:02x}")


def encode_message(msg: Message) -> bytes:
    vbs = b"".join(_tlv(SEQUENCE, encode_oid(oid) + encode_value(val)) for oid, val in msg.varbinds)
    pdu = _tlv(int(msg.pdu_type),
               _tlv(INTEGER, _int_body(msg.request_id))
               + _tlv(INTEGER, _int_body(msg.error_status))
               + _tlv(INTEGER, _int_body(msg.error_index))
               + _tlv(SEQUENCE, vbs))
    return _tlv(SEQUENCE, _tlv(INTEGER, _int_body(msg.version)) + _tlv(OCTET_STRING, msg.community) + pdu)


# --------------------------------------------------------------------------
# decoding


def _read_tlv(data: bytes, pos: int):
    if pos + 2 > len(data):
        raise BerError("truncated header")
    tag = data[pos]
    first = data[pos + 1]
    pos += 2
    if first & 0x80:
        n = first & 0x7F
        if n == 0 or n > 4 or pos + n > len(data):
            raise BerError("unsupported or truncated length")
        length = int.from_bytes(data[pos:pos + n], "big")
        pos += n
    else:
        length = first
    end = pos + length
    if end > len(data):
        raise BerError("truncated value")
    return tag, data[pos:end], end


def _expect(data, pos, tag):
    got, body, end = _read_tlv(data, pos)
    if got != tag:
        raise BerError(f"expected tag 0x{tag:02x}, got 0x{got:02x}")
    return body, end


def decode_oid(body: bytes) -> tuple[int, ...]:
    if not body:
        raise BerError("empty OID")
    subids = []
    n = 0
    for i, b in enumerate(body):
        n = (n << 7) | (b & 0x7F)
        if not b & 0x80:
            subids.append(n)
            n = 0
        elif i == len(body) - 1:
            raise BerError("truncated OID sub-identifier")
    first = subids[0]
    head = (first // 40, first % 40) if first < 80 else (2, first - 80)
    return head + tuple(subids[1:])


def _decode_value(tag: int, body: bytes) -> Value:
    if tag == INTEGER:
        return Value(tag, int.from_bytes(body, "big", signed=True) if body else 0)
    if tag in (COUNTER32, GAUGE32, TIMETICKS, COUNTER64):
        return Value(tag, int.from_bytes(body, "big") if body else 0)
    if tag == OBJECT_ID:
        return Value(tag, decode_oid(body))
    if tag in (NULL, NO_SUCH_OBJECT, NO_SUCH_INSTANCE, END_OF_MIB_VIEW):
        return Value(tag)
    return Value(tag, bytes(body))


def decode_message(data: bytes) -> Message:
    body, end = _expect(data, 0, SEQUENCE)
    if end != len(data):
        raise BerError("trailing bytes after message")
    ver, pos = _expect(body, 0, INTEGER)
    community, pos = _expect(body, pos, OCTET_STRING)
    tag, pdu, pos = _read_tlv(body, pos)
    try:
        pdu_type = PduType(tag)
    except ValueError:
        raise BerError(f"unknown PDU type 0x{tag:02x}") from None
    rid, p = _expect(pdu, 0, INTEGER)
    status, p = _expect(pdu, p, INTEGER)
    index, p = _expect(pdu, p, INTEGER)
    vbl, p = _expect(pdu, p, SEQUENCE)
    varbinds = []
    q = 0
    while q < len(vbl):
        vb, q = _expect(vbl, q, SEQUENCE)
        oid_body, r = _expect(vb, 0, OBJECT_ID)
        vtag, vbody, _ = _read_tlv(vb, r)
        varbinds.append((decode_oid(oid_body), _decode_value(vtag, vbody)))

    def num(b):
        return int.from_bytes(b, "big", signed=True) if b else 0

    return Message(bytes(community), pdu_type, num(rid), varbinds, num(status), num(index), num(ver))
