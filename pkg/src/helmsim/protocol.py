"""Framed binary telemetry/command link ("helm-link").

Frame layout (all multi-byte fields little-endian)::

    offset  size  field
    0       1     magic 0xFA
    1       1     payload length N (0..250)
    2       1     sequence number (wrapping u8)
    3       1     message id
    4       N     payload
    4+N     2     CRC-16/CCITT-FALSE over bytes 1..4+N-1 (length, seq,
                  id, payload), poly 0x1021, init 0xFFFF, no reflection,
                  no final xor

Encoded size is therefore always 6 + N.  Messages use integer wire
units (millimeters, centidegrees, per-mille) so frames are fixed-size
and platform-independent; helpers at the bottom build telemetry
messages from SI floats with round-half-away-from-zero.

Encoding validates field ranges (EncodeError); decoding is strict about
framing (BadMagic/BadLength/BadCrc) but preserves unknown message ids
as ``Opaque`` for forward compatibility.  ``StreamParser`` reassembles
frames from arbitrary chunk boundaries and resynchronizes on the magic
byte after corruption, never losing an intact frame.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .kernels import crc16

__all__ = [
    "MAGIC", "MAX_PAYLOAD",
    "EncodeError", "DecodeError", "BadMagic", "BadLength", "BadCrc",
    "Heartbeat", "State", "Obstacle", "SetThrust", "SetVelHead",
    "SetWaypoint", "SetMode", "Arm", "Ack", "Opaque",
    "encode", "decode", "StreamParser", "ParserDiagnostics",
    "state_message", "obstacle_message",
    "NO_READING",
]

MAGIC = 0xFA
MAX_PAYLOAD = 250
_HEADER = 4  # magic, length, seq, id
_CRC_LEN = 2

#: sector-array sentinel for "no reading" (also used by perception)
NO_READING = 0xFFFF


class EncodeError(ValueError):
    """A message field is outside its representable wire range."""


class DecodeError(ValueError):
    """Base class for framing errors."""


class BadMagic(DecodeError):
    """First byte is not the frame magic."""


class BadLength(DecodeError):
    """Frame length field, buffer size, or payload size is inconsistent."""


class BadCrc(DecodeError):
    """Checksum mismatch."""


@dataclass(frozen=True)
class Heartbeat:
    MSG_ID = 0x00
    _STRUCT = struct.Struct("<BBB")
    mode: int
    armed: int
    health: int


@dataclass(frozen=True)
class State:
    MSG_ID = 0x01
    _STRUCT = struct.Struct("<IiiHhhhhh")
    t_ms: int
    x_mm: int
    y_mm: int
    psi_cdeg: int  # 0..35999
    u_mms: int
    v_mms: int
    r_cdps: int
    thr_l_permille: int
    thr_r_permille: int


@dataclass(frozen=True)
class Obstacle:
    MSG_ID = 0x02
    _STRUCT = struct.Struct("<I72H")
    t_ms: int
    distances_cm: tuple  # 72 u16 values, 65535 = no reading


@dataclass(frozen=True)
class SetThrust:
    MSG_ID = 0x10
    _STRUCT = struct.Struct("<hh")
    left_permille: int
    right_permille: int


@dataclass(frozen=True)
class SetVelHead:
    MSG_ID = 0x11
    _STRUCT = struct.Struct("<HH")
    speed_mms: int
    heading_cdeg: int


@dataclass(frozen=True)
class SetWaypoint:
    MSG_ID = 0x12
    _STRUCT = struct.Struct("<iiH")
    x_mm: int
    y_mm: int
    accept_radius_cm: int


@dataclass(frozen=True)
class SetMode:
    MSG_ID = 0x13
    _STRUCT = struct.Struct("<B")
    mode: int


@dataclass(frozen=True)
class Arm:
    MSG_ID = 0x14
    _STRUCT = struct.Struct("<B")
    flag: int


@dataclass(frozen=True)
class Ack:
    MSG_ID = 0x7F
    _STRUCT = struct.Struct("<BB")
    acked_id: int
    result: int  # 0 ok, 1 rejected, 2 invalid


ACK_OK = 0
ACK_REJECTED = 1
ACK_INVALID = 2


@dataclass(frozen=True)
class Opaque:
    """A frame with an unrecognized message id, preserved verbatim."""
    msg_id: int
    payload: bytes


_MESSAGE_TYPES = {
    cls.MSG_ID: cls
    for cls in (Heartbeat, State, Obstacle, SetThrust, SetVelHead,
                SetWaypoint, SetMode, Arm, Ack)
}


def _to_payload(msg) -> tuple[int, bytes]:
    """(msg_id, payload bytes) for any message, validating ranges."""
    if isinstance(msg, Opaque):
        if not 0 <= msg.msg_id <= 0xFF:
            raise EncodeError("message id must fit in one byte")
        return msg.msg_id, bytes(msg.payload)
    cls = type(msg)
    try:
        if cls is Obstacle:
            if len(msg.distances_cm) != 72:
                raise EncodeError("obstacle message needs exactly 72 distances")
            payload = cls._STRUCT.pack(msg.t_ms, *msg.distances_cm)
        elif cls is State:
            if not 0 <= msg.psi_cdeg < 36000:
                raise EncodeError(f"psi_cdeg {msg.psi_cdeg} outside [0, 36000)")
            payload = cls._STRUCT.pack(msg.t_ms, msg.x_mm, msg.y_mm,
                                       msg.psi_cdeg, msg.u_mms, msg.v_mms,
                                       msg.r_cdps, msg.thr_l_permille,
                                       msg.thr_r_permille)
        else:
            values = [getattr(msg, f) for f in cls.__dataclass_fields__]
            payload = cls._STRUCT.pack(*values)
    except struct.error as exc:
        raise EncodeError(f"{cls.__name__} field out of range: {exc}") from None
    return cls.MSG_ID, payload


def _from_payload(msg_id: int, payload: bytes):
    cls = _MESSAGE_TYPES.get(msg_id)
    if cls is None:
        return Opaque(msg_id, payload)
    if len(payload) != cls._STRUCT.size:
        raise BadLength(
            f"message 0x{msg_id:02X} payload must be {cls._STRUCT.size} "
            f"bytes, got {len(payload)}"
        )
    values = cls._STRUCT.unpack(payload)
    if cls is Obstacle:
        return Obstacle(values[0], tuple(values[1:]))
    return cls(*values)


def encode(msg, seq: int) -> bytes:
    """Serialize one message into a complete frame."""
    msg_id, payload = _to_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise EncodeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    body = bytes((len(payload), seq & 0xFF, msg_id)) + payload
    return bytes((MAGIC,)) + body + struct.pack("<H", crc16(body))


def decode(data: bytes):
    """Parse exactly one frame; returns (message, seq)."""
    if len(data) < _HEADER + _CRC_LEN:
        raise BadLength(f"frame needs at least 6 bytes, got {len(data)}")
    if data[0] != MAGIC:
        raise BadMagic(f"expected magic 0x{MAGIC:02X}, got 0x{data[0]:02X}")
    payload_len = data[1]
    if payload_len > MAX_PAYLOAD:
        raise BadLength(f"payload length {payload_len} exceeds {MAX_PAYLOAD}")
    total = _HEADER + payload_len + _CRC_LEN
    if len(data) != total:
        raise BadLength(f"frame should be {total} bytes, got {len(data)}")
    stored = data[total - 2] | (data[total - 1] << 8)
    computed = crc16(data[1:total - 2])
    if stored != computed:
        raise BadCrc(f"crc mismatch: stored 0x{stored:04X}, computed 0x{computed:04X}")
    seq = data[2]
    message = _from_payload(data[3], bytes(data[_HEADER:_HEADER + payload_len]))
    return message, seq


@dataclass
class ParserDiagnostics:
    frames: int = 0
    resyncs: int = 0  # times the scan had to discard bytes to re-lock
    garbage_bytes: int = 0
    bad_crc: int = 0
    bad_length: int = 0
    overflows: int = 0


class StreamParser:
    """Incremental frame reassembler with resynchronization.

    Feed arbitrary byte chunks; complete, valid frames come back in
    order.  On any error the parser drops a single byte and rescans
    from the next magic candidate, which guarantees an intact frame
    embedded in garbage is always recovered.  The internal buffer is
    bounded; oldest bytes are discarded on overflow.
    """

    MAX_BUFFER = 4096

    def __init__(self):
        self._buf = bytearray()
        self.diagnostics = ParserDiagnostics()

    def feed(self, chunk: bytes) -> list:
        """Consume a chunk; return list of (message, seq) completed by it."""
        diag = self.diagnostics
        buf = self._buf
        buf.extend(chunk)
        if len(buf) > self.MAX_BUFFER:
            dropped = len(buf) - self.MAX_BUFFER
            del buf[:dropped]
            diag.garbage_bytes += dropped
            diag.overflows += 1
        out = []
        while True:
            if buf and buf[0] != MAGIC:
                idx = buf.find(MAGIC)
                if idx < 0:
                    diag.garbage_bytes += len(buf)
                    buf.clear()
                    break
                diag.garbage_bytes += idx
                diag.resyncs += 1
                del buf[:idx]
            if len(buf) < 2:
                break
            payload_len = buf[1]
            if payload_len > MAX_PAYLOAD:
                diag.bad_length += 1
                diag.resyncs += 1
                del buf[:1]
                continue
            total = _HEADER + payload_len + _CRC_LEN
            if len(buf) < total:
                break  # wait for the rest of the candidate frame
            try:
                out.append(decode(bytes(buf[:total])))
            except BadCrc:
                diag.bad_crc += 1
                diag.resyncs += 1
                del buf[:1]
                continue
            except BadLength:
                diag.bad_length += 1
                diag.resyncs += 1
                del buf[:1]
                continue
            diag.frames += 1
            del buf[:total]
        return out


# --- SI-float helpers --------------------------------------------------------


def _round_half_away(x: float) -> int:
    if x >= 0:
        return math.floor(x + 0.5)
    return math.ceil(x - 0.5)


def state_message(t: float, x: float, y: float, psi: float, u: float,
                  v: float, r: float, thr_l: float, thr_r: float) -> State:
    """Build a STATE message from SI floats.

    t seconds, x/y meters, psi degrees [0,360), u/v m/s, r deg/s,
    thr_l/thr_r normalized thrust fraction in [-1, 1] carried as
    per-mille.  Values are rounded half away from zero; anything not
    representable on the wire raises EncodeError via ``encode``.
    """
    return State(
        t_ms=_round_half_away(t * 1000.0),
        x_mm=_round_half_away(x * 1000.0),
        y_mm=_round_half_away(y * 1000.0),
        psi_cdeg=_round_half_away(psi * 100.0) % 36000,
        u_mms=_round_half_away(u * 1000.0),
        v_mms=_round_half_away(v * 1000.0),
        r_cdps=_round_half_away(r * 100.0),
        thr_l_permille=_round_half_away(thr_l * 1000.0),
        thr_r_permille=_round_half_away(thr_r * 1000.0),
    )


def obstacle_message(t: float, distances_cm) -> Obstacle:
    """Build an OBSTACLE message from a 72-entry centimeter sequence."""
    return Obstacle(t_ms=_round_half_away(t * 1000.0),
                    distances_cm=tuple(int(d) for d in distances_cm))
