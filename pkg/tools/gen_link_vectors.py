#!/usr/bin/env python3
"""Regenerate the shared wire-protocol test vectors.

Writes ``link-test-vectors.json`` at the repository root: a JSON list of
``{frame, seq, message}`` entries produced by the reference codec. Any
independent implementation of protocol.md must decode every frame to the
recorded message and re-encode the message to the recorded bytes. The
list is deterministic (seeded) so regeneration is diff-stable; the test
suite fails if this file and the codec ever disagree.

Usage: python3 tools/gen_link_vectors.py [output-path]
"""

import json
import sys
from pathlib import Path
from random import Random

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from helmsim import protocol

WIRE_NAMES = {
    protocol.Heartbeat: "HEARTBEAT",
    protocol.State: "STATE",
    protocol.Obstacle: "OBSTACLE",
    protocol.SetThrust: "SET_THRUST",
    protocol.SetVelHead: "SET_VEL_HEAD",
    protocol.SetWaypoint: "SET_WAYPOINT",
    protocol.SetMode: "SET_MODE",
    protocol.Arm: "ARM",
    protocol.Ack: "ACK",
}


def edge_cases():
    """Hand-picked boundary values for every message type."""
    no_reading = protocol.NO_READING
    return [
        protocol.Heartbeat(0, 0, 0),
        protocol.Heartbeat(5, 1, 0xFF),
        protocol.State(0, 0, 0, 0, 0, 0, 0, 0, 0),
        protocol.State(2**32 - 1, 2**31 - 1, -(2**31), 35999,
                       32767, -32768, -1, 1000, -1000),
        protocol.Obstacle(0, tuple([no_reading] * 72)),
        protocol.Obstacle(123456, tuple(range(72))),
        protocol.SetThrust(1000, -1000),
        protocol.SetThrust(0, 0),
        protocol.SetVelHead(0, 0),
        protocol.SetVelHead(65535, 35999),
        protocol.SetWaypoint(-(2**31), 2**31 - 1, 0),
        protocol.SetWaypoint(10000, 20000, 200),
        protocol.SetMode(0),
        protocol.SetMode(5),
        protocol.Arm(0),
        protocol.Arm(1),
        protocol.Ack(0x10, 0),
        protocol.Ack(0x14, 1),
        protocol.Ack(0x13, 2),
    ]


def random_message(rng: Random):
    kind = rng.randrange(9)
    i16 = lambda: rng.randrange(-(1 << 15), 1 << 15)
    i32 = lambda: rng.randrange(-(1 << 31), 1 << 31)
    u16 = lambda: rng.randrange(1 << 16)
    u32 = lambda: rng.randrange(1 << 32)
    if kind == 0:
        return protocol.Heartbeat(rng.randrange(6), rng.randrange(2), rng.randrange(256))
    if kind == 1:
        return protocol.State(u32(), i32(), i32(), rng.randrange(36000),
                              i16(), i16(), i16(),
                              rng.randrange(-1000, 1001), rng.randrange(-1000, 1001))
    if kind == 2:
        return protocol.Obstacle(u32(), tuple(u16() for _ in range(72)))
    if kind == 3:
        return protocol.SetThrust(rng.randrange(-1000, 1001), rng.randrange(-1000, 1001))
    if kind == 4:
        return protocol.SetVelHead(u16(), rng.randrange(36000))
    if kind == 5:
        return protocol.SetWaypoint(i32(), i32(), u16())
    if kind == 6:
        return protocol.SetMode(rng.randrange(6))
    if kind == 7:
        return protocol.Arm(rng.randrange(2))
    return protocol.Ack(rng.choice((0x10, 0x11, 0x12, 0x13, 0x14)), rng.randrange(3))


def message_document(msg) -> dict:
    doc = {"type": WIRE_NAMES[type(msg)]}
    for field in type(msg).__dataclass_fields__:
        value = getattr(msg, field)
        doc[field] = list(value) if isinstance(value, tuple) else value
    return doc


def build_vectors() -> list:
    rng = Random(0x11E111)
    messages = edge_cases() + [random_message(rng) for _ in range(41)]
    vectors = []
    for index, msg in enumerate(messages):
        seq = (index * 37) % 256  # deterministic, exercises the full byte
        frame = protocol.encode(msg, seq)
        vectors.append({
            "frame": frame.hex(),
            "seq": seq,
            "message": message_document(msg),
        })
    return vectors


def render(vectors: list) -> str:
    return json.dumps(vectors, indent=1) + "\n"


def main() -> int:
    default = Path(__file__).resolve().parent.parent / "link-test-vectors.json"
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else default
    out.write_text(render(build_vectors()))
    print(f"wrote {out} ({len(build_vectors())} vectors)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
