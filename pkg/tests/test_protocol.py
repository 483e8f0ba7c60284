"""Wire-protocol tests: CRC, frame codec, and stream reassembly."""

import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmsim import protocol
from helmsim.kernels import crc16


def reference_crc16(data: bytes) -> int:
    """Independent bit-serial CRC-16/CCITT-FALSE (no table, no reuse)."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


class TestCrc16:
    def test_check_value(self):
        assert crc16(b"123456789") == 0x29B1

    def test_empty_is_initial_value(self):
        assert crc16(b"") == 0xFFFF

    def test_single_zero_byte(self):
        assert crc16(b"\x00") == reference_crc16(b"\x00")

    @given(st.binary(max_size=128))
    @settings(max_examples=300, deadline=None)
    def test_matches_bit_serial_reference(self, data):
        assert crc16(data) == reference_crc16(data)


def sample_messages():
    return [
        protocol.Heartbeat(mode=1, armed=1, health=0),
        protocol.State(t_ms=123456, x_mm=-2500, y_mm=99999, psi_cdeg=35500,
                       u_mms=512, v_mms=-40, r_cdps=-1234,
                       thr_l_permille=-1000, thr_r_permille=1000),
        protocol.Obstacle(t_ms=42, distances_cm=tuple([65535] * 71 + [408])),
        protocol.SetThrust(left_permille=-500, right_permille=500),
        protocol.SetVelHead(speed_mms=500, heading_cdeg=35500),
        protocol.SetWaypoint(x_mm=10000, y_mm=20000, accept_radius_cm=200),
        protocol.SetMode(mode=2),
        protocol.Arm(flag=1),
        protocol.Ack(acked_id=0x12, result=0),
        protocol.Opaque(msg_id=0x55, payload=b"\x01\x02\x03"),
    ]


message_strategy = st.one_of(
    st.builds(protocol.Heartbeat,
              mode=st.integers(0, 255), armed=st.integers(0, 1),
              health=st.integers(0, 255)),
    st.builds(protocol.State,
              t_ms=st.integers(0, 2**32 - 1),
              x_mm=st.integers(-2**31, 2**31 - 1),
              y_mm=st.integers(-2**31, 2**31 - 1),
              psi_cdeg=st.integers(0, 35999),
              u_mms=st.integers(-32768, 32767),
              v_mms=st.integers(-32768, 32767),
              r_cdps=st.integers(-32768, 32767),
              thr_l_permille=st.integers(-1000, 1000),
              thr_r_permille=st.integers(-1000, 1000)),
    st.builds(lambda t, d: protocol.Obstacle(t, tuple(d)),
              st.integers(0, 2**32 - 1),
              st.lists(st.integers(0, 65535), min_size=72, max_size=72)),
    st.builds(protocol.SetThrust,
              left_permille=st.integers(-1000, 1000),
              right_permille=st.integers(-1000, 1000)),
    st.builds(protocol.SetVelHead,
              speed_mms=st.integers(0, 65535), heading_cdeg=st.integers(0, 35999)),
    st.builds(protocol.SetWaypoint,
              x_mm=st.integers(-2**31, 2**31 - 1),
              y_mm=st.integers(-2**31, 2**31 - 1),
              accept_radius_cm=st.integers(0, 65535)),
    st.builds(protocol.SetMode, mode=st.integers(0, 255)),
    st.builds(protocol.Arm, flag=st.integers(0, 1)),
    st.builds(protocol.Ack, acked_id=st.integers(0, 255), result=st.integers(0, 2)),
    st.builds(protocol.Opaque, msg_id=st.sampled_from([0x03, 0x20, 0x55, 0xFE]),
              payload=st.binary(max_size=64)),
)


class TestEncode:
    def test_heartbeat_layout(self):
        frame = protocol.encode(protocol.Heartbeat(mode=1, armed=1, health=0), seq=0)
        assert len(frame) == 9
        assert frame[:4] == bytes([0xFA, 0x03, 0x00, 0x00])
        assert frame[4:7] == bytes([1, 1, 0])
        stored = frame[7] | (frame[8] << 8)
        assert stored == reference_crc16(frame[1:7])

    def test_obstacle_frame_length(self):
        frame = protocol.encode(protocol.Obstacle(0, tuple([0] * 72)), seq=3)
        assert len(frame) == 1 + 1 + 1 + 1 + 148 + 2

    def test_set_thrust_zero_payload(self):
        frame = protocol.encode(protocol.SetThrust(0, 0), seq=9)
        assert frame[4:8] == b"\x00\x00\x00\x00"

    def test_length_law(self):
        for msg in sample_messages():
            frame = protocol.encode(msg, seq=7)
            assert len(frame) == 6 + frame[1]

    def test_seq_wraps(self):
        frame = protocol.encode(protocol.Arm(1), seq=300)
        assert frame[2] == 300 % 256

    def test_psi_bound_enforced(self):
        msg = protocol.State(0, 0, 0, 36000, 0, 0, 0, 0, 0)
        with pytest.raises(protocol.EncodeError):
            protocol.encode(msg, 0)

    def test_field_overflow(self):
        msg = protocol.SetThrust(left_permille=40000, right_permille=0)
        with pytest.raises(protocol.EncodeError):
            protocol.encode(msg, 0)

    def test_oversized_opaque_payload(self):
        with pytest.raises(protocol.EncodeError):
            protocol.encode(protocol.Opaque(0x50, bytes(251)), 0)

    def test_obstacle_wrong_sector_count(self):
        with pytest.raises(protocol.EncodeError):
            protocol.encode(protocol.Obstacle(0, (1, 2, 3)), 0)


class TestDecode:
    def test_round_trip_every_variant(self):
        for msg in sample_messages():
            for seq in (0, 1, 255):
                decoded, got_seq = protocol.decode(protocol.encode(msg, seq))
                assert decoded == msg
                assert got_seq == seq

    @given(message_strategy, st.integers(0, 255))
    @settings(max_examples=500, deadline=None)
    def test_round_trip_property(self, msg, seq):
        decoded, got_seq = protocol.decode(protocol.encode(msg, seq))
        assert decoded == msg
        assert got_seq == seq

    def test_bad_magic(self):
        frame = bytearray(protocol.encode(protocol.Arm(1), 0))
        frame[0] = 0xFB
        with pytest.raises(protocol.BadMagic):
            protocol.decode(bytes(frame))

    def test_truncation_is_bad_length(self):
        frame = protocol.encode(protocol.SetMode(2), 0)
        for cut in range(len(frame)):
            with pytest.raises((protocol.BadLength, protocol.BadMagic)):
                protocol.decode(frame[:cut])

    def test_trailing_bytes_rejected(self):
        frame = protocol.encode(protocol.SetMode(2), 0)
        with pytest.raises(protocol.BadLength):
            protocol.decode(frame + b"\x00")

    def test_every_single_bit_flip_detected(self):
        frame = protocol.encode(
            protocol.SetWaypoint(x_mm=10000, y_mm=-3000, accept_radius_cm=200), 5)
        for byte_idx in range(1, len(frame)):  # magic flips raise BadMagic instead
            for bit in range(8):
                corrupted = bytearray(frame)
                corrupted[byte_idx] ^= 1 << bit
                with pytest.raises(protocol.DecodeError):
                    protocol.decode(bytes(corrupted))

    def test_unknown_id_preserved_opaque(self):
        frame = protocol.encode(protocol.Opaque(0x42, b"\xde\xad"), 1)
        decoded, _ = protocol.decode(frame)
        assert decoded == protocol.Opaque(0x42, b"\xde\xad")

    def test_known_id_wrong_payload_length(self):
        body = bytes([2, 0, protocol.Arm.MSG_ID, 1, 1])  # ARM with 2-byte payload
        frame = bytes([protocol.MAGIC]) + body + struct.pack("<H", reference_crc16(body))
        with pytest.raises(protocol.BadLength):
            protocol.decode(frame)


class TestStreamParser:
    def test_empty_feed(self):
        parser = protocol.StreamParser()
        assert parser.feed(b"") == []

    def test_two_frames_all_split_points(self):
        f1 = protocol.encode(protocol.Heartbeat(0, 0, 0), 1)
        f2 = protocol.encode(protocol.SetVelHead(1500, 24000), 2)
        stream = f1 + f2
        for i in range(len(stream) + 1):
            for j in range(i, len(stream) + 1):
                parser = protocol.StreamParser()
                got = []
                got += parser.feed(stream[:i])
                got += parser.feed(stream[i:j])
                got += parser.feed(stream[j:])
                assert [m for m, _ in got] == [protocol.Heartbeat(0, 0, 0),
                                               protocol.SetVelHead(1500, 24000)]
                assert [s for _, s in got] == [1, 2]

    def test_garbage_then_frame(self):
        rnd = random.Random(0xC0FFEE)
        garbage = bytes(rnd.randrange(256) for _ in range(100))
        frame = protocol.encode(protocol.SetMode(3), 9)
        parser = protocol.StreamParser()
        got = parser.feed(garbage + frame)
        assert (protocol.SetMode(3), 9) in got
        assert parser.diagnostics.resyncs >= 1

    def test_corrupt_frame_then_valid(self):
        good = protocol.encode(protocol.Arm(1), 4)
        bad = bytearray(good)
        bad[-1] ^= 0xFF
        parser = protocol.StreamParser()
        got = parser.feed(bytes(bad) + good)
        assert got == [(protocol.Arm(1), 4)]
        assert parser.diagnostics.bad_crc >= 1

    def test_fuzz_interleaved_garbage_recovers_all_frames(self):
        rnd = random.Random(1234)
        frames, stream = [], bytearray()
        for i in range(200):
            msg = protocol.SetWaypoint(rnd.randrange(-10**6, 10**6),
                                       rnd.randrange(-10**6, 10**6),
                                       rnd.randrange(0, 65536))
            frames.append((msg, i % 256))
            # garbage between frames, guaranteed magic-free so it cannot
            # capture the head of a real frame into a fake candidate
            stream += bytes(rnd.choice([b for b in range(256) if b != protocol.MAGIC])
                            for _ in range(rnd.randrange(0, 30)))
            stream += protocol.encode(msg, i)
        parser = protocol.StreamParser()
        got = []
        view = bytes(stream)
        k = 0
        while k < len(view):
            step = rnd.randrange(1, 64)
            got += parser.feed(view[k:k + step])
            k += step
        assert got == frames

    def test_fuzz_arbitrary_garbage_still_recovers_all_frames(self):
        # garbage may contain 0xFA: fake candidates must not swallow
        # real frames (single-byte resync guarantees progress)
        rnd = random.Random(99)
        frames, stream = [], bytearray()
        for i in range(150):
            msg = protocol.Heartbeat(rnd.randrange(6), rnd.randrange(2), 0)
            frames.append((msg, i % 256))
            stream += bytes(rnd.randrange(256) for _ in range(rnd.randrange(0, 20)))
            stream += protocol.encode(msg, i)
        parser = protocol.StreamParser()
        got = []
        view = bytes(stream)
        k = 0
        while k < len(view):
            step = rnd.randrange(1, 48)
            got += parser.feed(view[k:k + step])
            k += step
        got += parser.feed(b"\x00" * 300)  # flush any trailing fake candidate
        for item in frames:
            assert item in got

    def test_buffer_bounded(self):
        parser = protocol.StreamParser()
        parser.feed(bytes([protocol.MAGIC, 250]) + b"\x11" * 3000)
        assert len(parser._buf) <= protocol.StreamParser.MAX_BUFFER

    def test_overflow_counted_on_giant_partial_frame(self):
        parser = protocol.StreamParser()
        # an endless run of magic bytes forms nested fake candidates
        parser.feed(bytes([protocol.MAGIC, 250]) * 4000)
        assert len(parser._buf) <= protocol.StreamParser.MAX_BUFFER


class TestSiHelpers:
    def test_state_message_rounding(self):
        msg = protocol.state_message(t=1.0004, x=0.0015, y=-0.0015, psi=359.9999,
                                     u=0.5004, v=-0.5004, r=-1.006,
                                     thr_l=0.5006, thr_r=-0.5006)
        assert msg.t_ms == 1000
        assert msg.x_mm == 2  # 1.5 rounds half away from zero
        assert msg.y_mm == -2
        assert msg.psi_cdeg == 0  # 35999.99 -> 36000 -> wraps to 0
        assert msg.u_mms == 500
        assert msg.v_mms == -500
        assert msg.r_cdps == -101
        assert msg.thr_l_permille == 501
        assert msg.thr_r_permille == -501

    def test_position_range_guard(self):
        msg = protocol.state_message(t=0, x=2.2e6, y=0, psi=0, u=0, v=0, r=0,
                                     thr_l=0, thr_r=0)
        with pytest.raises(protocol.EncodeError):
            protocol.encode(msg, 0)

    def test_obstacle_helper(self):
        msg = protocol.obstacle_message(2.5, [protocol.NO_READING] * 72)
        assert msg.t_ms == 2500
        assert len(msg.distances_cm) == 72
