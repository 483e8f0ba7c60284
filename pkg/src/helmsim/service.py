"""Network link service: the live simulator behind TCP and WebSocket.

One asyncio task owns the simulation and ticks it at the configured
time scale; every connected client sees the same broadcast telemetry
(HEARTBEAT / STATE / OBSTACLE frames) and may submit command frames.
Commands are queued in arrival order and applied at the start of the
next control tick, so a served run with no traffic is tick-for-tick
identical to a scripted :func:`helmsim.mission.run_mission`.

Transports carry identical frame bytes:

* raw TCP (default port 14650): frames flow as a plain byte stream;
* WebSocket (default port 14651, path ``/link``): one binary WebSocket
  message per frame.  The same HTTP listener can also serve a static
  browser bundle under ``/ui`` when given a directory.

The WebSocket side is a minimal in-house RFC 6455 server (handshake,
masking, ping/pong, fragmentation, close); only binary messages are
interpreted.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import math
import mimetypes
from collections import deque
from pathlib import Path
from typing import Deque, Mapping, Optional, Set, Tuple, Union

from . import protocol
from .config import MissionConfig, load_config
from .control import (ControlMode, ManualSetpoint, VelHeadSetpoint,
                      WaypointSetpoint)
from .errors import ModeMismatch
from .mission import (CONTROL_DT, RunLog, SimSession, collect_log,
                      default_setpoint)

__all__ = [
    "SimService",
    "serve",
    "HEALTH_NO_FIX",
    "HEALTH_LOW_BATTERY",
    "HEALTH_LINK_STALE",
    "HEALTH_SHALLOW",
]

#: HEARTBEAT health bit assignments.
HEALTH_NO_FIX = 0x01
HEALTH_LOW_BATTERY = 0x02
HEALTH_LINK_STALE = 0x04
HEALTH_SHALLOW = 0x08

#: Inbound message types answered with an ACK and applied to the sim.
COMMAND_TYPES = (protocol.SetThrust, protocol.SetVelHead,
                 protocol.SetWaypoint, protocol.SetMode, protocol.Arm)

_WS_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_SEND_BUFFER = 1 << 20  # stalled clients are dropped past this


# --- client bookkeeping ---------------------------------------------------------

class _Client:
    """One connected peer; owns its outbound sequence counter."""

    def __init__(self, kind: str, writer: asyncio.StreamWriter):
        self.kind = kind  # "tcp" or "ws"
        self.writer = writer
        self.parser = protocol.StreamParser()
        self.seq = 0
        self.closed = False

    def send_message(self, message) -> None:
        frame = protocol.encode(message, self.seq)
        self.seq = (self.seq + 1) & 0xFF
        self.send_raw(frame)

    def send_raw(self, frame: bytes) -> None:
        if self.closed or self.writer.is_closing():
            self.closed = True
            return
        transport = self.writer.transport
        if transport.get_write_buffer_size() > _MAX_SEND_BUFFER:
            # a wedged reader must not stall the simulation
            self.closed = True
            transport.abort()
            return
        if self.kind == "ws":
            frame = _ws_encode(frame, opcode=0x2)
        self.writer.write(frame)

    def close(self) -> None:
        self.closed = True
        if not self.writer.is_closing():
            self.writer.close()


# --- WebSocket framing ----------------------------------------------------------

def _ws_encode(payload: bytes, opcode: int) -> bytes:
    head = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < 1 << 16:
        head.append(126)
        head += n.to_bytes(2, "big")
    else:
        head.append(127)
        head += n.to_bytes(8, "big")
    return bytes(head) + payload


async def _ws_read_frame(reader: asyncio.StreamReader):
    """Read one frame; returns (fin, opcode, payload) with mask removed."""
    header = await reader.readexactly(2)
    fin = bool(header[0] & 0x80)
    opcode = header[0] & 0x0F
    masked = bool(header[1] & 0x80)
    length = header[1] & 0x7F
    if length == 126:
        length = int.from_bytes(await reader.readexactly(2), "big")
    elif length == 127:
        length = int.from_bytes(await reader.readexactly(8), "big")
    key = await reader.readexactly(4) if masked else None
    payload = await reader.readexactly(length) if length else b""
    if not masked:
        # clients are required to mask; anything else is a protocol error
        raise ConnectionError("unmasked client frame")
    payload = bytes(b ^ key[i & 3] for i, b in enumerate(payload))
    return fin, opcode, payload


def _ws_accept_token(key: str) -> str:
    digest = hashlib.sha1(key.strip().encode("ascii") + _WS_GUID).digest()
    return base64.b64encode(digest).decode("ascii")


# --- tiny HTTP responses ---------------------------------------------------------

def _http_response(status: str, body: bytes = b"",
                   content_type: str = "text/plain; charset=utf-8",
                   extra: str = "") -> bytes:
    head = (f"HTTP/1.1 {status}\r\n"
            f"Content-Type: {content_type}\r\n"
            f"Content-Length: {len(body)}\r\n"
            f"Connection: close\r\n{extra}\r\n")
    return head.encode("ascii") + body


class SimService:
    """Live simulation with telemetry fan-out and a command queue.

    The simulation advances on its own task once :meth:`start` runs.
    ``timescale`` scales simulated seconds per wall second; zero (or
    infinity) runs unpaced, as fast as the loop turns over, which is
    what the tests use.
    """

    def __init__(self, config: Union[MissionConfig, Mapping, str, Path,
                                     None] = None, *,
                 tcp_port: Optional[int] = None,
                 ws_port: Optional[int] = None,
                 timescale: float = 1.0,
                 seed: Optional[int] = None,
                 ui_root: Union[str, Path, None] = None,
                 host: str = "127.0.0.1"):
        if not isinstance(config, MissionConfig):
            config = load_config(config if config is not None
                                 else "bep-default")
        self.config = config
        self.session = SimSession(config, seed=seed)
        self.timescale = float(timescale)
        self.host = host
        self.tcp_port = config.service.tcp_port if tcp_port is None \
            else int(tcp_port)
        self.ws_port = config.service.ws_port if ws_port is None \
            else int(ws_port)
        self.ui_root = Path(ui_root).resolve() if ui_root is not None \
            else None

        self._clients: Set[_Client] = set()
        self._commands: Deque[Tuple[_Client, int, object]] = deque()
        self._link_started = False
        self._last_rx_t = 0.0
        self._tcp_server: Optional[asyncio.AbstractServer] = None
        self._ws_server: Optional[asyncio.AbstractServer] = None
        self._sim_task: Optional[asyncio.Task] = None
        self._finished = asyncio.Event()
        self.terminal: Optional[str] = None

    # -- lifecycle ----------------------------------------------------------

    async def start(self) -> None:
        """Bind both listeners and launch the simulation task."""
        self._tcp_server = await asyncio.start_server(
            self._handle_tcp, self.host, self.tcp_port)
        self._ws_server = await asyncio.start_server(
            self._handle_http, self.host, self.ws_port)
        # pick up ephemeral port assignments (port 0 in tests)
        self.tcp_port = self._tcp_server.sockets[0].getsockname()[1]
        self.ws_port = self._ws_server.sockets[0].getsockname()[1]
        self._sim_task = asyncio.create_task(self._sim_loop())

    async def stop(self) -> None:
        """Halt the simulation and drop every connection."""
        if self._sim_task is not None:
            self._sim_task.cancel()
            try:
                await self._sim_task
            except asyncio.CancelledError:
                pass
            self._sim_task = None
        for server in (self._tcp_server, self._ws_server):
            if server is not None:
                server.close()
                await server.wait_closed()
        self._tcp_server = self._ws_server = None
        for client in list(self._clients):
            client.close()
        self._clients.clear()
        self._finished.set()

    async def wait_finished(self) -> Optional[str]:
        """Block until the sim reaches a terminal state (or stop())."""
        await self._finished.wait()
        return self.terminal

    def log(self) -> RunLog:
        """Snapshot the run so far in the standard log shape."""
        return collect_log(self.session,
                           reason=self.terminal or "stopped")

    @property
    def ws_url(self) -> str:
        return f"ws://{self.host}:{self.ws_port}/link"

    # -- simulation task ------------------------------------------------------

    async def _sim_loop(self) -> None:
        loop = asyncio.get_running_loop()
        svc = self.config.service
        paced = self.timescale > 0 and math.isfinite(self.timescale)
        deadline = loop.time()
        try:
            while True:
                self._apply_commands()
                if self._link_started:
                    self.session.link_age = max(
                        0.0, self.session.t - self._last_rx_t)
                record = self.session.tick()
                if record is None:  # plan finished at this tick boundary
                    self.terminal = self.session.terminal
                    break
                index = self.session.tick_index - 1
                if index % svc.telemetry_every == 0:
                    self._broadcast_state(record)
                if index % svc.heartbeat_every == 0:
                    self._broadcast(self._heartbeat(record))
                if self.session.terminal is not None:  # failsafe landed
                    self.terminal = self.session.terminal
                    break
                if paced:
                    deadline += CONTROL_DT / self.timescale
                    delay = deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        deadline = loop.time()  # fell behind; no spiral
                else:
                    await asyncio.sleep(0)  # let network I/O interleave
        finally:
            self._finished.set()

    def _heartbeat(self, record) -> protocol.Heartbeat:
        controller = self.session.controller
        health = 0
        if not self.config.service.position_fix:
            health |= HEALTH_NO_FIX
        if self.session.battery.fraction < \
                controller.config.battery_threshold:
            health |= HEALTH_LOW_BATTERY
        if self.session.link_age > controller.config.link_timeout:
            health |= HEALTH_LINK_STALE
        if record.shallow:
            health |= HEALTH_SHALLOW
        return protocol.Heartbeat(mode=int(controller.mode),
                                  armed=int(controller.armed),
                                  health=health)

    def _broadcast_state(self, record) -> None:
        side = self.session.controller.thruster.max_static_thrust
        state = protocol.state_message(
            record.t, record.x, record.y, record.psi,
            record.u, record.v, record.r,
            record.act_l_n / side, record.act_r_n / side)
        self._broadcast(state)
        sectors = self.session.last_sectors
        if sectors is not None:
            self._broadcast(protocol.obstacle_message(
                record.t, sectors.distances_cm))

    def _broadcast(self, message) -> None:
        for client in list(self._clients):
            client.send_message(message)
            if client.closed:
                self._clients.discard(client)

    # -- command handling ------------------------------------------------------

    def _apply_commands(self) -> None:
        while self._commands:
            client, _seq, message = self._commands.popleft()
            result = self._execute(message)
            client.send_message(protocol.Ack(acked_id=message.MSG_ID,
                                             result=result))

    def _execute(self, message) -> int:
        controller = self.session.controller
        t = self.session.t
        if isinstance(message, protocol.SetThrust):
            if max(abs(message.left_permille),
                   abs(message.right_permille)) > 1000:
                return protocol.ACK_INVALID
            if controller.mode != ControlMode.Manual:
                return protocol.ACK_REJECTED
            controller.setpoint = ManualSetpoint(
                message.left_permille / 1000.0,
                message.right_permille / 1000.0)
            return protocol.ACK_OK
        if isinstance(message, protocol.SetVelHead):
            if message.heading_cdeg >= 36000:
                return protocol.ACK_INVALID
            if controller.mode != ControlMode.GuidedVelocityHeading:
                return protocol.ACK_REJECTED
            controller.setpoint = VelHeadSetpoint(
                message.speed_mms / 1000.0, message.heading_cdeg / 100.0)
            return protocol.ACK_OK
        if isinstance(message, protocol.SetWaypoint):
            if controller.mode not in (ControlMode.GuidedPosition,
                                       ControlMode.Loiter):
                return protocol.ACK_REJECTED
            radius = message.accept_radius_cm / 100.0 \
                or controller.config.accept_radius
            waypoint = WaypointSetpoint(message.x_mm / 1000.0,
                                        message.y_mm / 1000.0, radius)
            if controller.mode == ControlMode.Loiter:
                controller.set_mode(ControlMode.GuidedPosition, waypoint,
                                    t, "command")
            else:
                # a fresh waypoint preempts the current one mid-flight
                controller.setpoint = waypoint
            return protocol.ACK_OK
        if isinstance(message, protocol.SetMode):
            try:
                mode = ControlMode(message.mode)
            except ValueError:
                return protocol.ACK_INVALID
            setpoint = default_setpoint(self.session, mode)
            try:
                controller.set_mode(mode, setpoint, t, "command")
            except ModeMismatch:
                return protocol.ACK_INVALID
            return protocol.ACK_OK
        if isinstance(message, protocol.Arm):
            if message.flag not in (0, 1):
                return protocol.ACK_INVALID
            if message.flag == 0:
                controller.disarm()
                return protocol.ACK_OK
            armed = controller.arm(self.config.service.position_fix)
            return protocol.ACK_OK if armed else protocol.ACK_REJECTED
        return protocol.ACK_INVALID

    def _on_frame(self, client: _Client, message, seq: int) -> None:
        # any intact inbound frame proves the link is alive
        self._last_rx_t = self.session.t
        self._link_started = True
        if isinstance(message, COMMAND_TYPES):
            self._commands.append((client, seq, message))

    # -- TCP transport ---------------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        client = _Client("tcp", writer)
        self._clients.add(client)
        try:
            while True:
                chunk = await reader.read(4096)
                if not chunk:
                    break
                for message, seq in client.parser.feed(chunk):
                    self._on_frame(client, message, seq)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._clients.discard(client)
            client.close()

    # -- HTTP / WebSocket transport ---------------------------------------------

    async def _handle_http(self, reader: asyncio.StreamReader,
                           writer: asyncio.StreamWriter) -> None:
        try:
            raw = await reader.readuntil(b"\r\n\r\n")
        except (asyncio.IncompleteReadError, asyncio.LimitOverrunError,
                ConnectionError):
            writer.close()
            return
        try:
            request_line, headers = self._parse_request(raw)
            method, target = request_line
        except ValueError:
            writer.write(_http_response("400 Bad Request", b"bad request\n"))
            await _drain_quietly(writer)
            writer.close()
            return
        path = target.split("?", 1)[0]
        if path == "/link" and \
                "websocket" in headers.get("upgrade", "").lower():
            await self._handle_websocket(reader, writer, headers)
            return
        self._serve_static(writer, method, path)
        await _drain_quietly(writer)
        writer.close()

    @staticmethod
    def _parse_request(raw: bytes):
        text = raw.decode("latin-1")
        lines = text.split("\r\n")
        parts = lines[0].split(" ")
        if len(parts) != 3:
            raise ValueError("malformed request line")
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                key, value = line.split(":", 1)
                headers[key.strip().lower()] = value.strip()
        return (parts[0], parts[1]), headers

    async def _handle_websocket(self, reader, writer, headers) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            writer.write(_http_response("400 Bad Request",
                                        b"missing websocket key\n"))
            await _drain_quietly(writer)
            writer.close()
            return
        writer.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: "
            + _ws_accept_token(key).encode("ascii") + b"\r\n\r\n")
        client = _Client("ws", writer)
        self._clients.add(client)
        fragments = bytearray()
        fragmented_binary = False
        try:
            while True:
                fin, opcode, payload = await _ws_read_frame(reader)
                if opcode == 0x8:  # close: echo and finish
                    writer.write(_ws_encode(payload[:2], opcode=0x8))
                    break
                if opcode == 0x9:  # ping
                    writer.write(_ws_encode(payload, opcode=0xA))
                    continue
                if opcode == 0xA:  # pong
                    continue
                if opcode in (0x1, 0x2):
                    if fin and opcode == 0x2:
                        self._feed_ws(client, bytes(payload))
                    elif not fin:
                        fragments = bytearray(payload)
                        fragmented_binary = opcode == 0x2
                elif opcode == 0x0:  # continuation
                    fragments.extend(payload)
                    if fin:
                        if fragmented_binary:
                            self._feed_ws(client, bytes(fragments))
                        fragments = bytearray()
                        fragmented_binary = False
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._clients.discard(client)
            client.close()

    def _feed_ws(self, client: _Client, data: bytes) -> None:
        for message, seq in client.parser.feed(data):
            self._on_frame(client, message, seq)

    def _serve_static(self, writer, method: str, path: str) -> None:
        if method != "GET":
            writer.write(_http_response("405 Method Not Allowed",
                                        b"GET only\n"))
            return
        if self.ui_root is None:
            writer.write(_http_response(
                "404 Not Found", b"no ui bundle configured\n"))
            return
        if path == "/":
            writer.write(_http_response(
                "302 Found", b"", extra="Location: /ui/\r\n"))
            return
        if path != "/ui" and not path.startswith("/ui/"):
            writer.write(_http_response("404 Not Found", b"not found\n"))
            return
        relative = path[3:].lstrip("/") or "index.html"
        if relative.endswith("/"):
            relative += "index.html"
        target = (self.ui_root / relative).resolve()
        inside = target == self.ui_root or \
            self.ui_root in target.parents
        if not inside or not target.is_file():
            writer.write(_http_response("404 Not Found", b"not found\n"))
            return
        content_type = mimetypes.guess_type(target.name)[0] \
            or "application/octet-stream"
        writer.write(_http_response("200 OK", target.read_bytes(),
                                    content_type=content_type))


async def _drain_quietly(writer: asyncio.StreamWriter) -> None:
    try:
        await writer.drain()
    except ConnectionError:
        pass


async def _serve_async(service: SimService) -> Optional[str]:
    await service.start()
    try:
        return await service.wait_finished()
    finally:
        await service.stop()


def serve(config: Union[MissionConfig, Mapping, str, Path, None] = None,
          *, tcp_port: Optional[int] = None, ws_port: Optional[int] = None,
          timescale: float = 1.0, seed: Optional[int] = None,
          ui_root: Union[str, Path, None] = None,
          host: str = "127.0.0.1") -> Optional[str]:
    """Run the service until its mission ends (or forever without one).

    Returns the terminal reason ("completed", "failsafe", ...) or None
    when interrupted.
    """
    service = SimService(config, tcp_port=tcp_port, ws_port=ws_port,
                         timescale=timescale, seed=seed, ui_root=ui_root,
                         host=host)
    try:
        return asyncio.run(_serve_async(service))
    except KeyboardInterrupt:
        return None
