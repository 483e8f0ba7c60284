// One WebSocket session to the vessel: decoding, liveness, command
// sequencing, ACK correlation, and auto-reconnect with backoff.

import {
  ACK_INVALID,
  ACK_OK,
  ACK_REJECTED,
  StreamDecoder,
  encodeFrame,
  messageId,
  type Ack,
  type Message,
} from "./protocol.js";

// The slice of the WebSocket API the session needs; injectable so tests
// can run without a browser (and node tests can supply their own).
export interface SocketLike {
  binaryType: string;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: ArrayBuffer }) => void) | null;
  send(data: Uint8Array): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type LinkStatus = "connecting" | "open" | "closed" | "waiting";

export type CommandState = "pending" | "accepted" | "rejected" | "invalid";

export interface CommandEntry {
  seq: number;
  msgId: number;
  label: string;
  state: CommandState;
  sentAt: number; // ms clock
}

export interface LinkCallbacks {
  onMessage?: (msg: Message, seq: number) => void;
  onStatus?: (status: LinkStatus, detail: string) => void;
  onCommand?: (entry: CommandEntry) => void;
}

export function ackStateOf(result: number): CommandState {
  if (result === ACK_OK) return "accepted";
  if (result === ACK_REJECTED) return "rejected";
  if (result === ACK_INVALID) return "invalid";
  return "invalid";
}

const RECONNECT_DELAYS_MS = [500, 1000, 2000, 4000, 8000];
const COMMAND_LOG_LIMIT = 50;

export interface LinkOptions {
  socketFactory?: SocketFactory;
  now?: () => number; // milliseconds
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  staleAfterSeconds?: number;
}

export class LinkSession {
  readonly url: string;
  private readonly makeSocket: SocketFactory;
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;
  private readonly callbacks: LinkCallbacks;
  readonly staleAfterSeconds: number;

  private socket: SocketLike | null = null;
  private decoder = new StreamDecoder();
  private seq = 0;
  private attempts = 0;
  private reconnectHandle: unknown = null;
  private closedByUser = false;

  status: LinkStatus = "closed";
  lastHeartbeatAt: number | null = null; // ms clock
  lastHeartbeat: { mode: number; armed: number; health: number } | null = null;
  commands: CommandEntry[] = [];

  constructor(url: string, callbacks: LinkCallbacks = {}, options: LinkOptions = {}) {
    this.url = url;
    this.callbacks = callbacks;
    this.makeSocket =
      options.socketFactory ??
      ((u: string) => new (globalThis as any).WebSocket(u) as SocketLike);
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as any));
    this.staleAfterSeconds = options.staleAfterSeconds ?? 3;
  }

  connect(): void {
    this.closedByUser = false;
    this.openSocket();
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectHandle !== null) {
      this.clearTimer(this.reconnectHandle);
      this.reconnectHandle = null;
    }
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed", "closed");
  }

  private openSocket(): void {
    this.decoder = new StreamDecoder();
    this.setStatus("connecting", `connecting to ${this.url}`);
    let socket: SocketLike;
    try {
      socket = this.makeSocket(this.url);
    } catch (err) {
      this.scheduleReconnect(`connect failed: ${err}`);
      return;
    }
    this.socket = socket;
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      this.attempts = 0;
      this.setStatus("open", "link up");
    };
    socket.onmessage = (event) => {
      if (!(event.data instanceof ArrayBuffer)) return;
      for (const frame of this.decoder.feed(new Uint8Array(event.data))) {
        this.dispatch(frame.message, frame.seq);
      }
    };
    socket.onerror = () => {
      // the close handler does the bookkeeping; errors always close
    };
    socket.onclose = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      if (!this.closedByUser) this.scheduleReconnect("link lost");
    };
  }

  private scheduleReconnect(reason: string): void {
    const delay =
      RECONNECT_DELAYS_MS[Math.min(this.attempts, RECONNECT_DELAYS_MS.length - 1)];
    this.attempts++;
    this.setStatus("waiting", `${reason}; retrying in ${delay / 1000} s`);
    this.reconnectHandle = this.setTimer(() => {
      this.reconnectHandle = null;
      if (!this.closedByUser) this.openSocket();
    }, delay);
  }

  private setStatus(status: LinkStatus, detail: string): void {
    this.status = status;
    this.callbacks.onStatus?.(status, detail);
  }

  private dispatch(msg: Message, seq: number): void {
    if (msg.type === "HEARTBEAT") {
      this.lastHeartbeatAt = this.now();
      this.lastHeartbeat = { mode: msg.mode, armed: msg.armed, health: msg.health };
    } else if (msg.type === "ACK") {
      this.resolveAck(msg);
    }
    this.callbacks.onMessage?.(msg, seq);
  }

  private resolveAck(ack: Ack): void {
    for (const entry of this.commands) {
      if (entry.state === "pending" && entry.msgId === ack.acked_id) {
        entry.state = ackStateOf(ack.result);
        this.callbacks.onCommand?.(entry);
        return;
      }
    }
  }

  // Age of the newest HEARTBEAT in seconds; Infinity before the first.
  heartbeatAge(): number {
    if (this.lastHeartbeatAt === null) return Infinity;
    return (this.now() - this.lastHeartbeatAt) / 1000;
  }

  isStale(): boolean {
    return this.heartbeatAge() > this.staleAfterSeconds;
  }

  get isOpen(): boolean {
    return this.status === "open";
  }

  // Send any frame; command frames additionally enter the ACK-tracked
  // command log.
  send(msg: Message, label?: string): CommandEntry | null {
    if (!this.socket || this.status !== "open") return null;
    const seq = this.seq;
    this.seq = (this.seq + 1) & 0xff;
    this.socket.send(encodeFrame(msg, seq));
    const id = messageId(msg);
    if (id < 0x10 || id > 0x14) return null;
    const entry: CommandEntry = {
      seq,
      msgId: id,
      label: label ?? msg.type,
      state: "pending",
      sentAt: this.now(),
    };
    this.commands.push(entry);
    if (this.commands.length > COMMAND_LOG_LIMIT) {
      this.commands = this.commands.slice(-COMMAND_LOG_LIMIT);
    }
    this.callbacks.onCommand?.(entry);
    return entry;
  }

  // Keepalive: the vessel counts any intact inbound frame as link
  // liveness, so the station heartbeats once a second.
  sendKeepalive(): void {
    this.send({ type: "HEARTBEAT", mode: 0, armed: 0, health: 0 });
  }
}
