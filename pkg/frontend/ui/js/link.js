// One WebSocket session to the vessel: decoding, liveness, command
// sequencing, ACK correlation, and auto-reconnect with backoff.
import { ACK_INVALID, ACK_OK, ACK_REJECTED, StreamDecoder, encodeFrame, messageId, } from "./protocol.js";
export function ackStateOf(result) {
    if (result === ACK_OK)
        return "accepted";
    if (result === ACK_REJECTED)
        return "rejected";
    if (result === ACK_INVALID)
        return "invalid";
    return "invalid";
}
const RECONNECT_DELAYS_MS = [500, 1000, 2000, 4000, 8000];
const COMMAND_LOG_LIMIT = 50;
export class LinkSession {
    constructor(url, callbacks = {}, options = {}) {
        this.socket = null;
        this.decoder = new StreamDecoder();
        this.seq = 0;
        this.attempts = 0;
        this.reconnectHandle = null;
        this.closedByUser = false;
        this.status = "closed";
        this.lastHeartbeatAt = null; // ms clock
        this.lastHeartbeat = null;
        this.commands = [];
        this.url = url;
        this.callbacks = callbacks;
        this.makeSocket =
            options.socketFactory ??
                ((u) => new globalThis.WebSocket(u));
        this.now = options.now ?? (() => Date.now());
        this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
        this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h));
        this.staleAfterSeconds = options.staleAfterSeconds ?? 3;
    }
    connect() {
        this.closedByUser = false;
        this.openSocket();
    }
    close() {
        this.closedByUser = true;
        if (this.reconnectHandle !== null) {
            this.clearTimer(this.reconnectHandle);
            this.reconnectHandle = null;
        }
        this.socket?.close();
        this.socket = null;
        this.setStatus("closed", "closed");
    }
    openSocket() {
        this.decoder = new StreamDecoder();
        this.setStatus("connecting", `connecting to ${this.url}`);
        let socket;
        try {
            socket = this.makeSocket(this.url);
        }
        catch (err) {
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
            if (!(event.data instanceof ArrayBuffer))
                return;
            for (const frame of this.decoder.feed(new Uint8Array(event.data))) {
                this.dispatch(frame.message, frame.seq);
            }
        };
        socket.onerror = () => {
            // the close handler does the bookkeeping; errors always close
        };
        socket.onclose = () => {
            if (this.socket !== socket)
                return;
            this.socket = null;
            if (!this.closedByUser)
                this.scheduleReconnect("link lost");
        };
    }
    scheduleReconnect(reason) {
        const delay = RECONNECT_DELAYS_MS[Math.min(this.attempts, RECONNECT_DELAYS_MS.length - 1)];
        this.attempts++;
        this.setStatus("waiting", `${reason}; retrying in ${delay / 1000} s`);
        this.reconnectHandle = this.setTimer(() => {
            this.reconnectHandle = null;
            if (!this.closedByUser)
                this.openSocket();
        }, delay);
    }
    setStatus(status, detail) {
        this.status = status;
        this.callbacks.onStatus?.(status, detail);
    }
    dispatch(msg, seq) {
        if (msg.type === "HEARTBEAT") {
            this.lastHeartbeatAt = this.now();
            this.lastHeartbeat = { mode: msg.mode, armed: msg.armed, health: msg.health };
        }
        else if (msg.type === "ACK") {
            this.resolveAck(msg);
        }
        this.callbacks.onMessage?.(msg, seq);
    }
    resolveAck(ack) {
        for (const entry of this.commands) {
            if (entry.state === "pending" && entry.msgId === ack.acked_id) {
                entry.state = ackStateOf(ack.result);
                this.callbacks.onCommand?.(entry);
                return;
            }
        }
    }
    // Age of the newest HEARTBEAT in seconds; Infinity before the first.
    heartbeatAge() {
        if (this.lastHeartbeatAt === null)
            return Infinity;
        return (this.now() - this.lastHeartbeatAt) / 1000;
    }
    isStale() {
        return this.heartbeatAge() > this.staleAfterSeconds;
    }
    get isOpen() {
        return this.status === "open";
    }
    // Send any frame; command frames additionally enter the ACK-tracked
    // command log.
    send(msg, label) {
        if (!this.socket || this.status !== "open")
            return null;
        const seq = this.seq;
        this.seq = (this.seq + 1) & 0xff;
        this.socket.send(encodeFrame(msg, seq));
        const id = messageId(msg);
        if (id < 0x10 || id > 0x14)
            return null;
        const entry = {
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
    sendKeepalive() {
        this.send({ type: "HEARTBEAT", mode: 0, armed: 0, health: 0 });
    }
}
