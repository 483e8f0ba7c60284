// helm-link codec, implemented against protocol.md (see repo root).
// Field names match the shared test-vector file exactly so decoded
// objects can be deep-compared against it.
export const MAGIC = 0xfa;
export const MAX_PAYLOAD = 250;
export const NO_READING = 0xffff;
export const SECTOR_COUNT = 72;
export const MSG_HEARTBEAT = 0x00;
export const MSG_STATE = 0x01;
export const MSG_OBSTACLE = 0x02;
export const MSG_SET_THRUST = 0x10;
export const MSG_SET_VEL_HEAD = 0x11;
export const MSG_SET_WAYPOINT = 0x12;
export const MSG_SET_MODE = 0x13;
export const MSG_ARM = 0x14;
export const MSG_ACK = 0x7f;
export const ACK_OK = 0;
export const ACK_REJECTED = 1;
export const ACK_INVALID = 2;
export const MODE_NAMES = [
    "Manual",
    "GuidedVelocityHeading",
    "GuidedPosition",
    "Loiter",
    "Hold",
    "ReturnToLaunch",
];
// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xor-out.
export function crc16(data, crc = 0xffff) {
    for (let i = 0; i < data.length; i++) {
        crc ^= data[i] << 8;
        for (let bit = 0; bit < 8; bit++) {
            crc = crc & 0x8000 ? ((crc << 1) ^ 0x1021) & 0xffff : (crc << 1) & 0xffff;
        }
    }
    return crc;
}
const MESSAGE_IDS = {
    HEARTBEAT: MSG_HEARTBEAT,
    STATE: MSG_STATE,
    OBSTACLE: MSG_OBSTACLE,
    SET_THRUST: MSG_SET_THRUST,
    SET_VEL_HEAD: MSG_SET_VEL_HEAD,
    SET_WAYPOINT: MSG_SET_WAYPOINT,
    SET_MODE: MSG_SET_MODE,
    ARM: MSG_ARM,
    ACK: MSG_ACK,
};
export function messageId(msg) {
    return msg.type === "UNKNOWN" ? msg.msg_id : MESSAGE_IDS[msg.type];
}
function payloadOf(msg) {
    let view;
    switch (msg.type) {
        case "HEARTBEAT": {
            const out = new Uint8Array(3);
            out[0] = msg.mode;
            out[1] = msg.armed;
            out[2] = msg.health;
            return out;
        }
        case "STATE": {
            const out = new Uint8Array(24);
            view = new DataView(out.buffer);
            view.setUint32(0, msg.t_ms, true);
            view.setInt32(4, msg.x_mm, true);
            view.setInt32(8, msg.y_mm, true);
            view.setUint16(12, msg.psi_cdeg, true);
            view.setInt16(14, msg.u_mms, true);
            view.setInt16(16, msg.v_mms, true);
            view.setInt16(18, msg.r_cdps, true);
            view.setInt16(20, msg.thr_l_permille, true);
            view.setInt16(22, msg.thr_r_permille, true);
            return out;
        }
        case "OBSTACLE": {
            if (msg.distances_cm.length !== SECTOR_COUNT) {
                throw new Error(`obstacle message needs ${SECTOR_COUNT} distances`);
            }
            const out = new Uint8Array(4 + 2 * SECTOR_COUNT);
            view = new DataView(out.buffer);
            view.setUint32(0, msg.t_ms, true);
            for (let i = 0; i < SECTOR_COUNT; i++) {
                view.setUint16(4 + 2 * i, msg.distances_cm[i], true);
            }
            return out;
        }
        case "SET_THRUST": {
            const out = new Uint8Array(4);
            view = new DataView(out.buffer);
            view.setInt16(0, msg.left_permille, true);
            view.setInt16(2, msg.right_permille, true);
            return out;
        }
        case "SET_VEL_HEAD": {
            const out = new Uint8Array(4);
            view = new DataView(out.buffer);
            view.setUint16(0, msg.speed_mms, true);
            view.setUint16(2, msg.heading_cdeg, true);
            return out;
        }
        case "SET_WAYPOINT": {
            const out = new Uint8Array(10);
            view = new DataView(out.buffer);
            view.setInt32(0, msg.x_mm, true);
            view.setInt32(4, msg.y_mm, true);
            view.setUint16(8, msg.accept_radius_cm, true);
            return out;
        }
        case "SET_MODE":
            return Uint8Array.of(msg.mode);
        case "ARM":
            return Uint8Array.of(msg.flag);
        case "ACK":
            return Uint8Array.of(msg.acked_id, msg.result);
        case "UNKNOWN":
            return msg.payload;
    }
}
export function encodeFrame(msg, seq) {
    const payload = payloadOf(msg);
    if (payload.length > MAX_PAYLOAD) {
        throw new Error(`payload of ${payload.length} bytes exceeds ${MAX_PAYLOAD}`);
    }
    const frame = new Uint8Array(6 + payload.length);
    frame[0] = MAGIC;
    frame[1] = payload.length;
    frame[2] = seq & 0xff;
    frame[3] = messageId(msg);
    frame.set(payload, 4);
    const crc = crc16(frame.subarray(1, 4 + payload.length));
    frame[4 + payload.length] = crc & 0xff;
    frame[5 + payload.length] = crc >> 8;
    return frame;
}
const PAYLOAD_SIZES = {
    [MSG_HEARTBEAT]: 3,
    [MSG_STATE]: 24,
    [MSG_OBSTACLE]: 148,
    [MSG_SET_THRUST]: 4,
    [MSG_SET_VEL_HEAD]: 4,
    [MSG_SET_WAYPOINT]: 10,
    [MSG_SET_MODE]: 1,
    [MSG_ARM]: 1,
    [MSG_ACK]: 2,
};
function messageFromPayload(msgId, payload) {
    const expected = PAYLOAD_SIZES[msgId];
    if (expected === undefined) {
        return { type: "UNKNOWN", msg_id: msgId, payload: payload.slice() };
    }
    if (payload.length !== expected) {
        return null; // framing was valid but the body size is wrong: drop
    }
    const view = new DataView(payload.buffer, payload.byteOffset, payload.length);
    switch (msgId) {
        case MSG_HEARTBEAT:
            return { type: "HEARTBEAT", mode: payload[0], armed: payload[1], health: payload[2] };
        case MSG_STATE:
            return {
                type: "STATE",
                t_ms: view.getUint32(0, true),
                x_mm: view.getInt32(4, true),
                y_mm: view.getInt32(8, true),
                psi_cdeg: view.getUint16(12, true),
                u_mms: view.getInt16(14, true),
                v_mms: view.getInt16(16, true),
                r_cdps: view.getInt16(18, true),
                thr_l_permille: view.getInt16(20, true),
                thr_r_permille: view.getInt16(22, true),
            };
        case MSG_OBSTACLE: {
            const distances = new Array(SECTOR_COUNT);
            for (let i = 0; i < SECTOR_COUNT; i++) {
                distances[i] = view.getUint16(4 + 2 * i, true);
            }
            return { type: "OBSTACLE", t_ms: view.getUint32(0, true), distances_cm: distances };
        }
        case MSG_SET_THRUST:
            return {
                type: "SET_THRUST",
                left_permille: view.getInt16(0, true),
                right_permille: view.getInt16(2, true),
            };
        case MSG_SET_VEL_HEAD:
            return {
                type: "SET_VEL_HEAD",
                speed_mms: view.getUint16(0, true),
                heading_cdeg: view.getUint16(2, true),
            };
        case MSG_SET_WAYPOINT:
            return {
                type: "SET_WAYPOINT",
                x_mm: view.getInt32(0, true),
                y_mm: view.getInt32(4, true),
                accept_radius_cm: view.getUint16(8, true),
            };
        case MSG_SET_MODE:
            return { type: "SET_MODE", mode: payload[0] };
        case MSG_ARM:
            return { type: "ARM", flag: payload[0] };
        case MSG_ACK:
            return { type: "ACK", acked_id: payload[0], result: payload[1] };
        default:
            return null;
    }
}
// Decode exactly one complete frame (throws on any defect).
export function decodeFrame(data) {
    if (data.length < 6)
        throw new Error(`frame needs at least 6 bytes, got ${data.length}`);
    if (data[0] !== MAGIC)
        throw new Error(`bad magic 0x${data[0].toString(16)}`);
    const len = data[1];
    if (len > MAX_PAYLOAD)
        throw new Error(`payload length ${len} exceeds ${MAX_PAYLOAD}`);
    if (data.length !== 6 + len)
        throw new Error(`frame should be ${6 + len} bytes`);
    const stored = data[4 + len] | (data[5 + len] << 8);
    const computed = crc16(data.subarray(1, 4 + len));
    if (stored !== computed) {
        throw new Error(`crc mismatch: stored 0x${stored.toString(16)}, computed 0x${computed.toString(16)}`);
    }
    const message = messageFromPayload(data[3], data.subarray(4, 4 + len));
    if (message === null)
        throw new Error(`message 0x${data[3].toString(16)} has wrong payload size`);
    return { message, seq: data[2] };
}
// Incremental parser over an arbitrary byte stream. On any defect it
// discards a single byte and rescans, so intact frames embedded in
// garbage are always recovered.
export class StreamDecoder {
    constructor() {
        this.buffer = new Uint8Array(0);
        this.resyncs = 0;
        this.frames = 0;
    }
    feed(chunk) {
        const merged = new Uint8Array(this.buffer.length + chunk.length);
        merged.set(this.buffer);
        merged.set(chunk, this.buffer.length);
        this.buffer = merged;
        const out = [];
        let start = 0;
        while (true) {
            // hunt for the next plausible frame start
            while (start < this.buffer.length && this.buffer[start] !== MAGIC) {
                start++;
                this.resyncs++;
            }
            if (this.buffer.length - start < 2)
                break;
            const len = this.buffer[start + 1];
            if (len > MAX_PAYLOAD) {
                start++;
                this.resyncs++;
                continue;
            }
            const total = 6 + len;
            if (this.buffer.length - start < total)
                break; // wait for more bytes
            const candidate = this.buffer.subarray(start, start + total);
            const stored = candidate[total - 2] | (candidate[total - 1] << 8);
            if (crc16(candidate.subarray(1, total - 2)) !== stored) {
                start++;
                this.resyncs++;
                continue;
            }
            const message = messageFromPayload(candidate[3], candidate.subarray(4, 4 + len));
            if (message !== null) {
                out.push({ message, seq: candidate[2] });
                this.frames++;
            }
            start += total;
        }
        this.buffer = this.buffer.slice(start);
        return out;
    }
}
