/**
 * Binary frame codec, byte-compatible with the service.
 *
 * Frame layout: 0x57 0x50 magic, version 0x01, kind byte, u32 LE payload
 * length, payload, then CRC-32 (zlib polynomial) LE over kind + length +
 * payload. The WebSocket bridge carries one frame per message; text
 * messages hold the frame base64-encoded, binary messages hold it raw.
 */

export const MAGIC0 = 0x57;
export const MAGIC1 = 0x50;
export const VERSION = 0x01;
export const HEADER_LEN = 8;
export const CRC_LEN = 4;

export const KIND_IMU = 0x01;
export const KIND_VELOCITY = 0x02;
export const KIND_GESTURE_ACK = 0x03;
export const KIND_MODE = 0x04;
export const KIND_TELEMETRY = 0x05;
export const KIND_HELLO = 0x06;

export const ROLE_OPERATOR = 0;
export const ROLE_ROBOT = 1;
export const ROLE_VIEWER = 2;

export const MODE_AUTONOMOUS = 0;
export const MODE_TELEOPERATED = 1;

export interface ImuSampleMsg {
  kind: "imu";
  tUs: number;
  accel: [number, number, number];
  gyro: [number, number, number];
  mag: [number, number, number] | null;
}

export interface VelocityCmdMsg {
  kind: "velocity";
  tUs: number;
  v: number;
  omega: number;
}

export interface GestureAckMsg {
  kind: "ack";
  gestureId: number;
}

export interface ModeMsg {
  kind: "mode";
  mode: number;
}

export interface TelemetryMsg {
  kind: "telemetry";
  data: Uint8Array;
}

export interface HelloMsg {
  kind: "hello";
  role: number;
}

export type Message =
  | ImuSampleMsg
  | VelocityCmdMsg
  | GestureAckMsg
  | ModeMsg
  | TelemetryMsg
  | HelloMsg;

export class ProtocolError extends Error {}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function payloadFor(msg: Message): { kind: number; payload: Uint8Array } {
  switch (msg.kind) {
    case "imu": {
      const payload = new Uint8Array(8 + 9 * 4);
      const dv = new DataView(payload.buffer);
      if (msg.tUs < 0 || !Number.isSafeInteger(msg.tUs)) {
        throw new ProtocolError("imu timestamp out of range");
      }
      dv.setBigUint64(0, BigInt(msg.tUs), true);
      const mag = msg.mag ?? [NaN, NaN, NaN];
      const values = [...msg.accel, ...msg.gyro, ...mag];
      for (let i = 0; i < 9; i++) {
        dv.setFloat32(8 + 4 * i, values[i], true);
      }
      return { kind: KIND_IMU, payload };
    }
    case "velocity": {
      const payload = new Uint8Array(8 + 2 * 4);
      const dv = new DataView(payload.buffer);
      dv.setBigUint64(0, BigInt(msg.tUs), true);
      dv.setFloat32(8, msg.v, true);
      dv.setFloat32(12, msg.omega, true);
      return { kind: KIND_VELOCITY, payload };
    }
    case "ack":
      return { kind: KIND_GESTURE_ACK, payload: Uint8Array.of(msg.gestureId) };
    case "mode":
      return { kind: KIND_MODE, payload: Uint8Array.of(msg.mode) };
    case "telemetry":
      return { kind: KIND_TELEMETRY, payload: msg.data };
    case "hello":
      return { kind: KIND_HELLO, payload: Uint8Array.of(msg.role) };
  }
}

export function encodeFrame(msg: Message): Uint8Array {
  const { kind, payload } = payloadFor(msg);
  const frame = new Uint8Array(HEADER_LEN + payload.length + CRC_LEN);
  const dv = new DataView(frame.buffer);
  frame[0] = MAGIC0;
  frame[1] = MAGIC1;
  frame[2] = VERSION;
  frame[3] = kind;
  dv.setUint32(4, payload.length, true);
  frame.set(payload, HEADER_LEN);
  const crc = crc32(frame.subarray(3, HEADER_LEN + payload.length));
  dv.setUint32(HEADER_LEN + payload.length, crc, true);
  return frame;
}

function parsePayload(kind: number, payload: Uint8Array): Message {
  const dv = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  switch (kind) {
    case KIND_IMU: {
      if (payload.length !== 44) throw new ProtocolError("bad imu length");
      const f: number[] = [];
      for (let i = 0; i < 9; i++) f.push(dv.getFloat32(8 + 4 * i, true));
      const mag = f.slice(6, 9);
      return {
        kind: "imu",
        tUs: Number(dv.getBigUint64(0, true)),
        accel: [f[0], f[1], f[2]],
        gyro: [f[3], f[4], f[5]],
        mag: mag.every(Number.isNaN) ? null : (mag as [number, number, number]),
      };
    }
    case KIND_VELOCITY: {
      if (payload.length !== 16) throw new ProtocolError("bad velocity length");
      return {
        kind: "velocity",
        tUs: Number(dv.getBigUint64(0, true)),
        v: dv.getFloat32(8, true),
        omega: dv.getFloat32(12, true),
      };
    }
    case KIND_GESTURE_ACK: {
      if (payload.length !== 1 || payload[0] < 1 || payload[0] > 5) {
        throw new ProtocolError("bad gesture ack");
      }
      return { kind: "ack", gestureId: payload[0] };
    }
    case KIND_MODE: {
      if (payload.length !== 1 || payload[0] > 1) {
        throw new ProtocolError("bad mode byte");
      }
      return { kind: "mode", mode: payload[0] };
    }
    case KIND_TELEMETRY:
      return { kind: "telemetry", data: payload.slice() };
    case KIND_HELLO: {
      if (payload.length !== 1 || payload[0] > 2) {
        throw new ProtocolError("bad role byte");
      }
      return { kind: "hello", role: payload[0] };
    }
    default:
      throw new ProtocolError(`unknown kind ${kind}`);
  }
}

/** Decode exactly one frame; throws on anything malformed. */
export function decodeFrame(buf: Uint8Array): Message {
  if (buf.length < HEADER_LEN + CRC_LEN) throw new ProtocolError("short frame");
  if (buf[0] !== MAGIC0 || buf[1] !== MAGIC1) throw new ProtocolError("bad magic");
  if (buf[2] !== VERSION) throw new ProtocolError("bad version");
  const dv = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const length = dv.getUint32(4, true);
  if (buf.length !== HEADER_LEN + length + CRC_LEN) {
    throw new ProtocolError("frame length mismatch");
  }
  const stored = dv.getUint32(HEADER_LEN + length, true);
  if (crc32(buf.subarray(3, HEADER_LEN + length)) !== stored) {
    throw new ProtocolError("crc mismatch");
  }
  return parsePayload(buf[3], buf.subarray(HEADER_LEN, HEADER_LEN + length));
}

const B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
const B64_REV = (() => {
  const rev = new Int8Array(128).fill(-1);
  for (let i = 0; i < B64.length; i++) rev[B64.charCodeAt(i)] = i;
  return rev;
})();

// hand-rolled so the same module runs in the browser and under node
export function toBase64(data: Uint8Array): string {
  let out = "";
  for (let i = 0; i < data.length; i += 3) {
    const b0 = data[i];
    const b1 = i + 1 < data.length ? data[i + 1] : 0;
    const b2 = i + 2 < data.length ? data[i + 2] : 0;
    out += B64[b0 >> 2] + B64[((b0 & 3) << 4) | (b1 >> 4)];
    out += i + 1 < data.length ? B64[((b1 & 15) << 2) | (b2 >> 6)] : "=";
    out += i + 2 < data.length ? B64[b2 & 63] : "=";
  }
  return out;
}

export function fromBase64(text: string): Uint8Array {
  const clean = text.replace(/=+$/, "");
  const out = new Uint8Array(Math.floor((clean.length * 3) / 4));
  let acc = 0;
  let bits = 0;
  let j = 0;
  for (let i = 0; i < clean.length; i++) {
    const code = clean.charCodeAt(i);
    const val = code < 128 ? B64_REV[code] : -1;
    if (val < 0) throw new ProtocolError("invalid base64");
    acc = (acc << 6) | val;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out[j++] = (acc >> bits) & 0xff;
    }
  }
  return out;
}
