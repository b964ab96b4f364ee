import { describe, expect, it } from "vitest";

import {
  crc32,
  decodeFrame,
  encodeFrame,
  fromBase64,
  toBase64,
  ProtocolError,
  type Message,
} from "../src/protocol";

function hex(bytes: Uint8Array): string {
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

function unhex(s: string): Uint8Array {
  const out = new Uint8Array(s.length / 2);
  for (let i = 0; i < out.length; i++) out[i] = parseInt(s.slice(2 * i, 2 * i + 2), 16);
  return out;
}

// frames produced by the service-side encoder; byte equality here is the
// cross-language compatibility contract
const SERVICE_FRAMES: { name: string; hex: string; msg: Message }[] = [
  {
    name: "imu without mag",
    hex: "575001012c00000000a77b838e1f06000000a0bf0000003fc3f51c410000003e000020c0000040400000c07f0000c07f0000c07fed60ec24",
    msg: {
      kind: "imu",
      tUs: 1723546812000000,
      accel: [-1.25, 0.5, Math.fround(9.81)],
      gyro: [0.125, -2.5, 3.0],
      mag: null,
    },
  },
  {
    name: "imu with mag",
    hex: "575001012c0000002a000000000000000000803f0000004000004040000080400000a0400000c0400000803e000040bf000048414221cc31",
    msg: {
      kind: "imu",
      tUs: 42,
      accel: [1, 2, 3],
      gyro: [4, 5, 6],
      mag: [0.25, -0.75, 12.5],
    },
  },
  {
    name: "velocity",
    hex: "57500102100000003f420f00000000003333333f000080bf43b4165d",
    msg: { kind: "velocity", tUs: 999999, v: Math.fround(0.7), omega: -1 },
  },
  { name: "ack", hex: "57500103010000000307ab3f93", msg: { kind: "ack", gestureId: 3 } },
  { name: "mode", hex: "57500104010000000193fa3460", msg: { kind: "mode", mode: 1 } },
  {
    name: "telemetry",
    hex: "575001051a0000007b2274797065223a227374617465222c22745f73223a312e357d58e39423",
    msg: {
      kind: "telemetry",
      data: new TextEncoder().encode('{"type":"state","t_s":1.5}'),
    },
  },
  { name: "hello", hex: "5750010601000000000e6bfb5a", msg: { kind: "hello", role: 0 } },
];

describe("crc32", () => {
  it("matches the reference check value", () => {
    expect(crc32(new TextEncoder().encode("123456789"))).toBe(0xcbf43926);
  });

  it("empty input is zero", () => {
    expect(crc32(new Uint8Array())).toBe(0);
  });
});

describe("service frame compatibility", () => {
  for (const { name, hex: frameHex, msg } of SERVICE_FRAMES) {
    it(`encodes ${name} byte-identically`, () => {
      expect(hex(encodeFrame(msg))).toBe(frameHex);
    });

    it(`decodes ${name}`, () => {
      expect(decodeFrame(unhex(frameHex))).toEqual(msg);
    });
  }
});

describe("round trips", () => {
  it("preserves fuzzy imu samples", () => {
    for (let i = 0; i < 200; i++) {
      const f = () => Math.fround(Math.sin(i * 17.3 + 0.1) * 50);
      const msg: Message = {
        kind: "imu",
        tUs: i * 20000,
        accel: [f(), Math.fround(i * 0.37), -f()],
        gyro: [Math.fround(f() / 3), 0, Math.fround(1e-4 * i)],
        mag: i % 2 ? null : [1, 2, 3],
      };
      expect(decodeFrame(encodeFrame(msg))).toEqual(msg);
    }
  });

  it("preserves telemetry bytes exactly", () => {
    const data = new Uint8Array(256).map((_, i) => i);
    const back = decodeFrame(encodeFrame({ kind: "telemetry", data }));
    expect(back.kind).toBe("telemetry");
    expect(hex((back as { data: Uint8Array }).data)).toBe(hex(data));
  });
});

describe("rejection", () => {
  it("rejects every single-bit corruption of a frame", () => {
    const frame = encodeFrame({ kind: "ack", gestureId: 2 });
    for (let bit = 0; bit < frame.length * 8; bit++) {
      const copy = frame.slice();
      copy[bit >> 3] ^= 1 << (bit & 7);
      expect(() => decodeFrame(copy)).toThrow(ProtocolError);
    }
  });

  it("rejects truncation", () => {
    const frame = encodeFrame({ kind: "mode", mode: 0 });
    for (let n = 0; n < frame.length; n++) {
      expect(() => decodeFrame(frame.subarray(0, n))).toThrow(ProtocolError);
    }
  });

  it("rejects out-of-range ack and role bytes", () => {
    const ack = encodeFrame({ kind: "ack", gestureId: 5 });
    // patch the payload and fix up the crc so only the range check trips
    ack[8] = 6;
    const dv = new DataView(ack.buffer);
    const body = ack.subarray(2, 9);
    dv.setUint32(9, crc32(body), true);
    expect(() => decodeFrame(ack)).toThrow(ProtocolError);
  });
});

describe("base64", () => {
  it("round-trips all byte values at every phase", () => {
    for (const len of [0, 1, 2, 3, 4, 255, 256, 257]) {
      const data = new Uint8Array(len).map((_, i) => (i * 7 + len) & 0xff);
      expect(hex(fromBase64(toBase64(data)))).toBe(hex(data));
    }
  });

  it("agrees with the platform encoder", () => {
    const data = new Uint8Array([0x57, 0x50, 0x01, 0x03, 0x00, 0xff, 0x80]);
    expect(toBase64(data)).toBe(Buffer.from(data).toString("base64"));
  });

  it("rejects garbage text", () => {
    expect(() => fromBase64("not!valid")).toThrow(ProtocolError);
  });
});
