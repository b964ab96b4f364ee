/**
 * Synthesizes the IMU stream a real wrist sensor would produce.
 *
 * Steady input becomes the gravity vector for the emulated roll/pitch
 * (the exact inverse of the gravity decomposition on the receiving end),
 * angle changes become matching gyro rates so the remote complementary
 * filter tracks without lag, and gesture triggers splice a canonical
 * gesture epoch on top of the frozen gravity baseline.
 */

import type { ImuSampleMsg } from "./protocol";

export const GRAVITY = 9.81;
export const HALF_PI = Math.PI / 2;

/* roll at the pitch poles is unobservable from gravity alone; staying
   this far inside keeps the decomposition well-conditioned and the
   round-trip error an order of magnitude under the 1e-3 budget */
export const PITCH_POLE_MARGIN = 5e-4;

export enum Gesture {
  Up = 1,
  Down = 2,
  Circle = 3,
  Left = 4,
  Right = 5,
}

export const GESTURE_LABELS: Record<Gesture, string> = {
  [Gesture.Up]: "up",
  [Gesture.Down]: "down",
  [Gesture.Circle]: "circle",
  [Gesture.Left]: "left",
  [Gesture.Right]: "right",
};

export const EPOCH_SECONDS = 1.2;
const ACCEL_AMPLITUDE = 4.0;
const GYRO_AMPLITUDE = 3.0;

export function clampAngle(a: number): number {
  return Math.min(HALF_PI, Math.max(-HALF_PI, a));
}

/** Gravity reading for an emulated orientation; inverse of
 *  roll = atan2(ay, az), pitch = atan2(-ax, hypot(ay, az)). */
export function gravityAccel(roll: number, pitch: number): [number, number, number] {
  const r = clampAngle(roll);
  const limit = HALF_PI - PITCH_POLE_MARGIN;
  const p = Math.min(limit, Math.max(-limit, pitch));
  return [
    -GRAVITY * Math.sin(p),
    GRAVITY * Math.cos(p) * Math.sin(r),
    GRAVITY * Math.cos(p) * Math.cos(r),
  ];
}

/** Six-channel waveform of one gesture repetition, n samples long. */
export function classSignature(gesture: Gesture, n: number): number[][] {
  const rows: number[][] = Array.from({ length: 6 }, () => new Array<number>(n));
  const a = ACCEL_AMPLITUDE;
  const g = GYRO_AMPLITUDE;
  for (let i = 0; i < n; i++) {
    const tau = n === 1 ? 0 : i / (n - 1);
    const env = Math.sin(Math.PI * tau) ** 2;
    const w1 = Math.sin(2 * Math.PI * tau) * env;
    const w2 = Math.cos(2 * Math.PI * tau) * env;
    const w3 = Math.sin(4 * Math.PI * tau) * env;
    const w4 = Math.cos(4 * Math.PI * tau) * env;
    let col: number[];
    switch (gesture) {
      case Gesture.Up:
      case Gesture.Down: {
        col = [0.5 * a * w3, 0.3 * a * w2, a * w1, 0.4 * g * w2, g * w1, 0.3 * g * w3];
        if (gesture === Gesture.Down) col = col.map((v) => -v);
        break;
      }
      case Gesture.Left:
      case Gesture.Right: {
        col = [0.4 * a * w2, a * w1, 0.3 * a * w3, g * w1, 0.4 * g * w3, 0.5 * g * w2];
        if (gesture === Gesture.Right) col = col.map((v) => -v);
        break;
      }
      case Gesture.Circle:
        col = [
          0.3 * a * w4,
          0.3 * a * w3,
          0.25 * a * w2,
          g * Math.sin(2 * Math.PI * tau),
          g * Math.cos(2 * Math.PI * tau),
          0.4 * g * w1,
        ];
        break;
    }
    for (let c = 0; c < 6; c++) rows[c][i] = col[c];
  }
  return rows;
}

interface Splice {
  data: number[][];
  index: number;
  baseAccel: [number, number, number];
  baseRoll: number;
  basePitch: number;
}

export class ImuSynth {
  readonly rateHz: number;
  readonly stepUs: number;
  private tUs = 0;
  private prevRoll: number | null = null;
  private prevPitch: number | null = null;
  private splice: Splice | null = null;

  constructor(rateHz = 50) {
    if (rateHz <= 0) throw new Error("rateHz must be positive");
    this.rateHz = rateHz;
    this.stepUs = Math.round(1e6 / rateHz);
  }

  get spliceActive(): boolean {
    return this.splice !== null;
  }

  /** Queue a gesture epoch; ignored while one is already playing. */
  trigger(gesture: Gesture): boolean {
    if (this.splice) return false;
    const n = Math.round(this.rateHz * EPOCH_SECONDS);
    this.splice = {
      data: classSignature(gesture, n),
      index: 0,
      baseAccel: this.prevRoll === null ? gravityAccel(0, 0) : gravityAccel(this.prevRoll, this.prevPitch!),
      baseRoll: this.prevRoll ?? 0,
      basePitch: this.prevPitch ?? 0,
    };
    return true;
  }

  /** Produce the next sample for the current emulated angles. */
  next(roll: number, pitch: number): ImuSampleMsg {
    const tUs = this.tUs;
    this.tUs += this.stepUs;

    if (this.splice) {
      const s = this.splice;
      const i = s.index++;
      const col = s.data.map((row) => row[i]);
      if (s.index >= s.data[0].length) {
        // hand the tracker the frozen pose so the next plain sample
        // emits the catch-up rate toward wherever the pointer went
        this.prevRoll = s.baseRoll;
        this.prevPitch = s.basePitch;
        this.splice = null;
      }
      return {
        kind: "imu",
        tUs,
        accel: [
          s.baseAccel[0] + col[0],
          s.baseAccel[1] + col[1],
          s.baseAccel[2] + col[2],
        ],
        gyro: [col[3], col[4], col[5]],
        mag: null,
      };
    }

    const r = clampAngle(roll);
    const p = clampAngle(pitch);
    const dt = this.stepUs / 1e6;
    const gx = this.prevRoll === null ? 0 : (r - this.prevRoll) / dt;
    const gy = this.prevPitch === null ? 0 : (p - this.prevPitch) / dt;
    this.prevRoll = r;
    this.prevPitch = p;
    return { kind: "imu", tUs, accel: gravityAccel(r, p), gyro: [gx, gy, 0], mag: null };
  }
}
