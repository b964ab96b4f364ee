/**
 * Pointer and keyboard input to emulated wrist angles.
 *
 * Horizontal deflection is roll (drives forward speed), vertical is
 * pitch (drives turn rate); the full pad is +/- pi/2 so edge contact is
 * full deflection. Device tilt maps the same way when available.
 */

import { Gesture, HALF_PI } from "./imu_synth";

export interface Angles {
  roll: number;
  pitch: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Pointer position inside a width x height pad to angles.
 *  Center -> (0, 0); right edge -> roll +pi/2; top edge -> pitch +pi/2. */
export function pointerToAngles(
  x: number,
  y: number,
  width: number,
  height: number,
): Angles {
  if (width <= 0 || height <= 0) return { roll: 0, pitch: 0 };
  const nx = clamp((2 * x - width) / width, -1, 1);
  const ny = clamp((height - 2 * y) / height, -1, 1);
  return { roll: nx * HALF_PI, pitch: ny * HALF_PI };
}

/** Device tilt (degrees: gamma left/right, beta front/back) to angles. */
export function tiltToAngles(gamma: number, beta: number): Angles {
  return {
    roll: clamp(gamma, -90, 90) * (Math.PI / 180),
    pitch: clamp(beta, -90, 90) * (Math.PI / 180),
  };
}

const KEY_GESTURES: Record<string, Gesture> = {
  "1": Gesture.Up,
  "2": Gesture.Down,
  "3": Gesture.Circle,
  "4": Gesture.Left,
  "5": Gesture.Right,
  u: Gesture.Up,
  d: Gesture.Down,
  c: Gesture.Circle,
  l: Gesture.Left,
  r: Gesture.Right,
};

export function keyToGesture(key: string): Gesture | null {
  return KEY_GESTURES[key.toLowerCase()] ?? null;
}
