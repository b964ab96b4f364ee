/** Console page wiring: pointer pad in, live arena and acks out. */

import { drawScene } from "./render";
import { ConsoleSession, type SceneDoc } from "./session";
import { Gesture, GESTURE_LABELS, ImuSynth } from "./imu_synth";
import { keyToGesture, pointerToAngles, tiltToAngles, type Angles } from "./input";
import { MODE_TELEOPERATED } from "./protocol";

const SAMPLE_RATE_HZ = 50;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function start(): void {
  const canvas = el<HTMLCanvasElement>("arena");
  const ctx = canvas.getContext("2d")!;
  const pad = el<HTMLDivElement>("pad");
  const stick = el<HTMLDivElement>("stick");
  const modeBadge = el<HTMLSpanElement>("mode");
  const readout = el<HTMLSpanElement>("readout");
  const status = el<HTMLSpanElement>("status");
  const flash = el<HTMLDivElement>("flash");
  const retry = el<HTMLButtonElement>("retry");

  let scene: SceneDoc | null = null;
  let session: ConsoleSession | null = null;
  let angles: Angles = { roll: 0, pitch: 0 };
  const synth = new ImuSynth(SAMPLE_RATE_HZ);

  function setMode(teleoperated: boolean): void {
    modeBadge.textContent = teleoperated ? "teleoperated" : "autonomous";
    modeBadge.className = teleoperated ? "badge tele" : "badge auto";
  }

  function ackFlash(gestureId: number): void {
    flash.textContent = GESTURE_LABELS[gestureId as Gesture] ?? "?";
    flash.classList.add("on");
    setTimeout(() => flash.classList.remove("on"), 350);
    navigator.vibrate?.(80);
  }

  function connect(): void {
    retry.hidden = true;
    status.textContent = "connecting";
    const ws = new WebSocket(`ws://${location.host}/ws`);
    session = new ConsoleSession(ws, {
      onOpen: () => {
        status.textContent = "connected";
      },
      onScene: (doc) => {
        scene = doc;
      },
      onState: (state) => {
        setMode(state.mode === "teleoperated");
        readout.textContent =
          `t ${state.t_s.toFixed(1)}s  v ${state.v.toFixed(2)}  ` +
          `ω ${state.omega.toFixed(2)}`;
      },
      onAck: ackFlash,
      onMode: (mode) => setMode(mode === MODE_TELEOPERATED),
      onClose: () => {
        status.textContent = "disconnected";
        retry.hidden = false;
      },
    });
  }

  setInterval(() => {
    session?.sendSample(synth.next(angles.roll, angles.pitch));
  }, 1000 / SAMPLE_RATE_HZ);

  function renderLoop(): void {
    if (scene) {
      drawScene(ctx, scene, session?.latestState() ?? null, canvas.width, canvas.height);
    }
    requestAnimationFrame(renderLoop);
  }
  requestAnimationFrame(renderLoop);

  // pointer pad: hold to deflect, release to recenter
  let tracking = false;
  function padAngles(ev: PointerEvent): Angles {
    const rect = pad.getBoundingClientRect();
    return pointerToAngles(
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      rect.width,
      rect.height,
    );
  }
  function moveStick(a: Angles): void {
    const half = Math.PI / 2;
    stick.style.left = `${50 + (a.roll / half) * 45}%`;
    stick.style.top = `${50 - (a.pitch / half) * 45}%`;
  }
  pad.addEventListener("pointerdown", (ev) => {
    tracking = true;
    pad.setPointerCapture(ev.pointerId);
    angles = padAngles(ev);
    moveStick(angles);
  });
  pad.addEventListener("pointermove", (ev) => {
    if (!tracking) return;
    angles = padAngles(ev);
    moveStick(angles);
  });
  const release = () => {
    tracking = false;
    angles = { roll: 0, pitch: 0 };
    moveStick(angles);
  };
  pad.addEventListener("pointerup", release);
  pad.addEventListener("pointercancel", release);

  window.addEventListener("deviceorientation", (ev) => {
    if (tracking || ev.gamma === null || ev.beta === null) return;
    angles = tiltToAngles(ev.gamma, ev.beta);
    moveStick(angles);
  });

  for (const g of [Gesture.Up, Gesture.Down, Gesture.Circle, Gesture.Left, Gesture.Right]) {
    el<HTMLButtonElement>(`g-${GESTURE_LABELS[g]}`).addEventListener("click", () =>
      synth.trigger(g),
    );
  }
  window.addEventListener("keydown", (ev) => {
    const g = keyToGesture(ev.key);
    if (g !== null) synth.trigger(g);
  });

  retry.addEventListener("click", connect);
  connect();
}

start();
