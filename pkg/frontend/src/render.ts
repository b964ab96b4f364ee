/** Top-down arena rendering onto a 2D canvas. */

import type { SceneDoc, StateSnapshot } from "./session";

export interface Transform {
  scale: number;
  toScreen(x: number, y: number): [number, number];
}

/** Uniform world-to-canvas mapping, y flipped, centered with padding. */
export function makeTransform(
  arena: SceneDoc["arena"],
  canvasW: number,
  canvasH: number,
  pad = 20,
): Transform {
  const spanX = arena.x_max - arena.x_min;
  const spanY = arena.y_max - arena.y_min;
  const scale = Math.min((canvasW - 2 * pad) / spanX, (canvasH - 2 * pad) / spanY);
  const offX = (canvasW - spanX * scale) / 2;
  const offY = (canvasH - spanY * scale) / 2;
  return {
    scale,
    toScreen(x: number, y: number): [number, number] {
      return [offX + (x - arena.x_min) * scale, canvasH - offY - (y - arena.y_min) * scale];
    },
  };
}

const COLORS = {
  floor: "#10151c",
  wall: "#8b96a5",
  pinUp: "#43c59e",
  pinDown: "#5a626e",
  robot: "#4ea2ff",
  heading: "#dce6f2",
  goal: "#e0b34c",
};

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: SceneDoc,
  state: StateSnapshot | null,
  canvasW: number,
  canvasH: number,
): void {
  const t = makeTransform(scene.arena, canvasW, canvasH);
  ctx.clearRect(0, 0, canvasW, canvasH);

  const [ax0, ay0] = t.toScreen(scene.arena.x_min, scene.arena.y_max);
  ctx.fillStyle = COLORS.floor;
  ctx.fillRect(
    ax0,
    ay0,
    (scene.arena.x_max - scene.arena.x_min) * t.scale,
    (scene.arena.y_max - scene.arena.y_min) * t.scale,
  );
  ctx.strokeStyle = COLORS.wall;
  ctx.lineWidth = 2;
  ctx.strokeRect(
    ax0,
    ay0,
    (scene.arena.x_max - scene.arena.x_min) * t.scale,
    (scene.arena.y_max - scene.arena.y_min) * t.scale,
  );

  const goal = scene.goal as { type?: string; axis?: string; value?: number };
  if (goal.type === "line" && goal.value !== undefined) {
    ctx.strokeStyle = COLORS.goal;
    ctx.setLineDash([6, 6]);
    ctx.beginPath();
    if (goal.axis === "y") {
      ctx.moveTo(...t.toScreen(scene.arena.x_min, goal.value));
      ctx.lineTo(...t.toScreen(scene.arena.x_max, goal.value));
    } else {
      ctx.moveTo(...t.toScreen(goal.value, scene.arena.y_min));
      ctx.lineTo(...t.toScreen(goal.value, scene.arena.y_max));
    }
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const w of scene.walls) {
    ctx.strokeStyle = COLORS.wall;
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(...t.toScreen(w.x1, w.y1));
    ctx.lineTo(...t.toScreen(w.x2, w.y2));
    ctx.stroke();
  }

  const livePins = state?.pins ?? scene.pins.map((p) => ({ ...p, standing: true }));
  livePins.forEach((pin, i) => {
    const radius = scene.pins[i]?.radius ?? 0.1;
    const [px, py] = t.toScreen(pin.x, pin.y);
    ctx.fillStyle = pin.standing ? COLORS.pinUp : COLORS.pinDown;
    ctx.beginPath();
    ctx.arc(px, py, Math.max(3, radius * t.scale), 0, 2 * Math.PI);
    ctx.fill();
  });

  const pose = state?.pose ?? scene.start;
  const [rx, ry] = t.toScreen(pose.x, pose.y);
  const r = Math.max(4, scene.footprint_radius * t.scale);
  ctx.fillStyle = COLORS.robot;
  ctx.beginPath();
  ctx.arc(rx, ry, r, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = COLORS.heading;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(rx, ry);
  // canvas y grows downward, world theta is counterclockwise
  ctx.lineTo(rx + r * 1.6 * Math.cos(pose.theta), ry - r * 1.6 * Math.sin(pose.theta));
  ctx.stroke();
}
