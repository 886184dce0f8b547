// Top-down orthographic rendering: world x right, world y up the screen,
// depth (world z) shown as a color tint.  Pure math is kept separable so
// the projection can be unit tested without a canvas.

import type { Frame, Vec3 } from "./protocol.js";
import type { ViewState } from "./state.js";
import { dragHands, handlePositions } from "./state.js";

export interface Projection {
  worldToScreen(p: Vec3): [number, number];
  screenToWorld(x: number, y: number, z: number): Vec3;
  scale: number;
}

// Fixed workspace window: covers the cloth, the human box and the robot
// targets with a margin.
export const WORLD_X: [number, number] = [-0.45, 0.75];
export const WORLD_Y: [number, number] = [-0.4, 0.9];

export function makeProjection(width: number, height: number): Projection {
  const sx = width / (WORLD_X[1] - WORLD_X[0]);
  const sy = height / (WORLD_Y[1] - WORLD_Y[0]);
  const scale = Math.min(sx, sy);
  const cx = (WORLD_X[0] + WORLD_X[1]) / 2;
  const cy = (WORLD_Y[0] + WORLD_Y[1]) / 2;
  return {
    scale,
    worldToScreen(p: Vec3): [number, number] {
      return [width / 2 + (p[0] - cx) * scale, height / 2 - (p[1] - cy) * scale];
    },
    screenToWorld(x: number, y: number, z: number): Vec3 {
      return [cx + (x - width / 2) / scale, cy - (y - height / 2) / scale, z];
    },
  };
}

// z in [-0.25, 0.25] -> blue (low) .. white (flat) .. red (high)
export function depthTint(z: number): string {
  const t = Math.max(-1, Math.min(1, z / 0.25));
  const r = t > 0 ? 255 : Math.round(255 * (1 + t));
  const b = t < 0 ? 255 : Math.round(255 * (1 - t));
  const g = Math.round(255 * (1 - Math.abs(t)) * 0.9);
  return `rgb(${r},${g},${b})`;
}

export const HANDLE_RADIUS_PX = 9;

export function hitTestHandle(
  frame: Frame, proj: Projection, x: number, y: number,
): "v2" | "v3" | null {
  for (const name of ["v2", "v3"] as const) {
    const [hx, hy] = proj.worldToScreen(frame.corners[name]);
    if ((hx - x) ** 2 + (hy - y) ** 2 <= (HANDLE_RADIUS_PX * 1.6) ** 2) {
      return name;
    }
  }
  return null;
}

function dot(ctx: CanvasRenderingContext2D, x: number, y: number, r: number,
             fill: string, stroke?: string): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
  ctx.fillStyle = fill;
  ctx.fill();
  if (stroke) {
    ctx.strokeStyle = stroke;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}

function pair(ctx: CanvasRenderingContext2D, proj: Projection,
              a: Vec3, b: Vec3, color: string, label: string): void {
  const [ax, ay] = proj.worldToScreen(a);
  const [bx, by] = proj.worldToScreen(b);
  ctx.strokeStyle = color;
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(ax, ay);
  ctx.lineTo(bx, by);
  ctx.stroke();
  ctx.setLineDash([]);
  dot(ctx, ax, ay, 5, color);
  dot(ctx, bx, by, 5, color);
  ctx.fillStyle = color;
  ctx.font = "11px sans-serif";
  ctx.fillText(label, bx + 8, by - 4);
}

export function renderScene(ctx: CanvasRenderingContext2D, width: number,
                            height: number, state: ViewState): void {
  ctx.clearRect(0, 0, width, height);
  const proj = makeProjection(width, height);

  if (state.phase !== "connected") {
    ctx.fillStyle = "rgba(30,30,40,0.85)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#ccc";
    ctx.font = "16px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(state.phase === "connecting" ? "connecting…" : "disconnected",
                 width / 2, height / 2);
    ctx.textAlign = "start";
    return;
  }
  const frame = state.frame;
  if (!frame) return;

  // cloth vertices, depth tinted
  for (const v of frame.vertices) {
    const [x, y] = proj.worldToScreen(v);
    dot(ctx, x, y, 2.2, depthTint(v[2]));
  }

  // controller and expert targets: v0/v1 pairs of the 6-vectors
  const act = frame.action;
  const exp = frame.expert;
  pair(ctx, proj, [exp[0], exp[1], exp[2]], [exp[3], exp[4], exp[5]],
       "#44bb66", "expert");
  pair(ctx, proj, [act[0], act[1], act[2]], [act[3], act[4], act[5]],
       "#ffaa22", frame.controller);

  // robot corners
  for (const name of ["v0", "v1"] as const) {
    const [x, y] = proj.worldToScreen(frame.corners[name]);
    dot(ctx, x, y, 5, "#888", "#eee");
  }

  // human handles at server-confirmed positions
  const handles = handlePositions(state);
  if (handles) {
    for (const name of ["v2", "v3"] as const) {
      const [x, y] = proj.worldToScreen(handles[name]);
      dot(ctx, x, y, HANDLE_RADIUS_PX, state.viewOnly ? "#557" : "#3399ff", "#fff");
      ctx.fillStyle = "#cde";
      ctx.font = "11px sans-serif";
      ctx.fillText(name, x + 10, y + 4);
    }
  }

  // in-flight drag target ghost
  const drag = dragHands(state);
  if (drag && state.drag) {
    const target = state.drag.handle === "v2" ? drag.v2 : drag.v3;
    const [x, y] = proj.worldToScreen(target);
    ctx.setLineDash([2, 2]);
    ctx.strokeStyle = "#3399ff";
    ctx.beginPath();
    ctx.arc(x, y, HANDLE_RADIUS_PX, 0, Math.PI * 2);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
