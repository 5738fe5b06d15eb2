/** Canvas rendering: pure functions of the latest snapshot.
 *
 * Everything takes a Canvas2D-like context so tests can drive a recording
 * fake; no module state survives between frames.
 */

import type { Hello, Snapshot } from "./protocol.js";
import { SHIELD_NAMES } from "./protocol.js";
import type { ChartHistory } from "./stripchart.js";

/** The subset of CanvasRenderingContext2D the renderer needs. */
export interface Ctx {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(rad: number): void;
  scale(x: number, y: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export const LIDAR_MAX_RANGE_M = 60;
const VIEW_SCALE = 6; // pixels per meter in the bird's-eye view

/** Draw one lidar ray per beam, ego-centered, beam 0 along the heading. */
export function drawLidar(ctx: Ctx, heading: number, lidar: number[]): void {
  ctx.strokeStyle = "rgba(120, 200 ,255, 0.35)";
  ctx.lineWidth = 1 / VIEW_SCALE;
  ctx.beginPath();
  const n = lidar.length;
  for (let i = 0; i < n; i++) {
    const angle = heading + (2 * Math.PI * i) / n;
    ctx.moveTo(0, 0);
    ctx.lineTo(Math.cos(angle) * lidar[i], Math.sin(angle) * lidar[i]);
  }
  ctx.stroke();
}

function drawBox(ctx: Ctx, x: number, y: number, heading: number,
                 hx: number, hy: number, color: string): void {
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(heading);
  ctx.fillStyle = color;
  ctx.fillRect(-hx, -hy, 2 * hx, 2 * hy);
  ctx.restore();
}

export function drawWorld(ctx: Ctx, w: number, h: number, snap: Snapshot,
                          hello: Hello | null): void {
  ctx.save();
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, w, h);
  // Ego-centered, north-up view.
  ctx.translate(w / 2, h / 2);
  ctx.scale(VIEW_SCALE, -VIEW_SCALE);
  ctx.translate(-snap.ego.x, -snap.ego.y);

  if (hello) {
    ctx.strokeStyle = "#3a4656";
    ctx.lineWidth = hello.lane_width / 20;
    ctx.beginPath();
    for (let i = 0; i < hello.centerline.length; i++) {
      const [cx, cy] = hello.centerline[i];
      if (i === 0) ctx.moveTo(cx, cy);
      else ctx.lineTo(cx, cy);
    }
    ctx.stroke();
    ctx.fillStyle = "#49c06e";
    ctx.beginPath();
    ctx.arc(hello.goal[0], hello.goal[1], 1.2, 0, 2 * Math.PI);
    ctx.fill();
  }

  ctx.save();
  ctx.translate(snap.ego.x, snap.ego.y);
  drawLidar(ctx, snap.ego.heading, snap.lidar);
  ctx.restore();

  for (const [ox, oy, oh, [hx, hy]] of snap.obstacles) {
    drawBox(ctx, ox, oy, oh, hx, hy, "#b5542e");
  }
  for (const [tx, ty, th, [hx, hy]] of snap.traffic) {
    drawBox(ctx, tx, ty, th, hx, hy, "#8468c9");
  }
  drawBox(ctx, snap.ego.x, snap.ego.y, snap.ego.heading, 2.2, 0.9,
          snap.override ? "#e0b13f" : "#3f8fe0");
  ctx.restore();
}

/** Cue bars, IRS vs threshold, alpha gauge, shield badge, arm probs. */
export function drawRiskPanel(ctx: Ctx, x: number, y: number, w: number,
                              snap: Snapshot, threshold: number): void {
  const cueNames = ["CURV", "TTC", "OOD"];
  const barH = 14;
  ctx.save();
  ctx.font = "12px monospace";
  for (let i = 0; i < 3; i++) {
    const by = y + i * (barH + 6);
    ctx.fillStyle = "#2a3240";
    ctx.fillRect(x + 42, by, w - 42, barH);
    ctx.fillStyle = "#5fb0e8";
    ctx.fillRect(x + 42, by, (w - 42) * snap.cues[i], barH);
    ctx.fillStyle = "#c6cfdb";
    ctx.fillText(cueNames[i], x, by + barH - 3);
  }
  // IRS bar with the threshold tick.
  const iy = y + 3 * (barH + 6) + 6;
  ctx.fillStyle = "#2a3240";
  ctx.fillRect(x + 42, iy, w - 42, barH);
  ctx.fillStyle = snap.irs > threshold ? "#e06c4f" : "#6fd39a";
  ctx.fillRect(x + 42, iy, (w - 42) * snap.irs, barH);
  ctx.fillStyle = "#f2d75c";
  ctx.fillRect(x + 42 + (w - 42) * threshold - 1, iy - 2, 2, barH + 4);
  ctx.fillStyle = "#c6cfdb";
  ctx.fillText("IRS", x, iy + barH - 3);

  // Alpha gauge.
  const ay = iy + barH + 12;
  ctx.fillStyle = "#2a3240";
  ctx.fillRect(x + 42, ay, w - 42, barH);
  ctx.fillStyle = "#e0a33f";
  ctx.fillRect(x + 42, ay, (w - 42) * snap.alpha, barH);
  ctx.fillStyle = "#c6cfdb";
  ctx.fillText("ALPHA", x, ay + barH - 3);

  // Active shield badge + arm probabilities.
  const sy = ay + barH + 18;
  const active = snap.shield !== null && snap.irs_ema > threshold;
  ctx.fillStyle = active ? "#e06c4f" : "#3a4656";
  ctx.fillRect(x, sy - 12, w, 18);
  ctx.fillStyle = "#eef2f7";
  const label = snap.shield === null ? "shield: none"
    : `shield: ${SHIELD_NAMES[snap.shield] ?? snap.shield}`;
  ctx.fillText(label, x + 4, sy + 1);
  ctx.fillStyle = "#8ea1b8";
  ctx.fillText(
    `p=[${snap.arm_probs.map((p) => p.toFixed(2)).join(" ")}]`,
    x + 4, sy + 18);
  ctx.restore();
}

export function drawChart(ctx: Ctx, x: number, y: number, w: number,
                          h: number, history: ChartHistory,
                          threshold: number): void {
  ctx.save();
  ctx.fillStyle = "#151a22";
  ctx.fillRect(x, y, w, h);
  ctx.strokeStyle = "#f2d75c";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x, y + h * (1 - threshold));
  ctx.lineTo(x + w, y + h * (1 - threshold));
  ctx.stroke();
  const series: [keyof Pick<ReturnType<ChartHistory["at"]>,
    "irs" | "ema" | "alpha">, string][] = [
    ["irs", "#e06c4f"], ["ema", "#6fd39a"], ["alpha", "#e0a33f"]];
  for (const [key, color] of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    for (let i = 0; i < history.length; i++) {
      const px = x + (w * i) / Math.max(1, history.capacity - 1);
      const py = y + h * (1 - history.at(i)[key]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  }
  ctx.restore();
}

export interface FrameState {
  snap: Snapshot | null;
  hello: Hello | null;
  history: ChartHistory;
  stalled: boolean;
  readOnly: boolean;
  overrideEngaged: boolean;
  errorCount: number;
}

export function renderFrame(ctx: Ctx, w: number, h: number,
                            state: FrameState): void {
  ctx.clearRect(0, 0, w, h);
  const threshold = state.hello?.threshold ?? 0.3;
  if (state.snap) {
    drawWorld(ctx, w - 240, h - 120, state.snap, state.hello);
    drawRiskPanel(ctx, w - 228, 16, 212, state.snap, threshold);
    ctx.font = "12px monospace";
    ctx.fillStyle = "#8ea1b8";
    ctx.fillText(
      `step ${state.snap.step}  v=${state.snap.ego.speed.toFixed(1)} m/s` +
      (state.overrideEngaged ? "  OVERRIDE" : ""), 8, h - 128);
  }
  drawChart(ctx, 0, h - 116, w - 240, 112, state.history, threshold);
  if (state.errorCount > 0) {
    ctx.fillStyle = "#e06c4f";
    ctx.fillText(`malformed: ${state.errorCount}`, 8, 16);
  }
  if (state.stalled) {
    ctx.fillStyle = "#e06c4f";
    ctx.fillRect(0, 0, w, 28);
    ctx.fillStyle = "#ffffff";
    ctx.fillText("STALLED - no telemetry for 500 ms", 8, 19);
  }
  if (state.readOnly) {
    ctx.fillStyle = "#f2d75c";
    ctx.fillText("READ-ONLY (disconnected)", 8, 34);
  }
}
