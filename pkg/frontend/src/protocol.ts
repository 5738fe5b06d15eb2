/** Bridge wire protocol: message shapes and validation.
 *
 * The client never trusts the socket; malformed payloads are rejected by
 * the guards here and counted by the caller instead of thrown.
 */

export interface Hello {
  type: "hello";
  centerline: [number, number][];
  lane_width: number;
  goal: [number, number];
  threshold: number;
  dt: number;
}

export interface Snapshot {
  type: "snapshot";
  step: number;
  time_s: number;
  ego: { x: number; y: number; heading: number; speed: number };
  lane_width: number;
  goal: [number, number];
  obstacles: [number, number, number, [number, number]][];
  traffic: [number, number, number, [number, number]][];
  lidar: number[];
  cues: [number, number, number];
  irs: number;
  irs_ema: number;
  alpha: number;
  shield: number | null;
  arm_probs: number[];
  override: boolean;
}

export type OverrideMessage =
  | { type: "override_begin"; t: number }
  | { type: "override_action"; steer: number; acc: number; t: number }
  | { type: "override_end"; t: number };

const isNum = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

const isPair = (v: unknown): v is [number, number] =>
  Array.isArray(v) && v.length === 2 && v.every(isNum);

export function parseHello(raw: unknown): Hello | null {
  if (typeof raw !== "object" || raw === null) return null;
  const m = raw as Record<string, unknown>;
  if (m.type !== "hello") return null;
  if (!Array.isArray(m.centerline) || !m.centerline.every(isPair)) return null;
  if (!isNum(m.lane_width) || !isPair(m.goal)) return null;
  if (!isNum(m.threshold) || !isNum(m.dt)) return null;
  return m as unknown as Hello;
}

export function parseSnapshot(raw: unknown): Snapshot | null {
  if (typeof raw !== "object" || raw === null) return null;
  const m = raw as Record<string, unknown>;
  if (m.type !== "snapshot") return null;
  if (!isNum(m.step) || !isNum(m.time_s)) return null;
  const ego = m.ego as Record<string, unknown> | undefined;
  if (!ego || !isNum(ego.x) || !isNum(ego.y) || !isNum(ego.heading) ||
      !isNum(ego.speed)) return null;
  if (!Array.isArray(m.lidar) || !m.lidar.every(isNum)) return null;
  if (!Array.isArray(m.cues) || m.cues.length !== 3 ||
      !m.cues.every(isNum)) return null;
  if (!isNum(m.irs) || !isNum(m.irs_ema) || !isNum(m.alpha)) return null;
  if (m.shield !== null && !isNum(m.shield)) return null;
  if (!Array.isArray(m.arm_probs) || !m.arm_probs.every(isNum)) return null;
  if (typeof m.override !== "boolean") return null;
  if (!Array.isArray(m.obstacles) || !Array.isArray(m.traffic)) return null;
  return m as unknown as Snapshot;
}

export const SHIELD_NAMES = ["steering guard", "brake bias", "speed cap"];
