import { describe, expect, it } from "vitest";
import { drawLidar, drawRiskPanel, renderFrame } from "../src/render.js";
import type { Ctx, FrameState } from "../src/render.js";
import type { Snapshot } from "../src/protocol.js";
import { ChartHistory } from "../src/stripchart.js";
import { makeSnapshot } from "./protocol.test.js";

interface Call {
  op: string;
  args: unknown[];
}

function recordingCtx(): Ctx & { calls: Call[]; texts: string[] } {
  const calls: Call[] = [];
  const texts: string[] = [];
  const rec = (op: string) => (...args: unknown[]) => {
    calls.push({ op, args });
    if (op === "fillText") texts.push(String(args[0]));
  };
  return {
    calls,
    texts,
    fillStyle: "", strokeStyle: "", lineWidth: 1, font: "", globalAlpha: 1,
    save: rec("save"), restore: rec("restore"),
    translate: rec("translate"), rotate: rec("rotate"), scale: rec("scale"),
    beginPath: rec("beginPath"), moveTo: rec("moveTo"), lineTo: rec("lineTo"),
    arc: rec("arc"), closePath: rec("closePath"),
    stroke: rec("stroke"), fill: rec("fill"),
    fillRect: rec("fillRect"), strokeRect: rec("strokeRect"),
    clearRect: rec("clearRect"), fillText: rec("fillText"),
  };
}

const snap = (over: Record<string, unknown> = {}) =>
  makeSnapshot(over) as unknown as Snapshot;

describe("drawLidar", () => {
  it("draws one ray per beam; full-range scans reach the full radius", () => {
    const ctx = recordingCtx();
    drawLidar(ctx, 0, Array(72).fill(60));
    const rays = ctx.calls.filter((c) => c.op === "lineTo");
    expect(rays).toHaveLength(72);
    for (const ray of rays) {
      const [x, y] = ray.args as [number, number];
      expect(Math.hypot(x, y)).toBeCloseTo(60, 6);
    }
  });
});

describe("drawRiskPanel", () => {
  it("IRS = 0 -> zero-width risk fill and alpha gauge at 0", () => {
    const ctx = recordingCtx();
    drawRiskPanel(ctx, 0, 0, 142, snap({ irs: 0, alpha: 0, cues: [0, 0, 0] }),
                  0.3);
    // Bars are drawn as background (full width 100) then fill; every fill
    // for a zero quantity must have zero width.
    const fills = ctx.calls.filter((c) => c.op === "fillRect")
      .map((c) => c.args as number[]);
    const zeroFills = fills.filter(([, , w]) => w === 0);
    expect(zeroFills.length).toBeGreaterThanOrEqual(5); // 3 cues + irs + alpha
  });

  it("IRS above tau lights the active shield badge", () => {
    const ctx = recordingCtx();
    drawRiskPanel(ctx, 0, 0, 142,
                  snap({ irs: 0.6, irs_ema: 0.5, shield: 1 }), 0.3);
    expect(ctx.texts.join(" ")).toContain("brake bias");
  });

  it("shows arm probabilities", () => {
    const ctx = recordingCtx();
    drawRiskPanel(ctx, 0, 0, 142, snap({ arm_probs: [0.5, 0.25, 0.25] }), 0.3);
    expect(ctx.texts.join(" ")).toContain("p=[0.50 0.25 0.25]");
  });
});

describe("renderFrame", () => {
  const base: FrameState = {
    snap: snap(),
    hello: null,
    history: new ChartHistory(),
    stalled: false,
    readOnly: false,
    overrideEngaged: false,
    errorCount: 0,
  };

  it("renders without a snapshot (chart only, no crash)", () => {
    const ctx = recordingCtx();
    renderFrame(ctx, 800, 600, { ...base, snap: null });
    expect(ctx.calls.some((c) => c.op === "clearRect")).toBe(true);
  });

  it("stalled state shows the banner", () => {
    const ctx = recordingCtx();
    renderFrame(ctx, 800, 600, { ...base, stalled: true });
    expect(ctx.texts.join(" ")).toContain("STALLED");
  });

  it("read-only state is labelled after disconnect", () => {
    const ctx = recordingCtx();
    renderFrame(ctx, 800, 600, { ...base, readOnly: true });
    expect(ctx.texts.join(" ")).toContain("READ-ONLY");
  });

  it("malformed-message counter is surfaced", () => {
    const ctx = recordingCtx();
    renderFrame(ctx, 800, 600, { ...base, errorCount: 3 });
    expect(ctx.texts.join(" ")).toContain("malformed: 3");
  });
});
