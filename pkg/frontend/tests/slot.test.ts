import { describe, expect, it } from "vitest";
import { SnapshotSlot, STALE_AFTER_MS } from "../src/slot.js";
import type { Snapshot } from "../src/protocol.js";
import { makeSnapshot } from "./protocol.test.js";

const snap = (step: number) => makeSnapshot({ step }) as unknown as Snapshot;

describe("SnapshotSlot", () => {
  it("take returns the latest offered frame once", () => {
    const slot = new SnapshotSlot();
    expect(slot.take()).toBeNull();
    slot.offer(snap(1), 0);
    expect(slot.take()!.step).toBe(1);
    expect(slot.take()).toBeNull();
  });

  it("latest wins: intermediate frames are dropped, never queued", () => {
    const slot = new SnapshotSlot();
    slot.offer(snap(1), 0);
    slot.offer(snap(2), 10);
    slot.offer(snap(3), 20);
    expect(slot.take()!.step).toBe(3);
    expect(slot.take()).toBeNull();
    expect(slot.dropped).toBe(2);
  });

  it("reports stalled after 500 ms without frames", () => {
    const slot = new SnapshotSlot();
    slot.offer(snap(1), 1000);
    expect(slot.isStale(1000 + STALE_AFTER_MS)).toBe(false);
    expect(slot.isStale(1001 + STALE_AFTER_MS)).toBe(true);
    slot.offer(snap(2), 2000);
    expect(slot.isStale(2100)).toBe(false);
  });

  it("keeps pace with a 10 Hz feed over a 1000-tick episode", () => {
    const slot = new SnapshotSlot();
    let rendered = 0;
    let lastStep = -1;
    for (let step = 0; step < 1000; step++) {
      const now = step * 100; // 10 Hz production
      slot.offer(snap(step), now);
      expect(slot.isStale(now)).toBe(false);
      const got = slot.take(); // renderer keeps up: one take per frame
      if (got) {
        expect(got.step).toBeGreaterThan(lastStep);
        lastStep = got.step;
        rendered += 1;
      }
    }
    expect(rendered).toBe(1000);
    expect(slot.dropped).toBe(0);
  });
});
