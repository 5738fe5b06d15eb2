/** Latest-wins snapshot slot decoupling socket receipt from rendering.
 *
 * Older frames are dropped, never queued, so a slow renderer can never
 * build up lag behind the live episode.
 */

import type { Snapshot } from "./protocol.js";

export const STALE_AFTER_MS = 500;

export class SnapshotSlot {
  private latest: Snapshot | null = null;
  private receivedAtMs = -Infinity;
  /** Frames overwritten before ever being taken. */
  dropped = 0;

  offer(snap: Snapshot, nowMs: number): void {
    if (this.latest !== null) this.dropped += 1;
    this.latest = snap;
    this.receivedAtMs = nowMs;
  }

  /** Consume the pending frame, or null if none arrived since last take. */
  take(): Snapshot | null {
    const out = this.latest;
    this.latest = null;
    return out;
  }

  /** True when no fresh frame has arrived for STALE_AFTER_MS. */
  isStale(nowMs: number): boolean {
    return nowMs - this.receivedAtMs > STALE_AFTER_MS;
  }
}
