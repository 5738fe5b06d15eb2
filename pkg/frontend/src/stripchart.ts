/** Rolling history of risk telemetry for the strip chart. */

import type { Snapshot } from "./protocol.js";

export interface ChartSample {
  step: number;
  irs: number;
  ema: number;
  alpha: number;
  cues: [number, number, number];
}

export class ChartHistory {
  private samples: ChartSample[] = [];

  constructor(readonly capacity = 600) {}

  push(snap: Snapshot): void {
    this.samples.push({
      step: snap.step,
      irs: snap.irs,
      ema: snap.irs_ema,
      alpha: snap.alpha,
      cues: snap.cues,
    });
    if (this.samples.length > this.capacity) this.samples.shift();
  }

  get length(): number {
    return this.samples.length;
  }

  at(i: number): ChartSample {
    return this.samples[i];
  }

  clear(): void {
    this.samples = [];
  }
}
