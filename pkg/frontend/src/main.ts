/** Browser entry point: wires socket, keyboard, and the render loop. */

import { BridgeClient } from "./client.js";
import { KeyboardController } from "./keyboard.js";
import { renderFrame } from "./render.js";
import type { Ctx, FrameState } from "./render.js";
import type { Snapshot } from "./protocol.js";
import { ChartHistory } from "./stripchart.js";

function start(): void {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d") as unknown as Ctx;
  const params = new URLSearchParams(window.location.search);
  const url = params.get("bridge") ?? "ws://127.0.0.1:8700";

  const client = new BridgeClient(url, (u) => new WebSocket(u));
  const keyboard = new KeyboardController((msg) => client.sendOverride(msg));

  window.addEventListener("keydown", (ev) => {
    if (!client.readOnly) keyboard.keydown(ev.key);
    if (ev.key === " ") ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => keyboard.keyup(ev.key));
  window.addEventListener("blur", () => keyboard.reset());

  const history = new ChartHistory();
  let latest: Snapshot | null = null;

  function frame(): void {
    const snap = client.slot.take();
    if (snap) {
      latest = snap;
      history.push(snap);
    }
    const state: FrameState = {
      snap: latest,
      hello: client.hello,
      history,
      stalled: client.connected && client.slot.isStale(Date.now()),
      readOnly: client.readOnly,
      overrideEngaged: keyboard.isEngaged,
      errorCount: client.errorCount,
    };
    renderFrame(ctx, canvas.width, canvas.height, state);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

window.addEventListener("DOMContentLoaded", start);
