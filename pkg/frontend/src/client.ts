/** Bridge client: socket wiring, latest-wins delivery, override sending.
 *
 * The socket type is injected so tests (and the node integration harness)
 * can supply `ws` while the browser build uses the native WebSocket.
 */

import { parseHello, parseSnapshot } from "./protocol.js";
import type { Hello, OverrideMessage, Snapshot } from "./protocol.js";
import { SnapshotSlot } from "./slot.js";

/** Minimal socket surface shared by browser WebSocket and the ws package. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(
    type: "open" | "close" | "message",
    listener: (ev: { data?: unknown }) => void,
  ): void;
}

export type SocketFactory = (url: string) => SocketLike;

export class BridgeClient {
  readonly slot = new SnapshotSlot();
  hello: Hello | null = null;
  connected = false;
  /** Once true the UI must not send further override traffic. */
  readOnly = false;
  errorCount = 0;
  private sock: SocketLike;

  constructor(url: string, factory: SocketFactory,
              private now: () => number = () => Date.now(),
              private onClose: () => void = () => {}) {
    this.sock = factory(url);
    this.sock.addEventListener("open", () => {
      this.connected = true;
    });
    this.sock.addEventListener("close", () => {
      this.connected = false;
      this.readOnly = true;
      this.onClose();
    });
    this.sock.addEventListener("message", (ev) => {
      this.handleMessage(typeof ev.data === "string"
        ? ev.data
        : String(ev.data));
    });
  }

  handleMessage(data: string): void {
    let raw: unknown;
    try {
      raw = JSON.parse(data);
    } catch {
      this.errorCount += 1;
      return;
    }
    const snap: Snapshot | null = parseSnapshot(raw);
    if (snap) {
      this.slot.offer(snap, this.now());
      return;
    }
    const hello = parseHello(raw);
    if (hello) {
      this.hello = hello;
      return;
    }
    this.errorCount += 1;
  }

  sendOverride(msg: OverrideMessage): void {
    if (this.readOnly) return;
    this.sock.send(JSON.stringify(msg));
  }

  close(): void {
    this.sock.close();
  }
}
