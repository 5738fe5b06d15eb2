import { beforeEach, describe, expect, it } from "vitest";
import { BridgeClient } from "../src/client.js";
import type { SocketLike } from "../src/client.js";
import { makeSnapshot } from "./protocol.test.js";

type Listener = (ev: { data?: unknown }) => void;

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  private listeners = new Map<string, Listener[]>();

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.emit("close", {});
  }

  addEventListener(type: string, listener: Listener): void {
    const arr = this.listeners.get(type) ?? [];
    arr.push(listener);
    this.listeners.set(type, arr);
  }

  emit(type: string, ev: { data?: unknown }): void {
    for (const l of this.listeners.get(type) ?? []) l(ev);
  }
}

let sock: FakeSocket;
let client: BridgeClient;
let clock: number;

beforeEach(() => {
  sock = new FakeSocket();
  clock = 0;
  client = new BridgeClient("ws://test", () => sock, () => clock);
  sock.emit("open", {});
});

describe("BridgeClient", () => {
  it("stores the hello and routes snapshots into the slot", () => {
    sock.emit("message", {
      data: JSON.stringify({
        type: "hello", centerline: [[0, 0], [1, 0]], lane_width: 4,
        goal: [300, 0], threshold: 0.3, dt: 0.1,
      }),
    });
    expect(client.hello?.lane_width).toBe(4);
    sock.emit("message", { data: JSON.stringify(makeSnapshot({ step: 3 })) });
    expect(client.slot.take()?.step).toBe(3);
  });

  it("counts malformed payloads instead of throwing", () => {
    sock.emit("message", { data: "{not json" });
    sock.emit("message", { data: JSON.stringify({ type: "mystery" }) });
    sock.emit("message", { data: JSON.stringify(makeSnapshot({ irs: "x" })) });
    expect(client.errorCount).toBe(3);
    expect(client.slot.take()).toBeNull();
  });

  it("sends override messages while connected", () => {
    client.sendOverride({ type: "override_begin", t: 1 });
    client.sendOverride({ type: "override_action", steer: 0.5, acc: -1, t: 2 });
    expect(sock.sent).toHaveLength(2);
    expect(JSON.parse(sock.sent[1])).toMatchObject({ steer: 0.5, acc: -1 });
  });

  it("disconnect enters read-only state and drops further sends", () => {
    let closed = false;
    const c2sock = new FakeSocket();
    const c2 = new BridgeClient("ws://test", () => c2sock, () => 0,
                                () => { closed = true; });
    c2sock.emit("open", {});
    c2sock.close();
    expect(c2.readOnly).toBe(true);
    expect(c2.connected).toBe(false);
    expect(closed).toBe(true);
    c2.sendOverride({ type: "override_begin", t: 1 });
    expect(c2sock.sent).toHaveLength(0);
  });
});
