/** Keyboard takeover: maps key state to the override message stream.
 *
 * Holding the takeover key (Space) sends override_begin; WASD / arrow keys
 * map to (steer, acc) in [-1, 1]^2, held constant between key events; release
 * sends override_end. Every message is timestamped.
 */

import type { OverrideMessage } from "./protocol.js";

const STEER_LEFT = new Set(["a", "ArrowLeft"]);
const STEER_RIGHT = new Set(["d", "ArrowRight"]);
const ACC_FWD = new Set(["w", "ArrowUp"]);
const ACC_BRAKE = new Set(["s", "ArrowDown"]);
const TAKEOVER = new Set([" ", "Space"]);

export class KeyboardController {
  private held = new Set<string>();
  private engaged = false;
  private lastSent: { steer: number; acc: number } | null = null;

  constructor(private send: (msg: OverrideMessage) => void,
              private now: () => number = () => Date.now()) {}

  /** Current mapped action. Steering left is negative steer. */
  action(): { steer: number; acc: number } {
    const has = (keys: Set<string>) =>
      [...keys].some((k) => this.held.has(k));
    const steer = (has(STEER_RIGHT) ? 1 : 0) - (has(STEER_LEFT) ? 1 : 0);
    const acc = (has(ACC_FWD) ? 1 : 0) - (has(ACC_BRAKE) ? 1 : 0);
    return { steer, acc };
  }

  get isEngaged(): boolean {
    return this.engaged;
  }

  keydown(key: string): void {
    if (this.held.has(key)) return; // ignore auto-repeat
    this.held.add(key);
    if (TAKEOVER.has(key) && !this.engaged) {
      this.engaged = true;
      this.lastSent = null;
      this.send({ type: "override_begin", t: this.now() });
      this.sendAction();
      return;
    }
    if (this.engaged) this.sendAction();
  }

  keyup(key: string): void {
    this.held.delete(key);
    if (TAKEOVER.has(key) && this.engaged) {
      this.engaged = false;
      this.send({ type: "override_end", t: this.now() });
      return;
    }
    if (this.engaged) this.sendAction();
  }

  /** Disconnect or blur: drop all keys and end an active override. */
  reset(): void {
    this.held.clear();
    if (this.engaged) {
      this.engaged = false;
      this.send({ type: "override_end", t: this.now() });
    }
  }

  private sendAction(): void {
    const a = this.action();
    if (this.lastSent !== null &&
        this.lastSent.steer === a.steer && this.lastSent.acc === a.acc) {
      return; // action held constant between key events
    }
    this.lastSent = a;
    this.send({ type: "override_action", ...a, t: this.now() });
  }
}
