/** Viewer state machine: input coalescing, render loop, frame display.
 *
 * Pure protocol logic with no DOM or socket dependencies; the host
 * wires a transport's bytes into handleBytes/handleDisconnect and
 * forwards user input, then calls tick once per animation frame.  All
 * geometry happens server-side: this module only turns input events
 * into navigate payloads and render parameter overrides.
 */
import { MessageReader, Header, encodeMessage } from "./protocol.js";

export interface FrameInfo {
  id: number;
  width: number;
  height: number;
  rgb: Uint8Array;
  latencyMs: number;
}

export interface WeightsEntry {
  name: string;
  values: number[];
}

export interface ViewerEvents {
  /** a new frame passed the monotone-id gate and should be drawn */
  onFrame?: (frame: FrameInfo) => void;
  /** connection, manifold, or readout state changed */
  onState?: () => void;
  /** the service reported an application error */
  onError?: (message: string) => void;
}

const TRANSLATE_STEP = 0.02; // per tick while a key is held
const SCROLL_STEP = 0.15; // per queued scroll notch
const DRAG_SENSITIVITY = 0.005; // radians per pixel
const IDLE_DELAY_MS = 250; // input quiet time before hi-res
export const IDLE_SIZE = 512;
export const MOVING_SIZE = 256;

const utf8 = new TextDecoder();

export class Viewer {
  // control state, mirrored by the page widgets
  radiusExponent = 2; // R = e^k, slider range [0, 5]
  fov = 90;
  colormap = "default";
  supersample = false;
  maxSteps = 4096;
  weightsName: string | null = null;

  // session state
  connected = false;
  loaded = false;
  manifold: string | null = null;
  tetrahedra = 0;
  weightsList: WeightsEntry[] = [];
  camTet: string | null = null;
  camMatrix: string | null = null;
  lastError: string | null = null;

  // readouts
  displayedFrameId = 0; // never decreases
  lastFrame: FrameInfo | null = null;
  lastLatencyMs: number | null = null;

  private events: ViewerEvents;
  private send: ((bytes: Uint8Array) => void) | null = null;
  private reader = new MessageReader();

  // input accumulators, drained once per tick
  private keysDown = new Set<string>();
  private dragDx = 0;
  private dragDy = 0;
  private scrollQueue: Array<[number, number, number]> = [];
  private lastInputAt = -Infinity;

  // render loop bookkeeping
  private needsRender = false;
  private outstanding = false;
  private outstandingSentAt = 0;
  private requestSeq = 0;
  private lastRequestedSize = 0;

  constructor(events: ViewerEvents = {}) {
    this.events = events;
  }

  /** Wire a fresh transport; re-issues the load for a chosen manifold. */
  attach(send: (bytes: Uint8Array) => void): void {
    this.send = send;
    this.reader = new MessageReader();
    this.connected = true;
    this.loaded = false;
    this.outstanding = false;
    this.lastError = null;
    if (this.manifold !== null) {
      this.send(encodeMessage({ type: "load" }, new TextEncoder().encode(this.manifold)));
    }
    this.events.onState?.();
  }

  handleDisconnect(): void {
    this.connected = false;
    this.loaded = false;
    this.send = null;
    this.outstanding = false;
    this.keysDown.clear();
    this.dragDx = this.dragDy = 0;
    this.scrollQueue.length = 0;
    this.events.onState?.();
  }

  loadManifold(name: string): void {
    this.manifold = name;
    if (!this.connected || this.send === null) return;
    this.loaded = false;
    this.send(encodeMessage({ type: "load" }, new TextEncoder().encode(name)));
  }

  // ---- input handlers; events while disconnected are dropped ----

  keyDown(code: string, now: number): void {
    if (!this.connected) return;
    this.keysDown.add(code);
    this.lastInputAt = now;
  }

  keyUp(code: string, now: number): void {
    this.keysDown.delete(code);
    this.lastInputAt = now;
  }

  /** Mouse drag in pixels; zero-length drags produce no rotation. */
  dragBy(dx: number, dy: number, now: number): void {
    if (!this.connected) return;
    this.dragDx += dx;
    this.dragDy += dy;
    if (dx !== 0 || dy !== 0) this.lastInputAt = now;
  }

  /** One scroll notch toward the cursor at (cx, cy) in [0,1] canvas
   * coordinates; each notch becomes one fixed-step forward flow. */
  scroll(cx: number, cy: number, now: number): void {
    if (!this.connected) return;
    const half = Math.tan((this.fov * Math.PI) / 360);
    const a = (2 * cx - 1) * half;
    const b = -(2 * cy - 1) * half; // canvas is square; y grows downward
    const norm = Math.hypot(a, b, 1);
    this.scrollQueue.push([a / norm, b / norm, 1 / norm]);
    this.lastInputAt = now;
  }

  // ---- control setters; any change schedules a re-render ----

  setRadiusExponent(k: number): void {
    k = Math.min(5, Math.max(0, k));
    if (k !== this.radiusExponent) {
      this.radiusExponent = k;
      this.needsRender = true;
    }
  }

  setFov(fov: number): void {
    if (fov !== this.fov) {
      this.fov = fov;
      this.needsRender = true;
    }
  }

  setColormap(name: string): void {
    if (name !== this.colormap) {
      this.colormap = name;
      this.needsRender = true;
    }
  }

  setSupersample(on: boolean): void {
    if (on !== this.supersample) {
      this.supersample = on;
      this.needsRender = true;
    }
  }

  setWeights(name: string): void {
    if (name !== this.weightsName) {
      this.weightsName = name;
      this.needsRender = true;
    }
  }

  get radius(): number {
    return Math.exp(this.radiusExponent);
  }

  moving(now: number): boolean {
    return (
      this.keysDown.size > 0 ||
      this.scrollQueue.length > 0 ||
      now - this.lastInputAt < IDLE_DELAY_MS
    );
  }

  /** One animation tick: at most one navigate and one render request. */
  tick(now: number): void {
    if (!this.connected || !this.loaded || this.send === null) return;

    const nav = this.drainNavigation();
    if (nav !== null) {
      this.send(encodeMessage({ type: "navigate" }, new TextEncoder().encode(nav)));
      this.needsRender = true;
    }

    const size = this.moving(now) ? MOVING_SIZE : IDLE_SIZE;
    if (size !== this.lastRequestedSize) this.needsRender = true;

    if (this.needsRender && !this.outstanding) {
      this.requestSeq += 1;
      this.send(
        encodeMessage({
          type: "render",
          id: `q${this.requestSeq}`,
          width: size,
          height: size,
          fov: this.fov,
          radius: this.radius,
          maxSteps: this.maxSteps,
          colormap: this.colormap,
          supersample: this.supersample ? 2 : 1,
          ...(this.weightsName !== null ? { weightsName: this.weightsName } : {}),
        }),
      );
      this.outstanding = true;
      this.outstandingSentAt = now;
      this.lastRequestedSize = size;
      this.needsRender = false;
    }
  }

  /** Collapse accumulated input into one navigate payload, or null. */
  private drainNavigation(): string | null {
    let tx = 0;
    let ty = 0;
    let tz = 0;
    for (const code of this.keysDown) {
      switch (code) {
        case "KeyW":
        case "ArrowUp":
          tz += TRANSLATE_STEP;
          break;
        case "KeyS":
        case "ArrowDown":
          tz -= TRANSLATE_STEP;
          break;
        case "KeyD":
        case "ArrowRight":
          tx += TRANSLATE_STEP;
          break;
        case "KeyA":
        case "ArrowLeft":
          tx -= TRANSLATE_STEP;
          break;
      }
    }
    const notch = this.scrollQueue.shift();
    if (notch !== undefined) {
      tx += SCROLL_STEP * notch[0];
      ty += SCROLL_STEP * notch[1];
      tz += SCROLL_STEP * notch[2];
    }
    const rx = this.dragDy * DRAG_SENSITIVITY;
    const ry = this.dragDx * DRAG_SENSITIVITY;
    this.dragDx = this.dragDy = 0;
    if (tx === 0 && ty === 0 && tz === 0 && rx === 0 && ry === 0) return null;
    return [tx, ty, tz, rx, ry, 0].map(String).join(" ");
  }

  /** Feed raw transport bytes; dispatches every complete reply. */
  handleBytes(chunk: Uint8Array, now: number): void {
    for (const message of this.reader.feed(chunk)) {
      this.dispatch(message.fields, message.payload, now);
    }
  }

  private dispatch(fields: Header, payload: Uint8Array, now: number): void {
    switch (fields.type) {
      case "loaded": {
        this.parseLoaded(utf8.decode(payload));
        this.loaded = true;
        this.needsRender = true;
        this.events.onState?.();
        break;
      }
      case "camera": {
        this.camTet = fields.camTet ?? null;
        this.camMatrix = fields.camMatrix ?? null;
        this.events.onState?.();
        break;
      }
      case "frame": {
        this.outstanding = false;
        const id = Number(fields.id);
        // stale or duplicate ids are never displayed
        if (Number.isFinite(id) && id > this.displayedFrameId) {
          const frame: FrameInfo = {
            id,
            width: Number(fields.width),
            height: Number(fields.height),
            rgb: payload,
            latencyMs: now - this.outstandingSentAt,
          };
          this.displayedFrameId = id;
          this.lastFrame = frame;
          this.lastLatencyMs = frame.latencyMs;
          this.events.onFrame?.(frame);
          this.events.onState?.();
        }
        break;
      }
      case "ack": {
        // a superseded request will never produce a frame
        this.outstanding = false;
        break;
      }
      case "error": {
        this.outstanding = false;
        this.lastError = utf8.decode(payload);
        this.events.onError?.(this.lastError);
        this.events.onState?.();
        break;
      }
    }
  }

  private parseLoaded(text: string): void {
    this.weightsList = [];
    for (const line of text.split("\n")) {
      const parts = line.split(/\s+/).filter((p) => p.length > 0);
      if (parts[0] === "tetrahedra") this.tetrahedra = Number(parts[1]);
      if (parts[0] === "weights") {
        this.weightsList.push({
          name: parts[1],
          values: parts.slice(2).map(Number),
        });
      }
    }
    if (
      this.weightsName === null ||
      !this.weightsList.some((w) => w.name === this.weightsName)
    ) {
      this.weightsName = this.weightsList[0]?.name ?? null;
    }
  }
}
