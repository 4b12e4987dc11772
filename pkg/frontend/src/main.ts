/** Browser wiring: DOM widgets, canvas drawing, WebSocket transport. */
import { Viewer, FrameInfo, IDLE_SIZE } from "./viewer.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const statusOut = document.getElementById("status")!;
const frameOut = document.getElementById("frame-id")!;
const latencyOut = document.getElementById("latency")!;
const radiusIn = document.getElementById("radius") as HTMLInputElement;
const radiusOut = document.getElementById("radius-label")!;
const fovIn = document.getElementById("fov") as HTMLInputElement;
const colormapIn = document.getElementById("colormap") as HTMLSelectElement;
const supersampleIn = document.getElementById("supersample") as HTMLInputElement;
const weightsIn = document.getElementById("weights") as HTMLSelectElement;

const controls = [radiusIn, fovIn, colormapIn, supersampleIn, weightsIn];

function drawFrame(frame: FrameInfo): void {
  canvas.width = frame.width;
  canvas.height = frame.height;
  const rgba = new ImageData(frame.width, frame.height);
  for (let i = 0, j = 0; i < frame.rgb.length; i += 3, j += 4) {
    rgba.data[j] = frame.rgb[i];
    rgba.data[j + 1] = frame.rgb[i + 1];
    rgba.data[j + 2] = frame.rgb[i + 2];
    rgba.data[j + 3] = 255;
  }
  ctx.putImageData(rgba, 0, 0);
}

function refresh(): void {
  banner.style.display = viewer.connected ? "none" : "block";
  statusOut.textContent = viewer.connected
    ? viewer.loaded
      ? `connected, ${viewer.manifold} (${viewer.tetrahedra} tetrahedra)`
      : "connected, loading"
    : "disconnected";
  frameOut.textContent = String(viewer.displayedFrameId);
  latencyOut.textContent =
    viewer.lastLatencyMs === null ? "-" : `${viewer.lastLatencyMs.toFixed(0)} ms`;
  radiusOut.textContent = `R = e^${viewer.radiusExponent.toFixed(2)} = ${viewer.radius.toFixed(2)}`;
  for (const el of controls) el.disabled = !viewer.connected;
  if (weightsIn.options.length !== viewer.weightsList.length) {
    weightsIn.replaceChildren(
      ...viewer.weightsList.map((w) => new Option(w.name, w.name)),
    );
  }
  if (viewer.weightsName !== null) weightsIn.value = viewer.weightsName;
}

const viewer = new Viewer({
  onFrame: drawFrame,
  onState: refresh,
  onError: (message) => {
    statusOut.textContent = `error: ${message}`;
  },
});

// ---- controls ----

radiusIn.addEventListener("input", () => {
  viewer.setRadiusExponent(Number(radiusIn.value));
  refresh();
});
fovIn.addEventListener("input", () => viewer.setFov(Number(fovIn.value)));
colormapIn.addEventListener("change", () => viewer.setColormap(colormapIn.value));
supersampleIn.addEventListener("change", () =>
  viewer.setSupersample(supersampleIn.checked),
);
weightsIn.addEventListener("change", () => viewer.setWeights(weightsIn.value));

// ---- keyboard and mouse ----

window.addEventListener("keydown", (e) => {
  if (e.repeat) return;
  viewer.keyDown(e.code, performance.now());
});
window.addEventListener("keyup", (e) => viewer.keyUp(e.code, performance.now()));

let dragging = false;
canvas.addEventListener("mousedown", () => {
  dragging = true;
});
window.addEventListener("mouseup", () => {
  dragging = false;
});
window.addEventListener("mousemove", (e) => {
  if (dragging) viewer.dragBy(e.movementX, e.movementY, performance.now());
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const cx = (e.clientX - rect.left) / rect.width;
  const cy = (e.clientY - rect.top) / rect.height;
  const notches = Math.max(1, Math.round(Math.abs(e.deltaY) / 100));
  for (let i = 0; i < notches; i++) {
    if (e.deltaY < 0) viewer.scroll(cx, cy, performance.now());
  }
});

// ---- transport with automatic reconnect ----

function connect(): void {
  const ws = new WebSocket(`ws://${location.host}/ws`);
  ws.binaryType = "arraybuffer";
  ws.onopen = () => viewer.attach((bytes) => ws.send(bytes));
  ws.onmessage = (e) =>
    viewer.handleBytes(new Uint8Array(e.data as ArrayBuffer), performance.now());
  ws.onclose = () => {
    viewer.handleDisconnect();
    setTimeout(connect, 1000);
  };
  ws.onerror = () => ws.close();
}

viewer.loadManifold("m004");
canvas.width = canvas.height = IDLE_SIZE;
connect();

function loop(): void {
  viewer.tick(performance.now());
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
