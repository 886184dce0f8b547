// Wires the socket, the view-state reducer, the canvas and the controls.

import { handsMessage, ServerMessage, Vec3 } from "./protocol.js";
import { SessionSocket } from "./net.js";
import {
  initialViewState,
  onConnection,
  onDragEnd,
  onDragMove,
  onDragStart,
  onFrame,
  onServerError,
  ViewState,
} from "./state.js";
import { hitTestHandle, makeProjection, renderScene } from "./view.js";
import { renderErrorPlot } from "./plot.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const plot = document.getElementById("errplot") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;
const taskSel = document.getElementById("task") as HTMLSelectElement;
const ctrlSel = document.getElementById("controller") as HTMLSelectElement;
const noiseBox = document.getElementById("noise") as HTMLInputElement;

let state: ViewState = initialViewState();

const url = `ws://${location.host}/ws`;
const socket = new SessionSocket({
  url,
  onMessage: (msg: ServerMessage) => {
    if (msg.type === "frame") {
      state = onFrame(state, msg);
      taskSel.value = msg.task;
      ctrlSel.value = msg.controller;
      noiseBox.checked = msg.noise;
    } else {
      state = onServerError(state, msg.code, msg.detail ?? "");
    }
    draw();
  },
  onPhase: (phase) => {
    state = onConnection(state, phase);
    draw();
  },
});
socket.connect();

function draw(): void {
  const ctx = canvas.getContext("2d")!;
  renderScene(ctx, canvas.width, canvas.height, state);
  const pctx = plot.getContext("2d")!;
  renderErrorPlot(pctx, plot.width, plot.height, state.errorHistory);
  const bits: string[] = [state.phase];
  if (state.viewOnly) bits.push("view-only");
  if (state.frame) bits.push(`tick ${state.frame.tick}`);
  if (state.lastError) bits.push(state.lastError);
  statusEl.textContent = bits.join(" · ");
}

// ---- dragging -------------------------------------------------------------
// Hands move in the plane of the initial hand edge (z = handle z); holding
// Shift moves the dragged hand along the view axis instead.

let dragZBase = 0;
let dragStartY = 0;

function pointerWorld(ev: PointerEvent, zPlane: number): Vec3 {
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  return makeProjection(canvas.width, canvas.height).screenToWorld(x, y, zPlane);
}

canvas.addEventListener("pointerdown", (ev) => {
  if (!state.frame) return;
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  const proj = makeProjection(canvas.width, canvas.height);
  const handle = hitTestHandle(state.frame, proj, x, y);
  if (!handle) return;
  const current = state.frame.corners[handle];
  dragZBase = current[2];
  dragStartY = ev.clientY;
  state = onDragStart(state, handle, current);
  canvas.setPointerCapture(ev.pointerId);
  draw();
});

canvas.addEventListener("pointermove", (ev) => {
  const drag = state.drag;
  const frame = state.frame;
  if (!drag || !frame) return;
  let target: Vec3;
  if (ev.shiftKey) {
    // view-axis drag: vertical pointer motion maps to world z
    const proj = makeProjection(canvas.width, canvas.height);
    const dz = (dragStartY - ev.clientY) / proj.scale;
    const cur = frame.corners[drag.handle];
    target = [cur[0], cur[1], dragZBase + dz];
  } else {
    target = pointerWorld(ev, dragZBase);
  }
  state = onDragMove(state, target);
  const hands = drag.handle === "v2"
    ? handsMessage(target, frame.corners.v3)
    : handsMessage(frame.corners.v2, target);
  socket.sendHands(hands);
  draw();
});

canvas.addEventListener("pointerup", () => {
  state = onDragEnd(state);
  draw();
});

// ---- controls ---------------------------------------------------------------

taskSel.addEventListener("change", () => {
  socket.send({ type: "set_task", task: taskSel.value });
});
ctrlSel.addEventListener("change", () => {
  socket.send({ type: "set_controller", name: ctrlSel.value });
});
noiseBox.addEventListener("change", () => {
  socket.send({ type: "set_noise", enabled: noiseBox.checked });
});
