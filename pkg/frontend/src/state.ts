// View state is a pure function of the last server frame plus any local
// drag in flight; there is no client-side simulation.

import type { Frame, Vec3 } from "./protocol.js";

export type ConnectionPhase = "connecting" | "connected" | "disconnected";

export interface DragState {
  handle: "v2" | "v3";
  // world-space target the pointer currently implies (pre-clamp; the
  // server echo is authoritative for what is rendered at the handle)
  target: Vec3;
}

export interface ViewState {
  phase: ConnectionPhase;
  frame: Frame | null;
  drag: DragState | null;
  viewOnly: boolean;         // driver role denied
  lastError: string | null;
  errorHistory: number[];    // server-reported per-frame error, verbatim
}

export const HISTORY_LENGTH = 300;

export function initialViewState(): ViewState {
  return {
    phase: "connecting",
    frame: null,
    drag: null,
    viewOnly: false,
    lastError: null,
    errorHistory: [],
  };
}

export function onFrame(state: ViewState, frame: Frame): ViewState {
  const history = state.errorHistory.concat([frame.error]);
  if (history.length > HISTORY_LENGTH) {
    history.splice(0, history.length - HISTORY_LENGTH);
  }
  return { ...state, frame, errorHistory: history, phase: "connected" };
}

export function onServerError(state: ViewState, code: string, detail: string): ViewState {
  if (code === "not_driver") {
    return { ...state, viewOnly: true, lastError: "view-only: another client drives" };
  }
  return { ...state, lastError: `${code}: ${detail}` };
}

export function onConnection(state: ViewState, phase: ConnectionPhase): ViewState {
  // a reconnect starts a fresh driving negotiation
  const viewOnly = phase === "connected" ? false : state.viewOnly;
  return { ...state, phase, viewOnly, drag: phase === "connected" ? state.drag : null };
}

export function onDragStart(state: ViewState, handle: "v2" | "v3", target: Vec3): ViewState {
  if (state.phase !== "connected" || state.viewOnly) return state;
  return { ...state, drag: { handle, target } };
}

export function onDragMove(state: ViewState, target: Vec3): ViewState {
  if (state.drag === null) return state;
  return { ...state, drag: { ...state.drag, target } };
}

export function onDragEnd(state: ViewState): ViewState {
  return { ...state, drag: null };
}

// Rendered handle positions: always the server-confirmed corner positions;
// the in-flight drag target is drawn separately as a ghost.
export function handlePositions(state: ViewState): { v2: Vec3; v3: Vec3 } | null {
  if (state.frame === null) return null;
  return { v2: state.frame.corners.v2, v3: state.frame.corners.v3 };
}

// The hands message implied by a drag: the dragged handle moves to the
// pointer target, the other stays at its server-confirmed position.
export function dragHands(state: ViewState): { v2: Vec3; v3: Vec3 } | null {
  if (state.drag === null || state.frame === null) return null;
  const confirmed = handlePositions(state)!;
  if (state.drag.handle === "v2") {
    return { v2: state.drag.target, v3: confirmed.v3 };
  }
  return { v2: confirmed.v2, v3: state.drag.target };
}
