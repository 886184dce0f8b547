// Wire protocol shared with the session server: JSON text messages over a
// websocket.  Frames stream server -> client; hands/set_* go the other way.

export type Vec3 = [number, number, number];

export interface Frame {
  type: "frame";
  tick: number;
  time: number;
  task: string;
  controller: string;
  noise: boolean;
  has_driver: boolean;
  nx: number;
  ny: number;
  vertex_count: number;
  vertices: Vec3[];
  corners: { v0: Vec3; v1: Vec3; v2: Vec3; v3: Vec3 };
  action: number[];
  expert: number[];
  error: number;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail?: string;
}

export type ServerMessage = Frame | ErrorMsg;

export type ClientMessage =
  | { type: "hands"; v2: Vec3; v3: Vec3 }
  | { type: "set_task"; task: string }
  | { type: "set_controller"; name: string }
  | { type: "set_noise"; enabled: boolean };

export class ProtocolError extends Error {}

function isVec3(x: unknown): x is Vec3 {
  return Array.isArray(x) && x.length === 3 && x.every((v) => Number.isFinite(v));
}

export function parseServerMessage(raw: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new ProtocolError("not JSON");
  }
  if (typeof obj !== "object" || obj === null || !("type" in obj)) {
    throw new ProtocolError("missing type field");
  }
  const msg = obj as Record<string, unknown>;
  if (msg.type === "error") {
    if (typeof msg.code !== "string") throw new ProtocolError("error without code");
    return { type: "error", code: msg.code, detail: String(msg.detail ?? "") };
  }
  if (msg.type !== "frame") {
    throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
  const corners = msg.corners as Record<string, unknown> | undefined;
  if (
    typeof msg.tick !== "number" ||
    typeof msg.vertex_count !== "number" ||
    !Array.isArray(msg.vertices) ||
    corners === undefined ||
    !isVec3(corners.v0) ||
    !isVec3(corners.v1) ||
    !isVec3(corners.v2) ||
    !isVec3(corners.v3) ||
    !Array.isArray(msg.action) ||
    msg.action.length !== 6 ||
    !Array.isArray(msg.expert) ||
    msg.expert.length !== 6 ||
    typeof msg.error !== "number"
  ) {
    throw new ProtocolError("malformed frame");
  }
  if (msg.vertices.length !== msg.vertex_count) {
    throw new ProtocolError("vertex count mismatch");
  }
  return msg as unknown as Frame;
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function handsMessage(v2: Vec3, v3: Vec3): ClientMessage {
  return { type: "hands", v2, v3 };
}
