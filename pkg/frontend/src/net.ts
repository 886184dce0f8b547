// Websocket wrapper: reconnect with exponential backoff, plus a throttle
// that keeps hands messages at or below the server tick rate.

import {
  ClientMessage,
  encodeClientMessage,
  parseServerMessage,
  ProtocolError,
  ServerMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

export interface SessionSocketOptions {
  url: string;
  onMessage: (msg: ServerMessage) => void;
  onPhase: (phase: "connecting" | "connected" | "disconnected") => void;
  makeSocket?: (url: string) => SocketLike;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (id: unknown) => void;
  now?: () => number;
  tickMs?: number;        // hands throttle period (server tick)
  backoffBaseMs?: number;
  backoffMaxMs?: number;
}

export class SessionSocket {
  private opts: Required<SessionSocketOptions>;
  private socket: SocketLike | null = null;
  private attempts = 0;
  private lastHandsSent = -Infinity;
  private pendingHands: ClientMessage | null = null;
  private handsTimer: unknown = null;
  private closed = false;

  constructor(opts: SessionSocketOptions) {
    this.opts = {
      makeSocket: (url: string) => new WebSocket(url) as unknown as SocketLike,
      setTimer: (fn, ms) => setTimeout(fn, ms),
      clearTimer: (id) => clearTimeout(id as number),
      now: () => Date.now(),
      tickMs: 33,
      backoffBaseMs: 250,
      backoffMaxMs: 8000,
      ...opts,
    };
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.opts.onPhase("connecting");
    const sock = this.opts.makeSocket(this.opts.url);
    this.socket = sock;
    sock.onopen = () => {
      this.attempts = 0;
      this.opts.onPhase("connected");
    };
    sock.onclose = () => {
      this.socket = null;
      this.opts.onPhase("disconnected");
      if (!this.closed) this.scheduleReconnect();
    };
    sock.onmessage = (ev) => {
      let msg: ServerMessage;
      try {
        msg = parseServerMessage(ev.data);
      } catch (err) {
        if (err instanceof ProtocolError) return; // drop unintelligible frames
        throw err;
      }
      this.opts.onMessage(msg);
    };
  }

  backoffDelay(attempt: number): number {
    const d = this.opts.backoffBaseMs * Math.pow(2, attempt);
    return Math.min(d, this.opts.backoffMaxMs);
  }

  private scheduleReconnect(): void {
    const delay = this.backoffDelay(this.attempts);
    this.attempts += 1;
    this.opts.setTimer(() => {
      if (!this.closed) this.open();
    }, delay);
  }

  close(): void {
    this.closed = true;
    if (this.socket) this.socket.close();
  }

  send(msg: ClientMessage): void {
    if (this.socket === null) return;
    this.socket.send(encodeClientMessage(msg));
  }

  // Hands messages are throttled: at most one per tick, the latest target
  // wins.  Control messages are never throttled.
  sendHands(msg: ClientMessage): void {
    const now = this.opts.now();
    if (now - this.lastHandsSent >= this.opts.tickMs) {
      this.lastHandsSent = now;
      this.send(msg);
      return;
    }
    this.pendingHands = msg;
    if (this.handsTimer === null) {
      const wait = this.opts.tickMs - (now - this.lastHandsSent);
      this.handsTimer = this.opts.setTimer(() => {
        this.handsTimer = null;
        if (this.pendingHands !== null) {
          this.lastHandsSent = this.opts.now();
          this.send(this.pendingHands);
          this.pendingHands = null;
        }
      }, wait);
    }
  }
}
