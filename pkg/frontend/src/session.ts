/**
 * Operator session over the WebSocket bridge.
 *
 * Announces itself with Hello(operator), then only ever sends IMU
 * samples; every control action reaches the robot through the remote
 * recognition pipeline, never as a direct velocity command. Incoming
 * frames fan out to typed handlers; the newest state snapshot is kept
 * in a one-slot buffer for the render loop.
 */

import {
  decodeFrame,
  encodeFrame,
  fromBase64,
  toBase64,
  ProtocolError,
  ROLE_OPERATOR,
  type ImuSampleMsg,
  type Message,
} from "./protocol";

export interface SceneDoc {
  type: "scene";
  name: string;
  arena: { x_min: number; x_max: number; y_min: number; y_max: number };
  walls: { x1: number; y1: number; x2: number; y2: number }[];
  pins: { x: number; y: number; radius: number }[];
  start: { x: number; y: number; theta: number };
  goal: Record<string, unknown>;
  scoring: string;
  footprint_radius: number;
}

export interface StateSnapshot {
  type: "state";
  t_s: number;
  mode: string;
  pose: { x: number; y: number; theta: number };
  v: number;
  omega: number;
  pins: { x: number; y: number; standing: boolean }[];
  goal_reached: boolean;
  event: { kind: string; pin?: number; t_s: number } | null;
}

export interface SessionHandlers {
  onScene?: (scene: SceneDoc) => void;
  onState?: (state: StateSnapshot) => void;
  onAck?: (gestureId: number) => void;
  onMode?: (mode: number) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

/** The subset of the browser WebSocket API the session relies on;
 *  the `ws` package satisfies it too, which is what the tests use. */
export interface WebSocketLike {
  binaryType?: string;
  readyState: number;
  send(data: string): void;
  close(): void;
  // event param types differ between DOM and ws sockets; any keeps both assignable
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
}

const WS_OPEN = 1;

export class ConsoleSession {
  readonly sent = { hello: 0, imu: 0 };
  badSnapshots = 0;
  closed = false;
  private readonly ws: WebSocketLike;
  private readonly handlers: SessionHandlers;
  private latest: StateSnapshot | null = null;

  constructor(ws: WebSocketLike, handlers: SessionHandlers = {}) {
    this.ws = ws;
    this.handlers = handlers;
    if ("binaryType" in ws) ws.binaryType = "arraybuffer";
    ws.onmessage = (ev) => this.handleData(ev.data);
    ws.onclose = () => {
      this.closed = true;
      handlers.onClose?.();
    };
    ws.onerror = () => {
      /* the close handler carries the user-visible signal */
    };
    if (ws.readyState === WS_OPEN) {
      this.hello();
    } else {
      ws.onopen = () => this.hello();
    }
  }

  latestState(): StateSnapshot | null {
    return this.latest;
  }

  sendSample(sample: ImuSampleMsg): void {
    if (this.closed || this.ws.readyState !== WS_OPEN) return;
    this.ws.send(toBase64(encodeFrame(sample)));
    this.sent.imu++;
  }

  close(): void {
    this.closed = true;
    this.ws.close();
  }

  private hello(): void {
    this.ws.send(toBase64(encodeFrame({ kind: "hello", role: ROLE_OPERATOR })));
    this.sent.hello++;
    this.handlers.onOpen?.();
  }

  private handleData(data: unknown): void {
    let frame: Uint8Array;
    try {
      if (typeof data === "string") {
        frame = fromBase64(data);
      } else if (data instanceof ArrayBuffer) {
        frame = new Uint8Array(data);
      } else if (ArrayBuffer.isView(data)) {
        frame = new Uint8Array(data.buffer, data.byteOffset, data.byteLength);
      } else {
        this.badSnapshots++;
        return;
      }
      this.dispatch(decodeFrame(frame));
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.badSnapshots++;
        return;
      }
      throw err;
    }
  }

  private dispatch(msg: Message): void {
    switch (msg.kind) {
      case "telemetry": {
        let doc: { type?: string };
        try {
          doc = JSON.parse(new TextDecoder().decode(msg.data));
        } catch {
          this.badSnapshots++;
          return;
        }
        if (doc.type === "scene") {
          this.handlers.onScene?.(doc as SceneDoc);
        } else if (doc.type === "state") {
          this.latest = doc as StateSnapshot;
          this.handlers.onState?.(this.latest);
        } else {
          this.badSnapshots++;
        }
        return;
      }
      case "ack":
        this.handlers.onAck?.(msg.gestureId);
        return;
      case "mode":
        this.handlers.onMode?.(msg.mode);
        return;
      default:
        // nothing else is addressed to an operator
        this.badSnapshots++;
    }
  }
}
