/** Console state: a pure reducer over server messages plus the button
 * gating that mirrors the host's session state machine. All UI layers
 * (DOM app, tests, fuzzers) drive this one class so the gating they see
 * is identical. */

import {
  Action,
  FrameMsg,
  HelloMsg,
  Intrinsics,
  MODES_BY_STATE,
  ResultMsg,
  SelectionModeName,
  ServerMsg,
  SESSION_STATES,
  SessionStateName,
  stateOrder,
} from "./messages.js";
import { NO_DATA, Triple, degrees, labeledPoint, meters } from "./format.js";

export type HoverReadout =
  | { kind: "none" }
  | { kind: "no_data" }
  | { kind: "point"; camera: Triple; base: Triple; standoff: number };

export interface ParameterPanel {
  doorWidth?: number;
  doorRotation?: string;
  handleLength?: number;
  handleRotation?: string;
  deviationRad?: number;
  contactPoint?: Triple;
  lastResidual?: number;
  ackOf?: number;
}

interface PendingAction {
  id: number;
  action: Action;
}

export class ConsoleModel {
  connection: "connecting" | "connected" | "closed" = "connecting";
  role: "controller" | "observer" | null = null;
  sessionState: SessionStateName = "AwaitWidthPoints";
  intrinsics: Intrinsics | null = null;
  latestFrame: FrameMsg | null = null;
  framesDropped = 0;

  pickMode: SelectionModeName | null = null;
  hover: HoverReadout = { kind: "none" };
  panel: ParameterPanel = {};
  lastError: { code: string; message: string } | null = null;
  lastNotice: string | null = null;

  /** true once a hover actually read depth; approach needs a standoff */
  hasStandoff = false;
  /** true once an approach set a target; confirm needs one */
  hasApproachTarget = false;

  private nextId = 1;
  private pending = new Map<number, PendingAction>();

  // --- gating (must stay equal to the server's legality rules) ---------

  get pendingCount(): number {
    return this.pending.size;
  }

  allowedModes(): SelectionModeName[] {
    if (this.role === "observer") return [];
    return MODES_BY_STATE[this.sessionState];
  }

  canHover(): boolean {
    return this.latestFrame !== null || this.connection === "connected";
  }

  canApproach(): boolean {
    return (
      this.role === "controller" &&
      this.hasStandoff &&
      (this.sessionState === "AwaitWidthPoints" || this.sessionState === "Approaching")
    );
  }

  canConfirm(): boolean {
    return (
      this.role === "controller" &&
      this.hasApproachTarget &&
      this.hasStandoff &&
      (this.sessionState === "AwaitWidthPoints" || this.sessionState === "Approaching")
    );
  }

  canOrient(): boolean {
    return this.role === "controller" && this.sessionState === "Orienting";
  }

  canSend(): boolean {
    return this.role === "controller" && this.sessionState === "ReadyToSend";
  }

  resetTargets(): SessionStateName[] {
    if (this.role !== "controller") return [];
    const order = stateOrder(this.sessionState);
    return SESSION_STATES.filter((s) => stateOrder(s) <= order);
  }

  // --- building requests -----------------------------------------------

  buildRequest(action: Action): { kind: "action"; id: number; action: Action } {
    const id = this.nextId++;
    this.pending.set(id, { id, action });
    return { kind: "action", id, action };
  }

  clampPixel(u: number, v: number): [number, number] {
    const w = this.intrinsics?.width ?? 640;
    const h = this.intrinsics?.height ?? 480;
    return [
      Math.min(Math.max(Math.round(u), 0), w - 1),
      Math.min(Math.max(Math.round(v), 0), h - 1),
    ];
  }

  // --- reducers ----------------------------------------------------------

  applyServer(msg: ServerMsg): void {
    if (msg.kind === "hello") {
      this.applyHello(msg as HelloMsg);
    } else if (msg.kind === "frame") {
      this.applyFrame(msg as FrameMsg);
    } else if (msg.kind === "result") {
      this.applyResult(msg as ResultMsg);
    }
  }

  private applyHello(msg: HelloMsg): void {
    this.connection = "connected";
    this.role = msg.role;
    this.sessionState = msg.state;
    this.intrinsics = msg.intrinsics;
  }

  private lastRenderedSeq = -1;

  /** The UI calls this after painting the latest frame. */
  markRendered(): void {
    if (this.latestFrame) this.lastRenderedSeq = this.latestFrame.seq;
  }

  private applyFrame(msg: FrameMsg): void {
    // pull-latest: an unpainted previous frame is simply replaced
    if (this.latestFrame !== null && this.latestFrame.seq !== this.lastRenderedSeq) {
      this.framesDropped += 1;
    }
    this.latestFrame = msg;
    this.sessionState = msg.state;
  }

  private applyResult(msg: ResultMsg): void {
    const pending = msg.id !== undefined ? this.pending.get(msg.id) : undefined;
    if (msg.id !== undefined) this.pending.delete(msg.id);
    if (msg.state !== undefined) this.sessionState = msg.state;
    if (!msg.ok) {
      this.lastError = msg.error ?? { code: "unknown", message: "unknown error" };
      if (pending?.action.op === "hover") {
        this.hover = { kind: "no_data" };
        this.hasStandoff = false;
      }
      if (msg.error?.code === "collinear_points") {
        this.lastNotice = "normal picks were collinear and have been cleared; re-pick";
      }
      if (msg.error?.code === "transport_timeout" || msg.error?.code === "transport_closed") {
        this.lastNotice = "slave link failed; the parameter set was kept, retry Send";
      }
      return;
    }
    this.lastError = null;
    if (!pending) return;
    const result = (msg.result ?? {}) as Record<string, any>;
    switch (pending.action.op) {
      case "hover":
        this.applyHoverResult(result);
        break;
      case "approach":
        this.hasApproachTarget = true;
        this.lastNotice = `drove ${Number(result.drive_distance).toFixed(3)} m`;
        break;
      case "confirm":
        this.panel.lastResidual = Number(result.residual);
        this.lastNotice = `standoff residual ${meters(Number(result.residual))}`;
        break;
      case "select":
        this.applySelectResult(result);
        break;
      case "orient":
        this.lastNotice = `oriented by ${degrees(Number(result.theta_diff))}`;
        break;
      case "finalize":
        this.panel.ackOf = Number(result.ack_of);
        this.lastNotice = `parameters sent, ack #${result.ack_of}`;
        break;
      case "reset":
        this.panel = {};
        this.pickMode = null;
        this.lastNotice = `session reset to ${pending.action.state}`;
        break;
    }
  }

  private applyHoverResult(result: Record<string, any>): void {
    if (result.no_data) {
      this.hover = { kind: "no_data" };
      this.hasStandoff = false;
      return;
    }
    this.hover = {
      kind: "point",
      camera: result.camera_point as Triple,
      base: result.base_point as Triple,
      standoff: Number(result.standoff),
    };
    this.hasStandoff = true;
  }

  private applySelectResult(result: Record<string, any>): void {
    switch (result.kind) {
      case "width_measured":
        this.panel.doorWidth = Number(result.door_width);
        this.panel.doorRotation = String(result.door_rotation);
        break;
      case "handle_measured":
        this.panel.handleLength = Number(result.handle_length);
        this.panel.handleRotation = String(result.handle_rotation);
        break;
      case "normal_computed":
        this.panel.deviationRad = Number(result.deviation_rad);
        break;
      case "contact_stored":
        this.panel.contactPoint = result.contact_point as Triple;
        break;
    }
  }

  // --- readout text -------------------------------------------------------

  hoverText(): { camera: string; base: string; standoff: string } {
    if (this.hover.kind !== "point") {
      const label = this.hover.kind === "no_data" ? NO_DATA : "—";
      return { camera: label, base: label, standoff: label };
    }
    return {
      camera: labeledPoint("camera", this.hover.camera),
      base: labeledPoint("base", this.hover.base),
      standoff: meters(this.hover.standoff),
    };
  }

  deviationText(): string {
    return this.panel.deviationRad === undefined ? "—" : degrees(this.panel.deviationRad);
  }
}

declare module "./messages.js" {
  interface FrameMsg {
    /** set by the UI when this frame has been painted */
    rendered?: boolean;
  }
}
