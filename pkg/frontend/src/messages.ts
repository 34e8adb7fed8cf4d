/** Operator socket schema (version 1) shared with the host service. */

export const OPERATOR_SCHEMA_VERSION = 1;

export const SESSION_STATES = [
  "AwaitWidthPoints",
  "Approaching",
  "AwaitHandlePoints",
  "AwaitNormalPoints",
  "Orienting",
  "AwaitContactPoint",
  "ReadyToSend",
  "Sent",
] as const;

export type SessionStateName = (typeof SESSION_STATES)[number];

export const SELECTION_MODES = [
  "WidthP1",
  "WidthP2",
  "HandleP1",
  "HandleP2",
  "NormalPA",
  "NormalPB",
  "NormalPC",
  "Contact",
] as const;

export type SelectionModeName = (typeof SELECTION_MODES)[number];

/** Pick modes legal per mirrored session state; must match the server. */
export const MODES_BY_STATE: Record<SessionStateName, SelectionModeName[]> = {
  AwaitWidthPoints: ["WidthP1", "WidthP2"],
  Approaching: [],
  AwaitHandlePoints: ["HandleP1", "HandleP2"],
  AwaitNormalPoints: ["NormalPA", "NormalPB", "NormalPC"],
  Orienting: [],
  AwaitContactPoint: ["Contact"],
  ReadyToSend: [],
  Sent: [],
};

export function stateOrder(state: SessionStateName): number {
  return SESSION_STATES.indexOf(state);
}

export interface Intrinsics {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  depth_min: number;
  depth_max: number;
}

export interface HelloMsg {
  kind: "hello";
  version: number;
  role: "controller" | "observer";
  state: SessionStateName;
  intrinsics: Intrinsics;
}

export interface FrameMsg {
  kind: "frame";
  seq: number;
  timestamp_ms: number;
  state: SessionStateName;
  width: number;
  height: number;
  png_b64: string;
}

export interface WireError {
  code: string;
  message: string;
}

export interface ResultMsg {
  kind: "result";
  id: number;
  ok: boolean;
  state?: SessionStateName;
  result?: Record<string, unknown>;
  error?: WireError;
  report?: Record<string, unknown>;
  pong?: boolean;
}

export type ServerMsg = HelloMsg | FrameMsg | ResultMsg;

export type Action =
  | { op: "hover"; u: number; v: number }
  | { op: "select"; mode: SelectionModeName; u: number; v: number; frame_timestamp?: number }
  | { op: "approach"; target: number }
  | { op: "confirm" }
  | { op: "orient" }
  | { op: "finalize" }
  | { op: "reset"; state: SessionStateName };

export interface ActionRequest {
  kind: "action";
  id: number;
  action: Action;
}
