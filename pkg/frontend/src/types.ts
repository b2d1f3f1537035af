/** Payload shapes of the /v1/ HTTP API. */

export type ParamKind = "continuous" | "integer" | "categorical";

export interface ParamSpecObj {
  name: string;
  kind: ParamKind;
  low?: number;
  high?: number;
  choices?: string[];
  /** Neutral value; a disabled control renders as this. Optional. */
  identity?: number | string;
}

export type ParamValue = number | string;
export type Assignment = Record<string, ParamValue>;

export interface StateView {
  artifact_version: string;
  metric_id: string;
  norm: string;
  space: ParamSpecObj[];
  current: Assignment;
  best: Assignment;
  best_objective: number;
  current_distance: number;
  original: string;
  reference: string;
  candidates: string[] | null;
  candidate_index: number | null;
}

export interface Progress {
  running: boolean;
  trials_done: number;
  budget: number;
  best_objective: number;
  error: string | null;
}

export interface Violation {
  name: string;
  code: string;
  message: string;
}

export interface RenderResult {
  blob: Blob;
  /** Style distance computed by the server for exactly this image. */
  distance: number;
}
