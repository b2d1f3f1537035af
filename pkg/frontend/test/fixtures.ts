/** Shared test data: a state payload shaped like the photo-chain space. */

import type { Assignment, ParamSpecObj, StateView } from "../src/types";

export const SPACE: ParamSpecObj[] = [
  {
    name: "filter",
    kind: "categorical",
    choices: ["none", "mono", "sepia", "duotone", "tealorange", "noir", "fade", "amber"],
    identity: "none",
  },
  { name: "filter_strength", kind: "continuous", low: 0, high: 1, identity: 0 },
  { name: "temperature", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "tint", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "brightness", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "contrast", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "saturation", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "gamma", kind: "continuous", low: -1, high: 1, identity: 0 },
  { name: "vignette", kind: "continuous", low: 0, high: 1, identity: 0 },
];

export const BEST: Assignment = {
  filter: "sepia",
  filter_strength: 0.85,
  temperature: 0.1,
  tint: 0,
  brightness: 0.4,
  contrast: -0.05,
  saturation: 0.2,
  gamma: 0,
  vignette: 0.45,
};

export function makeState(overrides: Partial<StateView> = {}): StateView {
  return {
    artifact_version: "stylefit-result/1",
    metric_id: "stylefit-builtin/1",
    norm: "l1",
    space: SPACE.map((spec) => ({ ...spec })),
    current: { ...BEST },
    best: { ...BEST },
    best_objective: 0.0123,
    current_distance: 0.0123,
    original: "/tmp/content.png",
    reference: "/tmp/reference.png",
    candidates: null,
    candidate_index: null,
    ...overrides,
  };
}
