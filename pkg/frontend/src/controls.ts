/** Pure state logic for the control panel.

Controls are generated from the parameter space the service reports;
nothing here knows any parameter by name. All operations return a new
panel value (the old one is never mutated), which keeps them trivial to
test and lets the page treat "state changed" as "re-render".
*/

import type { Assignment, ParamSpecObj, ParamValue, StateView } from "./types";

export interface ControlState {
  spec: ParamSpecObj;
  value: ParamValue;
  enabled: boolean;
}

export interface PanelState {
  controls: ControlState[];
  /** The fitted assignment the run converged to (slider markers). */
  transcribed: Assignment;
}

export interface RenderBody {
  overrides: Assignment;
  disable: string[];
}

function clampNumber(spec: ParamSpecObj, raw: number): number {
  const low = spec.low ?? -Infinity;
  const high = spec.high ?? Infinity;
  let v = Math.min(Math.max(raw, low), high);
  if (spec.kind === "integer") {
    v = Math.min(Math.max(Math.round(v), low), high);
  }
  return v;
}

function startValue(spec: ParamSpecObj, current: Assignment): ParamValue {
  if (spec.name in current) {
    return current[spec.name]!;
  }
  if (spec.identity !== undefined) {
    return spec.identity;
  }
  if (spec.kind === "categorical") {
    return spec.choices?.[0] ?? "";
  }
  return spec.low ?? 0;
}

/** Build the initial panel from a /v1/state payload: every parameter in
 * space order, valued at the service's current assignment, enabled. */
export function panelFromState(view: StateView): PanelState {
  return {
    controls: view.space.map((spec) => ({
      spec,
      value: startValue(spec, view.current),
      enabled: true,
    })),
    transcribed: { ...view.best },
  };
}

function mapControl(
  panel: PanelState,
  name: string,
  update: (control: ControlState) => ControlState,
): PanelState {
  return {
    ...panel,
    controls: panel.controls.map((c) => (c.spec.name === name ? update(c) : c)),
  };
}

/** Set one control's value; numeric values are clamped to the declared
 * bounds (and rounded for integer parameters), categorical values must
 * be one of the declared choices. */
export function setValue(panel: PanelState, name: string, raw: ParamValue): PanelState {
  return mapControl(panel, name, (control) => {
    if (control.spec.kind === "categorical") {
      const choices = control.spec.choices ?? [];
      return choices.includes(String(raw)) ? { ...control, value: String(raw) } : control;
    }
    const numeric = typeof raw === "number" ? raw : Number(raw);
    if (!Number.isFinite(numeric)) {
      return control;
    }
    return { ...control, value: clampNumber(control.spec, numeric) };
  });
}

export function setEnabled(panel: PanelState, name: string, enabled: boolean): PanelState {
  return mapControl(panel, name, (control) =>
    control.spec.identity === undefined ? control : { ...control, enabled },
  );
}

/** Move every control to the value the transcription run fitted. */
export function resetToTranscribed(panel: PanelState): PanelState {
  return {
    ...panel,
    controls: panel.controls.map((control) =>
      control.spec.name in panel.transcribed
        ? { ...control, value: panel.transcribed[control.spec.name]!, enabled: true }
        : { ...control, enabled: true },
    ),
  };
}

/** Move every control with a declared identity to that identity. */
export function resetToIdentity(panel: PanelState): PanelState {
  return {
    ...panel,
    controls: panel.controls.map((control) =>
      control.spec.identity === undefined
        ? { ...control, enabled: true }
        : { ...control, value: control.spec.identity, enabled: true },
    ),
  };
}

/** Negate every continuous control whose identity is 0, clamped to its
 * bounds. Categorical controls and controls whose identity is not 0 are
 * left untouched. */
export function invert(panel: PanelState): PanelState {
  return {
    ...panel,
    controls: panel.controls.map((control) => {
      if (control.spec.kind !== "continuous" || control.spec.identity !== 0) {
        return control;
      }
      const negated = clampNumber(control.spec, -(control.value as number));
      return { ...control, value: negated };
    }),
  };
}

/** The /v1/render request body for the panel: enabled controls override
 * to their current values, disabled controls are listed for the server
 * to pin at identity. */
export function renderBody(panel: PanelState): RenderBody {
  const overrides: Assignment = {};
  const disable: string[] = [];
  for (const control of panel.controls) {
    if (control.enabled) {
      overrides[control.spec.name] = control.value;
    } else {
      disable.push(control.spec.name);
    }
  }
  return { overrides, disable };
}
