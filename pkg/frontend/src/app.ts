/** DOM wiring: one page that loads the parameter space from the service,
 * generates a control per parameter, and keeps a debounced live preview
 * (image + server-computed style distance) in sync with the controls.
 *
 * Nothing here hardcodes parameter names or semantics — a new parameter
 * on the server simply shows up as one more control.
 */

import { ApiClient, ApiError } from "./api";
import {
  invert,
  panelFromState,
  renderBody,
  resetToIdentity,
  resetToTranscribed,
  setEnabled,
  setValue,
  type PanelState,
} from "./controls";
import { RenderScheduler } from "./scheduler";
import type { ParamSpecObj, ParamValue, StateView } from "./types";

const TOAST_MS = 4000;
const PROGRESS_POLL_MS = 250;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function sliderStep(spec: ParamSpecObj): number {
  if (spec.kind === "integer") return 1;
  const span = (spec.high ?? 1) - (spec.low ?? 0);
  return span / 400;
}

function formatValue(value: ParamValue): string {
  return typeof value === "number" ? value.toPrecision(4).replace(/\.?0+$/, "") : value;
}

export class ExplorerApp {
  panel: PanelState | null = null;
  private readonly scheduler: RenderScheduler;
  private previewUrl: string | null = null;
  private polling = false;

  private readonly banner = el("div", "banner hidden");
  private readonly toasts = el("div", "toasts");
  private readonly preview = el("img", "preview");
  private readonly reference = el("img", "reference");
  private readonly distanceValue = el("span", "distance-value", "–");
  private readonly fittedValue = el("span", "fitted-value", "–");
  private readonly controlsBox = el("div", "controls");
  private readonly progressLine = el("div", "progress", "");
  private readonly itersInput = el("input") as HTMLInputElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    debounceMs = 150,
  ) {
    this.scheduler = new RenderScheduler((isCurrent) => this.renderPreview(isCurrent), debounceMs);
  }

  /** Load /v1/state and build the page; on failure show the banner and
   * leave the controls disabled. */
  async init(): Promise<void> {
    this.buildSkeleton();
    let state: StateView;
    try {
      state = await this.api.getState();
    } catch (err) {
      this.showBanner(
        err instanceof ApiError && err.unreachable
          ? "Service unreachable — start `stylefit serve` and reload."
          : `Service error: ${err instanceof Error ? err.message : String(err)}`,
      );
      return;
    }
    this.banner.classList.add("hidden");
    this.panel = panelFromState(state);
    this.fittedValue.textContent = String(state.best_objective);
    this.distanceValue.textContent = String(state.current_distance);
    this.reference.src = this.api.referenceImageUrl();
    this.buildControls();
    this.scheduler.requestNow();
  }

  // --- rendering ----------------------------------------------------------

  private async renderPreview(isCurrent: () => boolean): Promise<void> {
    if (!this.panel) return;
    const body = renderBody(this.panel);
    try {
      const result = await this.api.render(body.overrides, body.disable);
      if (!isCurrent()) return; // superseded by a newer edit
      this.distanceValue.textContent = String(result.distance);
      this.setPreviewImage(result.blob);
    } catch (err) {
      if (!isCurrent()) return;
      this.toast(err instanceof Error ? err.message : String(err));
    }
  }

  private setPreviewImage(blob: Blob): void {
    // jsdom has no createObjectURL; skip the pixels there, keep the state.
    if (typeof URL.createObjectURL !== "function") return;
    const url = URL.createObjectURL(blob);
    if (this.previewUrl) URL.revokeObjectURL(this.previewUrl);
    this.previewUrl = url;
    this.preview.src = url;
  }

  // --- panel edits ----------------------------------------------------------

  private update(next: PanelState): void {
    this.panel = next;
    this.syncControls();
    this.scheduler.request();
  }

  private edit(name: string, raw: ParamValue): void {
    if (this.panel) this.update(setValue(this.panel, name, raw));
  }

  private toggle(name: string, enabled: boolean): void {
    if (this.panel) this.update(setEnabled(this.panel, name, enabled));
  }

  // --- DOM construction -----------------------------------------------------

  private buildSkeleton(): void {
    this.root.textContent = "";
    this.root.append(this.banner, this.toasts);

    const images = el("div", "images");
    const previewBox = el("figure", "image-box");
    previewBox.append(this.preview, el("figcaption", "", "preview"));
    const referenceBox = el("figure", "image-box");
    referenceBox.append(this.reference, el("figcaption", "", "reference"));
    images.append(previewBox, referenceBox);

    const readout = el("div", "readout");
    const current = el("div", "distance");
    current.append(el("span", "label", "style distance "), this.distanceValue);
    const fitted = el("div", "fitted");
    fitted.append(el("span", "label", "fitted distance "), this.fittedValue);
    readout.append(current, fitted);

    const actions = el("div", "actions");
    actions.append(
      this.actionButton("reset-transcribed", "Reset to transcribed", () => {
        if (this.panel) this.update(resetToTranscribed(this.panel));
      }),
      this.actionButton("reset-identity", "Reset to identity", () => {
        if (this.panel) this.update(resetToIdentity(this.panel));
      }),
      this.actionButton("invert", "Invert", () => {
        if (this.panel) this.update(invert(this.panel));
      }),
    );

    const optimize = el("div", "optimize");
    this.itersInput.type = "number";
    this.itersInput.min = "1";
    this.itersInput.value = "100";
    this.itersInput.className = "iters";
    optimize.append(
      this.itersInput,
      this.actionButton("optimize", "Optimize more", () => void this.startOptimize()),
      this.progressLine,
    );

    this.root.append(images, readout, actions, this.controlsBox, optimize);
  }

  private actionButton(id: string, label: string, onClick: () => void): HTMLButtonElement {
    const button = el("button", "action") as HTMLButtonElement;
    button.dataset.action = id;
    button.textContent = label;
    button.addEventListener("click", onClick);
    return button;
  }

  private buildControls(): void {
    this.controlsBox.textContent = "";
    if (!this.panel) return;
    for (const control of this.panel.controls) {
      const spec = control.spec;
      const row = el("div", "control");
      row.dataset.param = spec.name;

      const enable = el("input") as HTMLInputElement;
      enable.type = "checkbox";
      enable.className = "enable";
      enable.checked = control.enabled;
      enable.disabled = spec.identity === undefined;
      enable.addEventListener("change", () => this.toggle(spec.name, enable.checked));

      const label = el("label", "name", spec.name);
      row.append(enable, label);

      if (spec.kind === "categorical") {
        const select = el("select", "choice") as HTMLSelectElement;
        for (const choice of spec.choices ?? []) {
          const option = el("option", "", choice) as HTMLOptionElement;
          option.value = choice;
          select.append(option);
        }
        select.value = String(control.value);
        select.addEventListener("change", () => this.edit(spec.name, select.value));
        row.append(select);
      } else {
        const slider = el("input", "slider") as HTMLInputElement;
        slider.type = "range";
        slider.min = String(spec.low ?? 0);
        slider.max = String(spec.high ?? 1);
        slider.step = String(sliderStep(spec));
        slider.value = String(control.value);
        slider.addEventListener("input", () => this.edit(spec.name, Number(slider.value)));

        const marks = el("datalist") as HTMLDataListElement;
        marks.id = `marks-${spec.name}`;
        const transcribed = this.panel.transcribed[spec.name];
        if (typeof transcribed === "number") {
          const mark = el("option") as HTMLOptionElement;
          mark.value = String(transcribed);
          mark.label = "transcribed";
          marks.append(mark);
        }
        slider.setAttribute("list", marks.id);
        row.append(slider, marks);
      }

      row.append(el("span", "value", formatValue(control.value)));
      this.controlsBox.append(row);
    }
    this.syncControls();
  }

  /** Push panel values back into the existing DOM controls. */
  private syncControls(): void {
    if (!this.panel) return;
    for (const control of this.panel.controls) {
      const row = this.controlsBox.querySelector<HTMLElement>(
        `[data-param="${control.spec.name}"]`,
      );
      if (!row) continue;
      row.classList.toggle("disabled", !control.enabled);
      const enable = row.querySelector<HTMLInputElement>("input.enable");
      if (enable) enable.checked = control.enabled;
      const slider = row.querySelector<HTMLInputElement>("input.slider");
      if (slider) {
        slider.value = String(control.value);
        slider.disabled = !control.enabled;
      }
      const select = row.querySelector<HTMLSelectElement>("select.choice");
      if (select) {
        select.value = String(control.value);
        select.disabled = !control.enabled;
      }
      const valueLabel = row.querySelector<HTMLElement>("span.value");
      if (valueLabel) valueLabel.textContent = formatValue(control.value);
    }
  }

  // --- optimize -------------------------------------------------------------

  private async startOptimize(): Promise<void> {
    const iters = Number(this.itersInput.value);
    if (!Number.isInteger(iters) || iters < 1) {
      this.toast("iterations must be a positive integer");
      return;
    }
    try {
      await this.api.optimize(iters);
    } catch (err) {
      this.toast(err instanceof Error ? err.message : String(err));
      return;
    }
    void this.pollProgress();
  }

  private async pollProgress(): Promise<void> {
    if (this.polling) return;
    this.polling = true;
    try {
      for (;;) {
        let progress;
        try {
          progress = await this.api.getProgress();
        } catch (err) {
          this.toast(err instanceof Error ? err.message : String(err));
          return;
        }
        this.progressLine.textContent = progress.running
          ? `optimizing… ${progress.trials_done}/${progress.budget} (best ${progress.best_objective})`
          : `done: best ${progress.best_objective}`;
        if (!progress.running) {
          if (progress.error) this.toast(progress.error);
          await this.refreshAfterOptimize();
          return;
        }
        await new Promise((resolve) => setTimeout(resolve, PROGRESS_POLL_MS));
      }
    } finally {
      this.polling = false;
    }
  }

  private async refreshAfterOptimize(): Promise<void> {
    let state: StateView;
    try {
      state = await this.api.getState();
    } catch (err) {
      this.toast(err instanceof Error ? err.message : String(err));
      return;
    }
    this.fittedValue.textContent = String(state.best_objective);
    if (this.panel) {
      this.panel = { ...this.panel, transcribed: { ...state.best } };
    }
    this.scheduler.request();
  }

  // --- notices ----------------------------------------------------------------

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
    this.controlsBox.classList.add("offline");
  }

  private toast(message: string): void {
    const note = el("div", "toast", message);
    this.toasts.append(note);
    setTimeout(() => note.remove(), TOAST_MS);
  }
}
