// Integration tests: real ApiClient + real DOM (jsdom), only fetch mocked.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { ExplorerApp } from "../src/app";
import type { Assignment } from "../src/types";
import { BEST, makeState } from "./fixtures";

interface RenderCall {
  overrides: Assignment;
  disable: string[];
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function pngResponse(distance: string): Response {
  return new Response(new Blob([new Uint8Array([137, 80, 78, 71])]), {
    status: 200,
    headers: { "Content-Type": "image/png", "X-Style-Distance": distance },
  });
}

class Harness {
  renderCalls: RenderCall[] = [];
  renderReply: () => Response = () => pngResponse("0.5");
  stateReply: () => Response = () => jsonResponse(makeState());
  readonly root: HTMLElement;
  readonly app: ExplorerApp;

  constructor() {
    document.body.innerHTML = '<div id="app"></div>';
    this.root = document.getElementById("app")!;
    const fetchFn = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
      const url = String(input);
      if (url.endsWith("/v1/state")) return this.stateReply();
      if (url.endsWith("/v1/render")) {
        this.renderCalls.push(JSON.parse(init?.body as string) as RenderCall);
        return this.renderReply();
      }
      if (url.endsWith("/v1/optimize")) return jsonResponse({ ok: true });
      if (url.endsWith("/v1/progress")) {
        return jsonResponse({
          running: false,
          trials_done: 0,
          budget: 0,
          best_objective: 0.0123,
          error: null,
        });
      }
      throw new Error(`unexpected request: ${url}`);
    };
    this.app = new ExplorerApp(this.root, new ApiClient("", fetchFn as typeof fetch), 150);
  }

  async start(): Promise<void> {
    await this.app.init();
    await vi.advanceTimersByTimeAsync(0); // settle the initial preview render
  }

  slider(name: string): HTMLInputElement {
    const node = this.root.querySelector<HTMLInputElement>(
      `[data-param="${name}"] input.slider`,
    );
    if (!node) throw new Error(`no slider for ${name}`);
    return node;
  }

  drag(name: string, value: number): void {
    const slider = this.slider(name);
    slider.value = String(value);
    slider.dispatchEvent(new Event("input", { bubbles: true }));
  }

  toggle(name: string, enabled: boolean): void {
    const box = this.root.querySelector<HTMLInputElement>(`[data-param="${name}"] input.enable`);
    if (!box) throw new Error(`no toggle for ${name}`);
    box.checked = enabled;
    box.dispatchEvent(new Event("change", { bubbles: true }));
  }

  clickAction(id: string): void {
    const button = this.root.querySelector<HTMLButtonElement>(`button[data-action="${id}"]`);
    if (!button) throw new Error(`no action ${id}`);
    button.click();
  }

  distanceText(): string {
    return this.root.querySelector(".distance-value")!.textContent ?? "";
  }

  toastTexts(): string[] {
    return [...this.root.querySelectorAll(".toast")].map((t) => t.textContent ?? "");
  }
}

describe("ExplorerApp", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("generates one control per parameter from /v1/state", async () => {
    const h = new Harness();
    await h.start();
    expect(h.root.querySelectorAll(".control").length).toBe(9);
    expect(h.root.querySelectorAll("input.slider").length).toBe(8);
    expect(h.root.querySelectorAll("select.choice").length).toBe(1);
    expect(h.root.querySelectorAll("input.enable").length).toBe(9);
    expect(h.root.querySelector(".banner")!.classList.contains("hidden")).toBe(true);
  });

  it("renders the current assignment immediately and shows the server distance", async () => {
    const h = new Harness();
    h.renderReply = () => pngResponse("0.0123");
    await h.start();
    expect(h.renderCalls).toHaveLength(1);
    expect(h.renderCalls[0]!.overrides).toEqual(BEST);
    expect(h.renderCalls[0]!.disable).toEqual([]);
    expect(h.distanceText()).toBe("0.0123");
  });

  it("debounces slider drags into one render per pause", async () => {
    const h = new Harness();
    await h.start();
    const before = h.renderCalls.length;
    for (const v of [0.1, 0.2, 0.3, -0.2, -0.5]) {
      h.drag("brightness", v);
      await vi.advanceTimersByTimeAsync(10);
    }
    await vi.advanceTimersByTimeAsync(150);
    expect(h.renderCalls.length).toBe(before + 1);
    expect(h.renderCalls.at(-1)!.overrides.brightness).toBe(-0.5);
  });

  it("sends disabled parameters in disable, not overrides", async () => {
    const h = new Harness();
    await h.start();
    h.toggle("brightness", false);
    await vi.advanceTimersByTimeAsync(150);
    const call = h.renderCalls.at(-1)!;
    expect(call.disable).toEqual(["brightness"]);
    expect("brightness" in call.overrides).toBe(false);
    const slider = h.slider("brightness");
    expect(slider.disabled).toBe(true);
  });

  it("invert negates zero-identity continuous controls", async () => {
    const h = new Harness();
    await h.start();
    h.clickAction("invert");
    await vi.advanceTimersByTimeAsync(150);
    const call = h.renderCalls.at(-1)!;
    expect(call.overrides.brightness).toBe(-BEST.brightness!);
    expect(call.overrides.temperature).toBe(-(BEST.temperature as number));
    expect(call.overrides.vignette).toBe(0); // clamped at the low bound
    expect(call.overrides.filter).toBe(BEST.filter); // categorical untouched
    expect(h.slider("brightness").value).toBe(String(-BEST.brightness!));
  });

  it("reset to transcribed restores the fitted assignment", async () => {
    const h = new Harness();
    await h.start();
    h.drag("brightness", -0.9);
    h.toggle("vignette", false);
    await vi.advanceTimersByTimeAsync(150);
    h.clickAction("reset-transcribed");
    await vi.advanceTimersByTimeAsync(150);
    const call = h.renderCalls.at(-1)!;
    expect(call.overrides).toEqual(BEST);
    expect(call.disable).toEqual([]);
  });

  it("reset to identity sends every parameter at its identity", async () => {
    const h = new Harness();
    await h.start();
    h.clickAction("reset-identity");
    await vi.advanceTimersByTimeAsync(150);
    const call = h.renderCalls.at(-1)!;
    expect(call.overrides.filter).toBe("none");
    for (const name of Object.keys(BEST).filter((n) => n !== "filter")) {
      expect(call.overrides[name]).toBe(0);
    }
  });

  it("keeps the previous distance and shows a toast when a render fails", async () => {
    const h = new Harness();
    h.renderReply = () => pngResponse("0.0123");
    await h.start();
    expect(h.distanceText()).toBe("0.0123");

    h.renderReply = () =>
      jsonResponse(
        { violations: [{ name: "brightness", code: "out_of_bounds", message: "out of bounds" }] },
        422,
      );
    h.drag("brightness", 0.9);
    await vi.advanceTimersByTimeAsync(150);
    expect(h.distanceText()).toBe("0.0123");
    expect(h.toastTexts().join(" ")).toContain("brightness");
  });

  it("shows a banner and no controls when the service is unreachable", async () => {
    const h = new Harness();
    h.stateReply = () => {
      throw new TypeError("fetch failed");
    };
    await h.start();
    const banner = h.root.querySelector(".banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("unreachable");
    expect(h.root.querySelectorAll(".control").length).toBe(0);
    expect(h.renderCalls).toHaveLength(0);
  });
});
