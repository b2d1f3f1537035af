/** Thin typed client for the /v1/ HTTP API.

The client never computes style distances itself: render() reports the
distance the server attached to the image it returned, so what the page
shows is always the server's number for the displayed pixels.
*/

import type { Assignment, Progress, RenderResult, StateView, Violation } from "./types";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
    readonly violations: Violation[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** True when the service could not be reached at all. */
  get unreachable(): boolean {
    return this.status === null;
  }
}

async function errorFromResponse(response: Response): Promise<ApiError> {
  let detail = `${response.status} ${response.statusText}`;
  let violations: Violation[] = [];
  try {
    const body = await response.json();
    if (Array.isArray(body?.violations)) {
      violations = body.violations as Violation[];
      detail = violations.map((v) => `${v.name}: ${v.message}`).join("; ");
    } else if (typeof body?.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // Non-JSON error body; keep the status line.
  }
  return new ApiError(detail, response.status, violations);
}

export class ApiClient {
  private readonly fetchFn: typeof fetch;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: typeof fetch,
  ) {
    this.fetchFn = fetchFn ?? ((...args) => fetch(...args));
  }

  private async call(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return response;
  }

  private async callJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.call(path, init);
    return (await response.json()) as T;
  }

  getState(): Promise<StateView> {
    return this.callJson<StateView>("/v1/state");
  }

  getProgress(): Promise<Progress> {
    return this.callJson<Progress>("/v1/progress");
  }

  async render(overrides: Assignment, disable: string[]): Promise<RenderResult> {
    const response = await this.call("/v1/render", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ overrides, disable }),
    });
    const header = response.headers.get("X-Style-Distance");
    const distance = header === null ? NaN : Number(header);
    if (!Number.isFinite(distance)) {
      throw new ApiError("render reply carried no usable X-Style-Distance header", response.status);
    }
    return { blob: await response.blob(), distance };
  }

  async setParams(assignment: Assignment): Promise<void> {
    await this.callJson("/v1/params", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ assignment }),
    });
  }

  async optimize(iters: number): Promise<void> {
    await this.callJson("/v1/optimize", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ iters }),
    });
  }

  bestImageUrl(): string {
    return `${this.baseUrl}/v1/image/best`;
  }

  referenceImageUrl(): string {
    return `${this.baseUrl}/v1/image/reference`;
  }
}
