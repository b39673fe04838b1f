import type { AskRequest, AskResponse, Depth, Health, Neighborhood } from "./types.js";

/** Error carrying the HTTP status and whatever detail the service returned. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

async function parseDetail(response: Response): Promise<unknown> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return body.detail ?? body;
  } catch {
    return response.statusText;
  }
}

/** Thin fetch-based client for the engine's JSON API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  ask(req: AskRequest): Promise<AskResponse> {
    return this.request<AskResponse>("/api/ask", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  neighborhood(entity: string, depth: Depth): Promise<Neighborhood> {
    const params = new URLSearchParams({ entity, depth: String(depth) });
    return this.request<Neighborhood>(`/api/graph/neighborhood?${params.toString()}`);
  }

  health(): Promise<Health> {
    return this.request<Health>("/api/health");
  }
}
