/** Thin typed client for the control service HTTP and WebSocket API. */

import type {
  ApiErrorBody,
  ConfigDoc,
  MapSummary,
  Phase,
  Screen,
  StatsDoc,
  StatusDoc,
} from "./types.js";

/** An HTTP response outside 2xx, carrying the service's error document. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
    this.name = "ApiError";
  }
}

export interface GenerateMapRequest {
  calibration: unknown;
  output: string;
  rows?: number;
  cols?: number;
  tile_w?: number;
  tile_h?: number;
  force?: boolean;
}

type FetchLike = typeof fetch;

/** Minimal WebSocket surface the panel relies on; matches both the browser
 * class and the ws package, so tests can inject the latter. */
export interface SocketLike {
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onopen: ((ev: unknown) => void) | null;
  close(): void;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

function defaultSocketFactory(url: string): SocketLike {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
  if (!ctor) throw new Error("no WebSocket implementation available");
  return new ctor(url);
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;
  readonly socketFactory: SocketFactory;

  /**
   * @param base origin like "http://127.0.0.1:8787", or "" to use the page's
   *   own origin (the normal browser deployment behind the serve command).
   */
  constructor(
    readonly base = "",
    opts: { fetchImpl?: FetchLike; socketFactory?: SocketFactory } = {},
  ) {
    this.fetchImpl = opts.fetchImpl ?? ((...a) => fetch(...a));
    this.socketFactory = opts.socketFactory ?? defaultSocketFactory;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    if (res.ok) return (await res.json()) as T;
    let body: ApiErrorBody;
    try {
      body = (await res.json()) as ApiErrorBody;
    } catch {
      body = { error: `HTTP${res.status}`, detail: res.statusText };
    }
    if (typeof body?.error !== "string") {
      body = { error: `HTTP${res.status}`, detail: JSON.stringify(body) };
    }
    throw new ApiError(res.status, body);
  }

  private json(method: string, body: unknown): RequestInit {
    return {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    };
  }

  status(): Promise<StatusDoc> {
    return this.request("/api/status");
  }

  screens(): Promise<Screen[]> {
    return this.request<{ screens: Screen[] }>("/api/screens").then((d) => d.screens);
  }

  getConfig(): Promise<ConfigDoc> {
    return this.request("/api/config");
  }

  /** Deep-merge a partial document; resolves to the full updated config. */
  patchConfig(patch: unknown): Promise<ConfigDoc> {
    return this.request("/api/config", this.json("PATCH", patch));
  }

  start(patch?: unknown): Promise<{ phase: Phase }> {
    return this.request(
      "/api/pipeline/start",
      patch === undefined ? { method: "POST" } : this.json("POST", patch),
    );
  }

  stop(): Promise<{ phase: Phase; stats: StatsDoc }> {
    return this.request("/api/pipeline/stop", { method: "POST" });
  }

  generateMap(req: GenerateMapRequest): Promise<MapSummary> {
    return this.request("/api/map/generate", this.json("POST", req));
  }

  inspectMap(path: string): Promise<MapSummary> {
    return this.request(`/api/map/inspect?path=${encodeURIComponent(path)}`);
  }

  /** ws:// URL for an API path, derived from the configured origin. */
  wsUrl(path: string): string {
    if (this.base) return this.base.replace(/^http/, "ws") + path;
    const loc = (globalThis as { location?: { protocol: string; host: string } }).location;
    if (!loc) throw new Error("no base origin and no window.location");
    const scheme = loc.protocol === "https:" ? "wss:" : "ws:";
    return `${scheme}//${loc.host}${path}`;
  }

  statsSocket(): SocketLike {
    return this.socketFactory(this.wsUrl("/ws/stats"));
  }

  previewSocket(): SocketLike {
    return this.socketFactory(this.wsUrl("/ws/preview"));
  }
}
