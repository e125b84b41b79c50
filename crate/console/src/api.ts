import type {
  ApiErrorDoc,
  CatalogDoc,
  EntitySummary,
  HeatmapDoc,
  JobDoc,
  RedundancyDoc,
  RootsDoc,
  ScanSpec,
  SimilarityDoc,
  SnapshotDoc,
} from "./types.js";

export type ApiResult<T> =
  | { ok: true; status: number; data: T }
  | { ok: false; status: number; error: ApiErrorDoc["error"] }
  | { ok: false; status: 0; superseded: true };

/** Every route the console calls. Kept as data so tests can audit it. */
export const ROUTES = {
  snapshot: { method: "GET", path: "/api/snapshot" },
  entity: { method: "GET", path: "/api/entity/{qid}" },
  redundancy: { method: "GET", path: "/api/entity/{qid}/redundancy" },
  similarity: { method: "GET", path: "/api/entity/{qid}/similarity" },
  roots: { method: "GET", path: "/api/roots/top" },
  heatmap: { method: "GET", path: "/api/heatmap" },
  catalog: { method: "GET", path: "/api/i18n/{lang}" },
  scan: { method: "POST", path: "/api/scan" },
  job: { method: "GET", path: "/api/jobs/{id}" },
} as const;

export type RouteName = keyof typeof ROUTES;

export interface Call {
  route: RouteName;
  method: string;
  url: string;
  body?: string;
}

type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

/**
 * Thin client over the JSON API. Concurrent requests to the same route are
 * deduplicated: a newer call aborts the one in flight, and the older caller
 * sees `superseded`.
 */
export class ApiClient {
  private inflight = new Map<RouteName, AbortController>();
  readonly calls: Call[] = [];

  constructor(
    private base: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  snapshot() {
    return this.request<SnapshotDoc>("snapshot", "/api/snapshot");
  }

  entity(qid: string, lang?: string) {
    const q = lang ? `?lang=${encodeURIComponent(lang)}` : "";
    return this.request<EntitySummary>("entity", `/api/entity/${encodeURIComponent(qid)}${q}`);
  }

  redundancy(qid: string, maxPaths: number) {
    return this.request<RedundancyDoc>(
      "redundancy",
      `/api/entity/${encodeURIComponent(qid)}/redundancy?max_paths=${maxPaths}`,
    );
  }

  similarity(qid: string) {
    return this.request<SimilarityDoc>("similarity", `/api/entity/${encodeURIComponent(qid)}/similarity`);
  }

  roots(n = 20) {
    return this.request<RootsDoc>("roots", `/api/roots/top?n=${n}`);
  }

  heatmap() {
    return this.request<HeatmapDoc>("heatmap", "/api/heatmap");
  }

  catalog(lang: string) {
    return this.request<CatalogDoc>("catalog", `/api/i18n/${encodeURIComponent(lang)}`);
  }

  scan(spec: ScanSpec) {
    return this.request<JobDoc>("scan", "/api/scan", JSON.stringify(spec));
  }

  job(id: string) {
    return this.request<JobDoc>("job", `/api/jobs/${encodeURIComponent(id)}`);
  }

  private async request<T>(route: RouteName, path: string, body?: string): Promise<ApiResult<T>> {
    this.inflight.get(route)?.abort();
    const ctrl = new AbortController();
    this.inflight.set(route, ctrl);
    const method = ROUTES[route].method;
    const url = this.base + path;
    this.calls.push({ route, method, url, body });

    try {
      const resp = await this.fetchImpl(url, {
        method,
        body,
        headers: body ? { "content-type": "application/json" } : undefined,
        signal: ctrl.signal,
      });
      const doc = await resp.json();
      if (ctrl.signal.aborted) return { ok: false, status: 0, superseded: true };
      if (resp.ok) return { ok: true, status: resp.status, data: doc as T };
      const error = (doc as Partial<ApiErrorDoc>).error ?? { code: "HttpError", message: `HTTP ${resp.status}` };
      return { ok: false, status: resp.status, error };
    } catch (e) {
      if (ctrl.signal.aborted) return { ok: false, status: 0, superseded: true };
      return { ok: false, status: 0, error: { code: "NetworkError", message: String(e) } };
    } finally {
      if (this.inflight.get(route) === ctrl) this.inflight.delete(route);
    }
  }
}
