// Typed client for the /v1 session API.

export interface SessionParams {
  b: number;
  c: number;
  T1: number;
  T2: number;
  M: number;
  T: number;
}

export interface SessionResource {
  id: string;
  dataset: string;
  mode: "replay" | "live";
  status: "awaiting_batch" | "awaiting_labels" | "finished";
  iteration: number;
  strategy: string;
  params: SessionParams;
  allocation: { n_repr: number; n_info: number } | null;
  pool: { labeled: number; unlabeled: number; test: number };
  metrics_available: boolean;
}

export interface BatchEntry {
  index: number;
  features: Record<string, number>;
  raw: Record<string, number>;
  probability_anomaly: number | null;
  provenance: string;
  score: number;
}

export interface MetricsRecord {
  iteration: number;
  labels_used: number;
  prauc: number | null;
  anomalies_discovered: number;
  wall_time_ms: number;
}

export interface MetricsResponse {
  history: MetricsRecord[];
  pool: { labeled: number; unlabeled: number };
  metrics_available: boolean;
  events: unknown[];
}

export interface DatasetInfo {
  name: string;
  n: number;
  d: number;
  anomalies: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = String(body.detail);
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  listDatasets(): Promise<{ datasets: DatasetInfo[] }> {
    return request(this.base, "/v1/datasets");
  }

  createSession(body: Record<string, unknown>): Promise<SessionResource> {
    return request(this.base, "/v1/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  getSession(id: string): Promise<SessionResource> {
    return request(this.base, `/v1/sessions/${id}`);
  }

  proposeBatch(id: string): Promise<{ session: SessionResource; batch: BatchEntry[] }> {
    return request(this.base, `/v1/sessions/${id}/batch`, { method: "POST" });
  }

  submitLabels(
    id: string,
    labels: Record<string, number>,
  ): Promise<{ session: SessionResource; record: MetricsRecord }> {
    return request(this.base, `/v1/sessions/${id}/labels`, {
      method: "POST",
      body: JSON.stringify({ labels }),
    });
  }

  patchParams(
    id: string,
    body: Partial<{ c: number; T1: number; T2: number }>,
  ): Promise<SessionResource> {
    return request(this.base, `/v1/sessions/${id}/params`, {
      method: "PATCH",
      body: JSON.stringify(body),
    });
  }

  getMetrics(id: string): Promise<MetricsResponse> {
    return request(this.base, `/v1/sessions/${id}/metrics`);
  }
}
