import type { DecisionForm, DecisionRecord, TrajectoryDetail, TrajectoryList } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ListQuery {
  offset?: number;
  limit?: number;
  verdict?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

/** Thin typed client for the review wire API. */
export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  async listTrajectories(query: ListQuery = {}): Promise<TrajectoryList> {
    const params = new URLSearchParams();
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    if (query.verdict) params.set("verdict", query.verdict);
    const qs = params.toString();
    return this.getJson(`${this.base}/api/trajectories${qs ? `?${qs}` : ""}`);
  }

  async getTrajectory(id: string): Promise<TrajectoryDetail> {
    return this.getJson(`${this.base}/api/trajectory/${encodeURIComponent(id)}`);
  }

  async postDecision(form: DecisionForm): Promise<DecisionRecord> {
    const resp = await this.fetchFn(`${this.base}/api/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(form),
    });
    if (resp.status !== 201) {
      throw new ApiError(await safeDetail(resp), resp.status);
    }
    return (await resp.json()) as DecisionRecord;
  }

  async getStats(): Promise<Record<string, unknown>> {
    return this.getJson(`${this.base}/api/stats`);
  }

  private async getJson<T>(url: string): Promise<T> {
    const resp = await this.fetchFn(url);
    if (!resp.ok) {
      throw new ApiError(await safeDetail(resp), resp.status);
    }
    return (await resp.json()) as T;
  }
}

async function safeDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}
