import type {
  FeatureMap,
  FieldErrorPayload,
  ImportanceResponse,
  ModelsResponse,
  PredictResponse,
  RecommendResponse,
  TermResponse,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Server-side rejection carrying field-level details when the body has them. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly fieldErrors: FieldErrorPayload[],
    detail: string,
  ) {
    super(detail);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail: unknown = null;
  try {
    detail = (await response.json()).detail;
  } catch {
    // non-JSON error body; fall through with the status line only
  }
  if (Array.isArray(detail)) {
    return new ApiError(response.status, detail as FieldErrorPayload[],
      `request rejected (${response.status})`);
  }
  return new ApiError(response.status, [], String(detail ?? response.statusText));
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  models(): Promise<ModelsResponse> {
    return this.get("/models");
  }

  importance(modelId: string): Promise<ImportanceResponse> {
    return this.get(`/models/${encodeURIComponent(modelId)}/importance`);
  }

  term(modelId: string, feature: string): Promise<TermResponse> {
    return this.get(
      `/models/${encodeURIComponent(modelId)}/term/${encodeURIComponent(feature)}`,
    );
  }

  predict(modelId: string, features: FeatureMap): Promise<PredictResponse> {
    return this.post(`/models/${encodeURIComponent(modelId)}/predict`, { features });
  }

  recommend(modelId: string, features: FeatureMap): Promise<RecommendResponse> {
    return this.post(`/models/${encodeURIComponent(modelId)}/recommend`, { features });
  }
}

/**
 * Latest-response-wins sequencing for the what-if loop: concurrent submits
 * each take a ticket, and only the newest ticket's response may render.
 */
export class RequestSequencer {
  private latest = 0;

  next(): number {
    this.latest += 1;
    return this.latest;
  }

  isCurrent(ticket: number): boolean {
    return ticket === this.latest;
  }
}
