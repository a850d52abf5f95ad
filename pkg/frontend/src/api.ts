/** Typed client for the question answering service. Talks JSON to /api/ask and /api/health. */

export interface Reference {
  index: number;
  url: string;
}

export interface RetrievedHit {
  chunk_id: string;
  source_url: string;
  score: number;
  snippet: string;
}

export interface AnswerAudit {
  has_references: boolean;
  n_references: number;
  inline_resolved: boolean;
  grounded_fraction: number;
  urls_wellformed: boolean;
  urls_live: boolean | null;
}

export interface AskResponse {
  answer: string;
  references: Reference[];
  hits: RetrievedHit[];
  audit: AnswerAudit;
  latency_ms: number;
}

export interface HealthResponse {
  status: string;
  index_count: number;
  model: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly code: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async ask(question: string, k?: number): Promise<AskResponse> {
    const body: Record<string, unknown> = { question };
    if (k !== undefined) {
      body.k = k;
    }
    const data = await this.request("/api/ask", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return validateAskResponse(data);
  }

  async health(): Promise<HealthResponse> {
    const data = await this.request("/api/health", { method: "GET" });
    const record = asRecord(data, "health response");
    return {
      status: asString(record.status, "health.status"),
      index_count: asNumber(record.index_count, "health.index_count"),
      model: asString(record.model, "health.model"),
    };
  }

  private async request(path: string, init: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, 0, "network");
    }
    let data: unknown = null;
    try {
      data = await response.json();
    } catch {
      data = null;
    }
    if (!response.ok) {
      const detail = errorDetail(data, response.status);
      throw new ApiError(detail.message, response.status, detail.code);
    }
    if (data === null || typeof data !== "object") {
      throw new ApiError("response body is not a JSON object", response.status, "malformed_response");
    }
    return data;
  }
}

/** Error bodies look like {"error": {"code": ..., "message": ...}}; fall back to the status line. */
function errorDetail(data: unknown, status: number): { code: string; message: string } {
  if (data !== null && typeof data === "object" && "error" in data) {
    const inner = (data as { error: unknown }).error;
    if (inner !== null && typeof inner === "object") {
      const record = inner as Record<string, unknown>;
      return {
        code: typeof record.code === "string" ? record.code : `http_${status}`,
        message: typeof record.message === "string" ? record.message : `HTTP ${status}`,
      };
    }
  }
  return { code: `http_${status}`, message: `HTTP ${status}` };
}

function malformed(what: string): ApiError {
  return new ApiError(`malformed field in response: ${what}`, 200, "malformed_response");
}

function asRecord(value: unknown, what: string): Record<string, unknown> {
  if (value === null || typeof value !== "object" || Array.isArray(value)) {
    throw malformed(what);
  }
  return value as Record<string, unknown>;
}

function asString(value: unknown, what: string): string {
  if (typeof value !== "string") {
    throw malformed(what);
  }
  return value;
}

function asNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || Number.isNaN(value)) {
    throw malformed(what);
  }
  return value;
}

function asArray(value: unknown, what: string): unknown[] {
  if (!Array.isArray(value)) {
    throw malformed(what);
  }
  return value;
}

function validateAskResponse(data: unknown): AskResponse {
  const record = asRecord(data, "ask response");
  const references = asArray(record.references, "references").map((item, i) => {
    const ref = asRecord(item, `references[${i}]`);
    return {
      index: asNumber(ref.index, `references[${i}].index`),
      url: asString(ref.url, `references[${i}].url`),
    };
  });
  const hits = asArray(record.hits, "hits").map((item, i) => {
    const hit = asRecord(item, `hits[${i}]`);
    return {
      chunk_id: asString(hit.chunk_id, `hits[${i}].chunk_id`),
      source_url: asString(hit.source_url, `hits[${i}].source_url`),
      score: asNumber(hit.score, `hits[${i}].score`),
      snippet: asString(hit.snippet, `hits[${i}].snippet`),
    };
  });
  const auditRecord = asRecord(record.audit, "audit");
  const audit: AnswerAudit = {
    has_references: Boolean(auditRecord.has_references),
    n_references: asNumber(auditRecord.n_references, "audit.n_references"),
    inline_resolved: Boolean(auditRecord.inline_resolved),
    grounded_fraction: asNumber(auditRecord.grounded_fraction, "audit.grounded_fraction"),
    urls_wellformed: Boolean(auditRecord.urls_wellformed),
    urls_live: auditRecord.urls_live === null ? null : Boolean(auditRecord.urls_live),
  };
  return {
    answer: asString(record.answer, "answer"),
    references,
    hits,
    audit,
    latency_ms: asNumber(record.latency_ms, "latency_ms"),
  };
}
