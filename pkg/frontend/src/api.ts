/** Typed client for the review API; the UI's only channel to the backend. */

import type {
  DocDetailDto,
  DocSummaryDto,
  KgResponseDto,
  SchemaDto,
  SpanDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
      ...init,
    });
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = (JSON.parse(body) as { detail?: string }).detail ?? body;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (body ? JSON.parse(body) : null) as T;
  }

  getSchema(): Promise<SchemaDto> {
    return this.request("/schema");
  }

  /** Conditional update: the server rejects with 409 when the version moved. */
  putSchema(schema: SchemaDto, expectedVersion: number): Promise<SchemaDto> {
    return this.request("/schema", {
      method: "PUT",
      body: JSON.stringify(schema),
      headers: { "If-Match": String(expectedVersion) },
    });
  }

  listDocs(): Promise<DocSummaryDto[]> {
    return this.request("/docs");
  }

  getDoc(docId: string): Promise<DocDetailDto> {
    return this.request(`/docs/${encodeURIComponent(docId)}`);
  }

  putAnnotation(
    docId: string,
    spans: SpanDto[] | null,
    state?: "accepted" | "edited" | "rejected",
    actor = "researcher",
  ): Promise<DocDetailDto> {
    return this.request(`/docs/${encodeURIComponent(docId)}/annotation`, {
      method: "PUT",
      body: JSON.stringify({ spans, state, actor }),
    });
  }

  reextract(docId: string): Promise<{ doc_id: string; status: string; generation: number }> {
    return this.request(`/docs/${encodeURIComponent(docId)}/reextract`, { method: "POST" });
  }

  getKg(docId: string): Promise<KgResponseDto> {
    return this.request(`/docs/${encodeURIComponent(docId)}/kg`);
  }

  getRunReport(runId: string): Promise<Record<string, unknown>> {
    return this.request(`/runs/${encodeURIComponent(runId)}/report`);
  }
}
