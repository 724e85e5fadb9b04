/**
 * In-memory stand-in for the review API, speaking the same HTTP contract
 * through a FetchLike function: version-checked schema PUT, validated
 * annotation PUT, queued re-extraction that lands before the next poll
 * (mirroring the backend, whose replay-mode extraction completes with the
 * response's background task).
 */

import type { FetchLike } from "../src/api.js";
import type { DocDetailDto, SchemaDto, SpanDto } from "../src/types.js";

const SYMBOL_RE = /^[A-Z][A-Z0-9_]{0,15}$/;

interface FakeDoc {
  text: string;
  spans: SpanDto[];
  state: string;
  origin: string;
  extraction: { status: string; attempts: number; generation: number; warnings: string[] };
  history: { timestamp: string; actor: string; action: string; diff: Record<string, unknown> }[];
}

export class FakeReviewServer {
  schema: SchemaDto;
  docs = new Map<string, FakeDoc>();
  /** What re-extraction produces, keyed by doc; settable per test. */
  modelAnnotations = new Map<string, SpanDto[]>();

  constructor(schema: SchemaDto) {
    this.schema = JSON.parse(JSON.stringify(schema)) as SchemaDto;
  }

  addDoc(docId: string, text: string, spans: SpanDto[] = []): void {
    this.docs.set(docId, {
      text,
      spans,
      state: "pending",
      origin: "model",
      extraction: { status: "none", attempts: 0, generation: 0, warnings: [] },
      history: [],
    });
    this.modelAnnotations.set(docId, spans);
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : null;
    const headers = (init?.headers ?? {}) as Record<string, string>;
    try {
      return respond(this.route(method, path, body, headers));
    } catch (error) {
      if (error instanceof HttpError) {
        return respond({ detail: error.detail }, error.status);
      }
      throw error;
    }
  };

  private route(
    method: string,
    path: string,
    body: Record<string, unknown> | null,
    headers: Record<string, string>,
  ): unknown {
    if (method === "GET" && path === "/schema") return this.schema;
    if (method === "PUT" && path === "/schema") {
      const ifMatch = headers["If-Match"] ?? headers["if-match"];
      if (ifMatch !== undefined && String(this.schema.version) !== String(ifMatch)) {
        throw new HttpError(409, `schema version is ${this.schema.version}, not ${ifMatch}`);
      }
      const candidate = body as unknown as SchemaDto;
      const violations = validateSchema(candidate);
      if (violations.length) throw new HttpError(400, violations.join("; "));
      this.schema = { ...candidate, version: this.schema.version + 1 };
      return this.schema;
    }
    if (method === "GET" && path === "/docs") {
      return [...this.docs.entries()].map(([doc_id, d]) => ({
        doc_id,
        state: d.state,
        origin: d.origin,
        n_spans: d.spans.length,
        extraction: d.extraction,
      }));
    }
    const docMatch = path.match(/^\/docs\/([^/]+)(\/.*)?$/);
    if (docMatch) {
      const docId = decodeURIComponent(docMatch[1]);
      const rest = docMatch[2] ?? "";
      const doc = this.docs.get(docId);
      if (!doc) throw new HttpError(404, `unknown doc '${docId}'`);
      if (method === "GET" && rest === "") return this.detail(docId, doc);
      if (method === "PUT" && rest === "/annotation") {
        const spans = (body?.spans ?? null) as SpanDto[] | null;
        const state = body?.state as string | undefined;
        if (spans !== null) {
          const violations = validateSpans(doc.text, spans);
          if (violations.length) throw new HttpError(400, violations.join("; "));
          doc.spans = [...spans].sort((a, b) => a.start - b.start || a.end - b.end);
          doc.state = state ?? "edited";
          doc.origin = "human";
          doc.history.push({
            timestamp: new Date().toISOString(),
            actor: String(body?.actor ?? "researcher"),
            action: doc.state,
            diff: {},
          });
        } else if (state) {
          doc.state = state;
          doc.history.push({
            timestamp: new Date().toISOString(),
            actor: String(body?.actor ?? "researcher"),
            action: state,
            diff: {},
          });
        } else {
          throw new HttpError(400, "nothing to update");
        }
        return this.detail(docId, doc);
      }
      if (method === "POST" && rest === "/reextract") {
        doc.extraction = {
          status: "queued",
          attempts: 0,
          generation: doc.extraction.generation + 1,
          warnings: [],
        };
        doc.state = "pending";
        doc.history.push({
          timestamp: new Date().toISOString(),
          actor: "system",
          action: "reextract",
          diff: { schema_version: this.schema.version },
        });
        // like the real server under TestClient, extraction completes
        // before the caller's next request
        doc.spans = this.modelAnnotations.get(docId) ?? [];
        doc.origin = "model";
        doc.extraction = { ...doc.extraction, status: "ok", attempts: 1 };
        return { doc_id: docId, status: "queued", generation: doc.extraction.generation };
      }
    }
    throw new HttpError(404, `no route ${method} ${path}`);
  }

  private detail(docId: string, doc: FakeDoc): DocDetailDto {
    return {
      doc_id: docId,
      text: doc.text,
      spans: doc.spans,
      state: doc.state,
      origin: doc.origin,
      extraction: doc.extraction,
      history: doc.history,
    };
  }
}

class HttpError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
  }
}

function respond(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function validateSchema(schema: SchemaDto): string[] {
  const violations: string[] = [];
  const seen = new Set<string>();
  for (const t of schema.entity_types) {
    if (!SYMBOL_RE.test(t.symbol)) violations.push(`bad symbol '${t.symbol}'`);
    if (seen.has(t.symbol)) violations.push(`duplicate symbol '${t.symbol}'`);
    seen.add(t.symbol);
    if (!t.descriptions.length) violations.push(`'${t.symbol}' has no descriptions`);
  }
  for (const r of schema.relation_types) {
    if (!seen.has(r.source) || !seen.has(r.target)) {
      violations.push(`relation '${r.label}' references unknown symbol`);
    }
  }
  return violations;
}

function validateSpans(text: string, spans: SpanDto[]): string[] {
  const violations: string[] = [];
  const length = [...text].length;
  const sorted = [...spans].sort((a, b) => a.start - b.start || a.end - b.end);
  let prevEnd = -1;
  for (const span of sorted) {
    if (!(span.start >= 0 && span.start < span.end && span.end <= length)) {
      violations.push(`span [${span.start},${span.end}) out of bounds`);
      continue;
    }
    if (span.start < prevEnd) violations.push(`span [${span.start},${span.end}) overlaps`);
    prevEnd = Math.max(prevEnd, span.end);
  }
  return violations;
}
