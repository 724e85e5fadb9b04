/**
 * Client-side editable mirror of the entity schema.
 *
 * Tracks which fields the researcher touched and re-runs the same
 * validation rules the server enforces, so the save button can stay
 * disabled (and no request is sent) while the draft is invalid.
 */

import type { SchemaDto } from "./types.js";

const SYMBOL_RE = /^[A-Z][A-Z0-9_]{0,15}$/;

export interface SchemaDraft {
  schema: SchemaDto;
  /** Dot-paths of fields edited since the draft was loaded. */
  dirty: Set<string>;
  /** The server version this draft was loaded from (for If-Match). */
  baseVersion: number;
}

export function newDraft(schema: SchemaDto): SchemaDraft {
  return {
    schema: JSON.parse(JSON.stringify(schema)) as SchemaDto,
    dirty: new Set(),
    baseVersion: schema.version,
  };
}

export function markDirty(draft: SchemaDraft, path: string): void {
  draft.dirty.add(path);
}

export function isDirty(draft: SchemaDraft): boolean {
  return draft.dirty.size > 0;
}

/** Mirror of the server's schema validation; empty list means submittable. */
export function validateDraft(schema: SchemaDto): string[] {
  const violations: string[] = [];
  const seen = new Set<string>();
  for (const t of schema.entity_types) {
    if (!SYMBOL_RE.test(t.symbol)) {
      violations.push(`symbol '${t.symbol}' must match ${SYMBOL_RE.source}`);
    }
    if (seen.has(t.symbol)) {
      violations.push(`duplicate symbol '${t.symbol}'`);
    }
    seen.add(t.symbol);
    if (t.descriptions.length === 0) {
      violations.push(`'${t.symbol}' needs at least one description`);
    }
    t.descriptions.forEach((d, i) => {
      if (d.trim() === "") violations.push(`'${t.symbol}' description ${i + 1} is empty`);
    });
  }
  const relations = new Set<string>();
  for (const r of schema.relation_types) {
    const key = `${r.label}|${r.source}|${r.target}`;
    if (relations.has(key)) violations.push(`duplicate relation '${r.label}'`);
    relations.add(key);
    for (const end of [r.source, r.target]) {
      if (!seen.has(end)) violations.push(`relation '${r.label}' references unknown symbol '${end}'`);
    }
  }
  return violations;
}

export function canSubmit(draft: SchemaDraft): boolean {
  return isDirty(draft) && validateDraft(draft.schema).length === 0;
}
