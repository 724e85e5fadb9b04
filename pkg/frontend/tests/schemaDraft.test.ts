import { describe, expect, it } from "vitest";

import { canSubmit, markDirty, newDraft, validateDraft } from "../src/schemaDraft.js";
import type { SchemaDto } from "../src/types.js";

const SCHEMA: SchemaDto = {
  schema_id: "matkg",
  version: 3,
  entity_types: [
    { symbol: "MAT", name: "material", descriptions: ["Names of materials."] },
    { symbol: "DSC", name: "description", descriptions: ["Modifiers."] },
  ],
  relation_types: [{ label: "description of", source: "DSC", target: "MAT" }],
};

describe("schema draft", () => {
  it("starts clean and remembers the base version", () => {
    const draft = newDraft(SCHEMA);
    expect(draft.baseVersion).toBe(3);
    expect(canSubmit(draft)).toBe(false); // nothing edited yet
    expect(draft.schema).not.toBe(SCHEMA); // deep copy, source untouched
  });

  it("submits only when dirty and valid", () => {
    const draft = newDraft(SCHEMA);
    draft.schema.entity_types[0].descriptions[0] = "Edited.";
    markDirty(draft, "entity_types.0.descriptions.0");
    expect(canSubmit(draft)).toBe(true);
  });

  it("blocks duplicate symbols client-side", () => {
    const draft = newDraft(SCHEMA);
    draft.schema.entity_types.push({ symbol: "MAT", name: "again", descriptions: ["x"] });
    markDirty(draft, "entity_types");
    expect(validateDraft(draft.schema)).toContainEqual(expect.stringContaining("duplicate"));
    expect(canSubmit(draft)).toBe(false);
  });

  it("mirrors the server's symbol grammar and description rules", () => {
    const draft = newDraft(SCHEMA);
    draft.schema.entity_types[0].symbol = "bad-symbol";
    draft.schema.entity_types[1].descriptions = [];
    const violations = validateDraft(draft.schema);
    expect(violations.some((v) => v.includes("must match"))).toBe(true);
    expect(violations.some((v) => v.includes("at least one description"))).toBe(true);
  });

  it("flags relations referencing unknown symbols", () => {
    const draft = newDraft(SCHEMA);
    draft.schema.relation_types.push({ label: "made of", source: "MAT", target: "GONE" });
    expect(validateDraft(draft.schema).some((v) => v.includes("unknown symbol"))).toBe(true);
  });
});
