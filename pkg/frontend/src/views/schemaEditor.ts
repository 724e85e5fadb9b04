/**
 * Schema editor: one card per entity type, inline relation table,
 * conditional save via the version precondition. Stale-version conflicts
 * (another editor saved first) surface inline for a manual reload/merge.
 */

import { ApiError, ReviewApi } from "../api.js";
import { symbolColor } from "../highlight.js";
import { canSubmit, markDirty, newDraft, SchemaDraft, validateDraft } from "../schemaDraft.js";
import type { SchemaDto } from "../types.js";

export class SchemaEditorView {
  private draft: SchemaDraft | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
    private readonly onSaved: (schema: SchemaDto) => void = () => {},
  ) {}

  async load(): Promise<void> {
    this.draft = newDraft(await this.api.getSchema());
    this.render();
  }

  private render(): void {
    if (!this.draft) return;
    const { schema } = this.draft;
    this.root.replaceChildren();

    const header = el("div", "schema-header");
    header.append(
      el("h2", "", `${schema.schema_id}`),
      el("span", "version-badge", `v${schema.version}`),
    );
    this.root.append(header);

    const cards = el("div", "type-cards");
    schema.entity_types.forEach((type, ti) => {
      const card = el("div", "type-card");
      card.style.borderTop = `4px solid ${symbolColor(type.symbol)}`;

      const symbolInput = textInput(type.symbol, (value) => {
        type.symbol = value;
        this.touch(`entity_types.${ti}.symbol`);
      });
      symbolInput.classList.add("symbol-input");
      const nameInput = textInput(type.name, (value) => {
        type.name = value;
        this.touch(`entity_types.${ti}.name`);
      });
      card.append(labelled("symbol", symbolInput), labelled("name", nameInput));

      const descriptions = el("div", "descriptions");
      type.descriptions.forEach((description, di) => {
        const area = document.createElement("textarea");
        area.value = description;
        area.addEventListener("input", () => {
          type.descriptions[di] = area.value;
          this.touch(`entity_types.${ti}.descriptions.${di}`);
        });
        descriptions.append(area);
      });
      const addDescription = button("+ description", () => {
        type.descriptions.push("");
        this.touch(`entity_types.${ti}.descriptions`);
        this.render();
      });
      card.append(labelled("descriptions", descriptions), addDescription);
      cards.append(card);
    });
    const addType = button("+ entity type", () => {
      schema.entity_types.push({ symbol: "", name: "", descriptions: [""] });
      this.touch("entity_types");
      this.render();
    });
    this.root.append(cards, addType);

    const relations = el("table", "relations");
    relations.append(
      rowOf(["label", "source", "target", ""]).tr,
      ...schema.relation_types.map((relation, ri) => {
        const { tr, cells } = rowOf(["", "", "", ""]);
        cells[0].append(
          textInput(relation.label, (v) => {
            relation.label = v;
            this.touch(`relation_types.${ri}.label`);
          }),
        );
        cells[1].append(
          textInput(relation.source, (v) => {
            relation.source = v;
            this.touch(`relation_types.${ri}.source`);
          }),
        );
        cells[2].append(
          textInput(relation.target, (v) => {
            relation.target = v;
            this.touch(`relation_types.${ri}.target`);
          }),
        );
        cells[3].append(
          button("remove", () => {
            schema.relation_types.splice(ri, 1);
            this.touch("relation_types");
            this.render();
          }),
        );
        return tr;
      }),
    );
    const addRelation = button("+ relation", () => {
      schema.relation_types.push({ label: "", source: "", target: "" });
      this.touch("relation_types");
      this.render();
    });
    this.root.append(el("h3", "", "Relations"), relations, addRelation);

    const problems = validateDraft(schema);
    const problemsBox = el("ul", "violations");
    problems.forEach((p) => problemsBox.append(el("li", "", p)));
    const save = button("Save schema", () => void this.save());
    save.disabled = !canSubmit(this.draft);
    const status = el("div", "save-status");
    status.id = "schema-status";
    this.root.append(problemsBox, save, status);
  }

  private touch(path: string): void {
    if (!this.draft) return;
    markDirty(this.draft, path);
    this.refreshControls();
  }

  private refreshControls(): void {
    if (!this.draft) return;
    const save = this.root.querySelector<HTMLButtonElement>("button.primary-save");
    const problems = validateDraft(this.draft.schema);
    const box = this.root.querySelector("ul.violations");
    if (box) {
      box.replaceChildren(...problems.map((p) => el("li", "", p)));
    }
    if (save) save.disabled = !canSubmit(this.draft);
  }

  private async save(): Promise<void> {
    if (!this.draft || !canSubmit(this.draft)) return;
    const status = this.root.querySelector("#schema-status");
    try {
      const saved = await this.api.putSchema(this.draft.schema, this.draft.baseVersion);
      this.draft = newDraft(saved);
      this.onSaved(saved);
      this.render();
      this.root.querySelector("#schema-status")!.textContent = `saved as v${saved.version}`;
    } catch (error) {
      if (status && error instanceof ApiError) {
        status.textContent =
          error.status === 409
            ? `conflict: ${error.detail} — reload to merge your edits`
            : `rejected: ${error.detail}`;
      } else {
        throw error;
      }
    }
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function textInput(value: string, onInput: (value: string) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "text";
  input.value = value;
  input.addEventListener("input", () => onInput(input.value));
  return input;
}

function labelled(label: string, control: HTMLElement): HTMLElement {
  const wrap = el("label", "field");
  wrap.append(el("span", "field-name", label), control);
  return wrap;
}

function button(text: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = text;
  if (text === "Save schema") b.className = "primary-save";
  b.addEventListener("click", onClick);
  return b;
}

function rowOf(texts: string[]): { tr: HTMLTableRowElement; cells: HTMLTableCellElement[] } {
  const tr = document.createElement("tr");
  const cells = texts.map((t) => {
    const td = document.createElement("td");
    td.textContent = t;
    tr.append(td);
    return td;
  });
  return { tr, cells };
}
