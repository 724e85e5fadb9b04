/**
 * Annotation review: color-coded highlights over the document text,
 * click-drag selection to add a span, per-span delete/retype, and a
 * re-extract button with status polling.
 *
 * Selections arrive from the DOM in UTF-16 code units and are converted to
 * Unicode scalar offsets at this boundary, never deeper in the app.
 */

import { ApiError, ReviewApi } from "../api.js";
import { segmentText, symbolColor } from "../highlight.js";
import { utf16ToScalar } from "../offsets.js";
import { pollUntil } from "../polling.js";
import type { DocDetailDto, SchemaDto, SpanDto } from "../types.js";

export class AnnotationView {
  private doc: DocDetailDto | null = null;
  private schema: SchemaDto | null = null;
  private chosenSymbol = "";

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
  ) {}

  async load(docId: string): Promise<void> {
    [this.doc, this.schema] = await Promise.all([this.api.getDoc(docId), this.api.getSchema()]);
    if (!this.chosenSymbol && this.schema.entity_types.length) {
      this.chosenSymbol = this.schema.entity_types[0].symbol;
    }
    this.render();
  }

  private render(): void {
    if (!this.doc || !this.schema) return;
    this.root.replaceChildren();

    const header = document.createElement("div");
    header.className = "doc-header";
    header.append(
      text("h2", this.doc.doc_id),
      badge(`state: ${this.doc.state}`),
      badge(`origin: ${this.doc.origin}`),
      badge(`extraction: ${this.doc.extraction.status}`),
    );
    this.root.append(header);

    const picker = document.createElement("select");
    for (const t of this.schema.entity_types) {
      const option = document.createElement("option");
      option.value = t.symbol;
      option.textContent = `${t.symbol} — ${t.name}`;
      if (t.symbol === this.chosenSymbol) option.selected = true;
      picker.append(option);
    }
    picker.addEventListener("change", () => (this.chosenSymbol = picker.value));
    const pickerLabel = text("label", "new span type: ");
    pickerLabel.append(picker);
    this.root.append(pickerLabel);

    const textBox = document.createElement("div");
    textBox.className = "doc-text";
    textBox.id = "doc-text";
    for (const segment of segmentText(this.doc.text, this.doc.spans)) {
      if (segment.symbol === null) {
        textBox.append(document.createTextNode(segment.text));
        continue;
      }
      const mark = document.createElement("mark");
      mark.textContent = segment.text;
      mark.style.backgroundColor = symbolColor(segment.symbol);
      mark.title = `${segment.symbol} [${segment.start},${segment.end})`;
      const tag = document.createElement("sup");
      tag.className = "span-badge";
      tag.textContent = segment.symbol;
      mark.append(tag);
      const remove = document.createElement("button");
      remove.className = "span-delete";
      remove.textContent = "×";
      remove.addEventListener("click", () => void this.deleteSpan(segment.spanIndex!));
      mark.append(remove);
      mark.addEventListener("dblclick", () => void this.retypeSpan(segment.spanIndex!));
      textBox.append(mark);
    }
    textBox.addEventListener("mouseup", () => void this.captureSelection(textBox));
    this.root.append(textBox);

    const reextract = document.createElement("button");
    reextract.id = "reextract";
    reextract.textContent = "re-extract";
    reextract.addEventListener("click", () => void this.reextract());
    const accept = document.createElement("button");
    accept.textContent = "accept";
    accept.addEventListener("click", () => void this.setState("accepted"));
    const reject = document.createElement("button");
    reject.textContent = "reject";
    reject.addEventListener("click", () => void this.setState("rejected"));
    const status = document.createElement("span");
    status.id = "annotation-status";
    this.root.append(reextract, accept, reject, status);

    if (this.doc.extraction.warnings.length) {
      const warnings = document.createElement("ul");
      warnings.className = "warnings";
      for (const w of this.doc.extraction.warnings) warnings.append(text("li", w));
      this.root.append(warnings);
    }
  }

  /** Map the current DOM selection to scalar offsets and save the new span. */
  private async captureSelection(container: HTMLElement): Promise<void> {
    const selection = window.getSelection();
    if (!selection || selection.isCollapsed || !this.doc) return;
    const range = selection.getRangeAt(0);
    if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
      return;
    }
    const utf16Start = utf16OffsetWithin(container, range.startContainer, range.startOffset);
    const utf16End = utf16OffsetWithin(container, range.endContainer, range.endOffset);
    if (utf16Start === null || utf16End === null) return;
    const start = utf16ToScalar(this.doc.text, Math.min(utf16Start, utf16End));
    const end = utf16ToScalar(this.doc.text, Math.max(utf16Start, utf16End));
    selection.removeAllRanges();
    // whitespace-only selections carry no annotation
    if (start >= end || this.doc.text.slice(utf16Start, utf16End).trim() === "") return;
    const spans: SpanDto[] = [...this.doc.spans, { start, end, symbol: this.chosenSymbol }];
    await this.save(spans);
  }

  private async deleteSpan(index: number): Promise<void> {
    if (!this.doc) return;
    const spans = this.doc.spans.filter((_, i) => i !== index);
    await this.save(spans);
  }

  private async retypeSpan(index: number): Promise<void> {
    if (!this.doc) return;
    const spans = this.doc.spans.map((s, i) =>
      i === index ? { ...s, symbol: this.chosenSymbol } : s,
    );
    await this.save(spans);
  }

  private async setState(state: "accepted" | "rejected"): Promise<void> {
    if (!this.doc) return;
    this.doc = await this.api.putAnnotation(this.doc.doc_id, null, state);
    this.render();
  }

  private async save(spans: SpanDto[]): Promise<void> {
    if (!this.doc) return;
    try {
      this.doc = await this.api.putAnnotation(this.doc.doc_id, spans);
      this.render();
    } catch (error) {
      const status = this.root.querySelector("#annotation-status");
      if (status && error instanceof ApiError) {
        status.textContent = `rejected: ${error.detail}`;
      } else {
        throw error;
      }
    }
  }

  private async reextract(): Promise<void> {
    if (!this.doc) return;
    const docId = this.doc.doc_id;
    const status = this.root.querySelector("#annotation-status");
    if (status) status.textContent = "re-extracting…";
    await this.api.reextract(docId);
    const refreshed = await pollUntil(
      () => this.api.getDoc(docId),
      (doc) => doc.extraction.status !== "queued",
    );
    this.doc = refreshed;
    this.render();
    const after = this.root.querySelector("#annotation-status");
    if (after) after.textContent = `extraction ${refreshed.extraction.status}`;
  }
}

/** UTF-16 offset of (node, offset) within container's concatenated text. */
function utf16OffsetWithin(container: HTMLElement, node: Node, offset: number): number | null {
  // Span badges and delete buttons are excluded from the offset space: only
  // text nodes that belong to the document text itself are counted.
  let total = 0;
  const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT, {
    acceptNode: (candidate) => {
      const parent = candidate.parentElement;
      if (parent && (parent.classList.contains("span-badge") || parent.classList.contains("span-delete"))) {
        return NodeFilter.FILTER_REJECT;
      }
      return NodeFilter.FILTER_ACCEPT;
    },
  });
  let current = walker.nextNode();
  while (current) {
    if (current === node) return total + offset;
    total += (current.textContent ?? "").length;
    current = walker.nextNode();
  }
  // selection endpoints can land on element nodes (e.g. the container)
  if (node === container) return offset === 0 ? 0 : total;
  return null;
}

function text(tag: string, content: string): HTMLElement {
  const node = document.createElement(tag);
  node.textContent = content;
  return node;
}

function badge(content: string): HTMLElement {
  const node = document.createElement("span");
  node.className = "badge";
  node.textContent = content;
  return node;
}
