/**
 * Knowledge-graph preview: nodes grouped by symbol with co-references and
 * related-entity context on each card, edges listed source —relation→ target.
 * Failed constructions show the raw model output behind a failure badge.
 */

import { ReviewApi } from "../api.js";
import { symbolColor } from "../highlight.js";
import type { KgDto } from "../types.js";

export class KgView {
  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
  ) {}

  async load(docId: string): Promise<void> {
    const response = await this.api.getKg(docId);
    this.root.replaceChildren();
    const title = document.createElement("h2");
    title.textContent = `Knowledge graph — ${docId}`;
    this.root.append(title);

    if (!response.kg) {
      const empty = document.createElement("div");
      empty.className = "empty-state";
      const badge = document.createElement("span");
      badge.className = "badge badge-failure";
      badge.textContent = response.status === "failed" ? "construction failed" : "no graph yet";
      empty.append(badge);
      if (response.raw) {
        const raw = document.createElement("pre");
        raw.className = "raw-completion";
        raw.textContent = response.raw;
        empty.append(raw);
      }
      this.root.append(empty);
      return;
    }
    this.renderGraph(response.kg);
  }

  private renderGraph(kg: KgDto): void {
    const groups = new Map<string, number[]>();
    kg.nodes.forEach((node, index) => {
      const bucket = groups.get(node.symbol) ?? [];
      bucket.push(index);
      groups.set(node.symbol, bucket);
    });

    const nodesBox = document.createElement("div");
    nodesBox.className = "kg-groups";
    for (const [symbol, indices] of [...groups.entries()].sort()) {
      const group = document.createElement("section");
      group.className = "kg-group";
      const heading = document.createElement("h3");
      heading.textContent = symbol;
      heading.style.backgroundColor = symbolColor(symbol);
      group.append(heading);
      for (const index of indices) {
        const node = kg.nodes[index];
        const card = document.createElement("div");
        card.className = "node-card";
        const name = document.createElement("strong");
        name.textContent = node.node_name;
        card.append(name);
        if (node.co_references.length) {
          const co = document.createElement("div");
          co.className = "co-references";
          co.textContent = `also: ${node.co_references.join(", ")}`;
          card.append(co);
        }
        for (const related of node.related_entities) {
          for (const [key, value] of Object.entries(related)) {
            const detail = document.createElement("div");
            detail.className = "related-entity";
            detail.textContent = `${key}: ${value}`;
            card.append(detail);
          }
        }
        group.append(card);
      }
      nodesBox.append(group);
    }
    this.root.append(nodesBox);

    const edgesBox = document.createElement("ul");
    edgesBox.className = "kg-edges";
    for (const edge of kg.edges) {
      const item = document.createElement("li");
      const source = kg.nodes[edge.source]?.node_name ?? `#${edge.source}`;
      const target = kg.nodes[edge.target]?.node_name ?? `#${edge.target}`;
      item.textContent = `${source} —${edge.relation}→ ${target}`;
      edgesBox.append(item);
    }
    const heading = document.createElement("h3");
    heading.textContent = `Edges (${kg.edges.length})`;
    this.root.append(heading, edgesBox);
  }
}
