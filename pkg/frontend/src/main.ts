/**
 * App shell: doc list sidebar plus hash-routed views
 * (#/schema, #/docs/<id>, #/docs/<id>/kg).
 */

import { ReviewApi } from "./api.js";
import { AnnotationView } from "./views/annotationView.js";
import { KgView } from "./views/kgView.js";
import { SchemaEditorView } from "./views/schemaEditor.js";

const API_BASE = (window as unknown as { MATFORGE_API?: string }).MATFORGE_API ?? "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function refreshDocList(api: ReviewApi, sidebar: HTMLElement): Promise<void> {
  const docs = await api.listDocs();
  sidebar.replaceChildren();
  const schemaLink = document.createElement("a");
  schemaLink.href = "#/schema";
  schemaLink.textContent = "Schema";
  sidebar.append(schemaLink);
  for (const doc of docs) {
    const link = document.createElement("a");
    link.href = `#/docs/${encodeURIComponent(doc.doc_id)}`;
    link.textContent = `${doc.doc_id} (${doc.n_spans} spans, ${doc.state})`;
    const kgLink = document.createElement("a");
    kgLink.href = `#/docs/${encodeURIComponent(doc.doc_id)}/kg`;
    kgLink.textContent = "graph";
    kgLink.className = "kg-link";
    const row = document.createElement("div");
    row.append(link, kgLink);
    sidebar.append(row);
  }
}

async function route(api: ReviewApi, content: HTMLElement): Promise<void> {
  const hash = window.location.hash || "#/schema";
  const kgMatch = hash.match(/^#\/docs\/([^/]+)\/kg$/);
  const docMatch = hash.match(/^#\/docs\/([^/]+)$/);
  if (kgMatch) {
    await new KgView(api, content).load(decodeURIComponent(kgMatch[1]));
  } else if (docMatch) {
    await new AnnotationView(api, content).load(decodeURIComponent(docMatch[1]));
  } else {
    await new SchemaEditorView(api, content, () => void refreshDocList(api, el("sidebar"))).load();
  }
}

export async function bootstrap(): Promise<void> {
  const api = new ReviewApi(API_BASE);
  const sidebar = el("sidebar");
  const content = el("content");
  await refreshDocList(api, sidebar);
  window.addEventListener("hashchange", () => void route(api, content));
  await route(api, content);
}

if (typeof document !== "undefined" && document.getElementById("content")) {
  void bootstrap();
}
