"""Two-phase structuring workflow over a generative endpoint.

Hybrid mode first rewrites raw text into entity-recognized text (every
entity wrapped in its symbol marker), then converts that into a knowledge
graph with a one-shot worked example in the prompt. Direct mode skips the
recognition stage and structures raw text in a single call.

Both stages validate model output and, on malformation, re-prompt once per
remaining repair attempt with a machine-generated description of the defect
appended — deterministic, and replayable from cassettes. Every intermediate
artifact lands in the run directory so a reviewer can inspect or edit it:

    runs/<run_id>/
      manifest.json
      docs/<doc_id>/{raw.txt, marked.txt, annotated.json, kg.json,
                     attempts/<stage>-<n>.txt}
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import kg as kgmod
from .dataset import load_template, render_prompt
from .gateway import Gateway, GenerationParams, default_params
from .kg import KnowledgeGraph, dump_kg, score_kg
from .markers import (
    MarkerFormat,
    ParseOutcome,
    SourceDivergence,
    align_to_source,
    parse_marked,
    render_marked,
)
from .ner_eval import DocMismatch, MatchCounts, report_from_counts
from .schema import AnnotatedDoc, EntitySchema, doc_to_dict, schema_to_dict

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_REPAIRED = "repaired"
STATUS_FAILED = "failed"
STATUS_SKIPPED = "skipped"


class StoreError(OSError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str  # hybrid | direct
    schema: EntitySchema
    annotate_template: str = "ner_entity_marker"
    kg_template: str = "kg_construct"
    kg_example_template: str = "kg_one_shot_example"
    annotate_params: GenerationParams = field(default_factory=lambda: default_params("annotate"))
    kg_params: GenerationParams = field(default_factory=lambda: default_params("kg_construct"))
    max_repair_attempts: int = 2
    alignment: str = "strict"  # strict | lenient
    template_dir: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("hybrid", "direct"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_repair_attempts < 0:
            raise ValueError("max_repair_attempts must be >= 0")


@dataclass
class StageResult:
    status: str
    attempts: int = 0
    warnings: list[str] = field(default_factory=list)
    raw_completions: list[str] = field(default_factory=list)


@dataclass
class DocResult:
    doc_id: str
    status: str
    marked_text: str | None = None
    annotated_doc: AnnotatedDoc | None = None
    kg: KnowledgeGraph | None = None
    stages: dict[str, StageResult] = field(default_factory=dict)

    @property
    def prompt_count(self) -> int:
        return sum(s.attempts for s in self.stages.values())


# -- prompt assembly (public so fixtures can precompute the exact strings) ----


def build_annotate_prompt(text: str, config: RunConfig) -> str:
    choice = {t.symbol: 0 for t in config.schema.entity_types}
    return render_prompt(
        config.annotate_template,
        config.schema,
        list(config.schema.symbols),
        choice,
        text,
        template_dir=config.template_dir,
    )


def build_kg_prompt(input_text: str, config: RunConfig) -> str:
    choice = {t.symbol: 0 for t in config.schema.entity_types}
    example = load_template(config.kg_example_template, config.template_dir).strip()
    return render_prompt(
        config.kg_template,
        config.schema,
        list(config.schema.symbols),
        choice,
        input_text,
        extra={"EXAMPLE": example},
        template_dir=config.template_dir,
    )


def build_repair_prompt(base_prompt: str, defects: list[str]) -> str:
    """Append a corrective instruction quoting what was wrong last time."""
    listing = "\n".join(f"- {d}" for d in defects)
    return (
        base_prompt
        + "\n\nYour previous output was malformed:\n"
        + listing
        + "\nProduce the output again, corrected."
    )


# -- stage operations ----------------------------------------------------------


def annotate_doc(
    text: str, schema: EntitySchema, config: RunConfig, gateway: Gateway
) -> tuple[str | None, AnnotatedDoc | None, StageResult]:
    """Raw text -> (canonical marked text, aligned doc, stage result).

    The returned marked text is re-rendered from the aligned doc, so its
    stripped form always equals the source exactly even when the model
    reflowed whitespace.
    """
    base_prompt = build_annotate_prompt(text, config)
    fmt = MarkerFormat.entity()
    result = StageResult(status=STATUS_FAILED)
    prompt = base_prompt
    best: ParseOutcome | None = None
    for attempt in range(1, config.max_repair_attempts + 2):
        result.attempts = attempt
        completion = gateway.complete(prompt, config.annotate_params)
        result.raw_completions.append(completion.text)
        outcome = parse_marked(completion.text, schema, fmt, mode="lenient")
        defects = list(outcome.warnings)
        try:
            aligned = align_to_source(outcome, text, mode=config.alignment)
            defects.extend(w for w in aligned.warnings if w not in defects)
        except SourceDivergence as e:
            defects.append(str(e))
            aligned = None
        if aligned is not None:
            best = aligned
        if not defects:
            result.status = STATUS_OK if attempt == 1 else STATUS_REPAIRED
            result.warnings = []
            doc = aligned.doc
            return render_marked(doc, fmt, schema), doc, result
        result.warnings = defects
        if attempt <= config.max_repair_attempts:
            prompt = build_repair_prompt(base_prompt, defects)
    if best is not None:
        # lenient salvage: a valid doc exists even though defects remained
        result.status = STATUS_REPAIRED
        doc = best.doc
        return render_marked(doc, fmt, schema), doc, result
    return None, None, result


def construct_kg(
    input_text: str,
    schema: EntitySchema,
    config: RunConfig,
    gateway: Gateway,
    doc_id: str = "",
) -> tuple[KnowledgeGraph | None, StageResult]:
    """Entity-recognized text (hybrid) or raw text (direct) -> knowledge graph."""
    result = StageResult(status=STATUS_FAILED)
    if not input_text.strip():
        result.status = STATUS_OK
        return KnowledgeGraph(doc_id=doc_id), result
    base_prompt = build_kg_prompt(input_text, config)
    prompt = base_prompt
    best: KnowledgeGraph | None = None
    for attempt in range(1, config.max_repair_attempts + 2):
        result.attempts = attempt
        completion = gateway.complete(prompt, config.kg_params)
        result.raw_completions.append(completion.text)
        try:
            graph, warnings = kgmod.parse_kg(
                completion.text, schema, mode="lenient", doc_id=doc_id
            )
            best = graph
            defects = list(warnings)
        except kgmod.NotJson as e:
            defects = [str(e)]
        if not defects:
            result.status = STATUS_OK if attempt == 1 else STATUS_REPAIRED
            result.warnings = []
            return graph, result
        result.warnings = defects
        if attempt <= config.max_repair_attempts:
            prompt = build_repair_prompt(base_prompt, defects)
    if best is not None:
        result.status = STATUS_REPAIRED
        return best, result
    return None, result


# -- run store -------------------------------------------------------------------


class RunStore:
    """Filesystem layout of one run; tolerates concurrent per-doc writers."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def doc_dir(self, run_id: str, doc_id: str) -> Path:
        return self.run_dir(run_id) / "docs" / doc_id

    def write_doc_file(self, run_id: str, doc_id: str, name: str, content: str) -> None:
        try:
            path = self.doc_dir(run_id, doc_id) / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        except OSError as e:
            raise StoreError(f"cannot write {name} for doc {doc_id}: {e}") from e

    def write_manifest(self, run_id: str, manifest: dict[str, Any]) -> Path:
        try:
            path = self.run_dir(run_id) / "manifest.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(
                json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
            )
            return path
        except OSError as e:
            raise StoreError(f"cannot write manifest: {e}") from e

    def read_manifest(self, run_id: str) -> dict[str, Any]:
        path = self.run_dir(run_id) / "manifest.json"
        if not path.is_file():
            raise StoreError(f"no manifest at {path}")
        return json.loads(path.read_text(encoding="utf-8"))

    def read_kg(self, run_id: str, doc_id: str) -> KnowledgeGraph | None:
        path = self.doc_dir(run_id, doc_id) / "kg.json"
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return kgmod.kg_from_dict(data, doc_id=doc_id)


def input_fingerprint(corpus: list[AnnotatedDoc], config: RunConfig) -> str:
    """Hash of everything that determines a run's outputs in replay mode."""
    payload = {
        "mode": config.mode,
        "alignment": config.alignment,
        "max_repair_attempts": config.max_repair_attempts,
        "schema": schema_to_dict(config.schema),
        "templates": {
            "annotate": load_template(config.annotate_template, config.template_dir),
            "kg": load_template(config.kg_template, config.template_dir),
            "kg_example": load_template(config.kg_example_template, config.template_dir),
        },
        "params": {
            "annotate": [
                config.annotate_params.temperature,
                config.annotate_params.top_p,
                config.annotate_params.max_tokens,
            ],
            "kg": [
                config.kg_params.temperature,
                config.kg_params.top_p,
                config.kg_params.max_tokens,
            ],
        },
        "corpus": [[d.doc_id, d.text] for d in corpus],
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run(
    corpus: list[AnnotatedDoc],
    config: RunConfig,
    gateway: Gateway,
    store: RunStore,
    run_id: str | None = None,
) -> dict[str, Any]:
    """Process the corpus through the configured mode and persist everything.

    Returns the manifest (also written to ``manifest.json``). The default
    run_id is derived from the input fingerprint, so identical replayed runs
    land in the same directory with identical content.
    """
    fingerprint = input_fingerprint(corpus, config)
    run_id = run_id or f"{config.mode}-{fingerprint[:12]}"
    started = datetime.now(timezone.utc).isoformat()
    fmt = MarkerFormat.entity()
    results: list[DocResult] = []

    for doc in corpus:
        doc_result = DocResult(doc_id=doc.doc_id, status=STATUS_OK)
        store.write_doc_file(run_id, doc.doc_id, "raw.txt", doc.text)
        kg_input = doc.text
        if config.mode == "hybrid":
            marked, annotated, stage = annotate_doc(doc.text, config.schema, config, gateway)
            doc_result.stages["annotate"] = stage
            _write_attempts(store, run_id, doc.doc_id, "annotate", stage)
            if annotated is not None:
                doc_result.marked_text = marked
                doc_result.annotated_doc = replace(annotated, doc_id=doc.doc_id)
                store.write_doc_file(run_id, doc.doc_id, "marked.txt", marked)
                store.write_doc_file(
                    run_id,
                    doc.doc_id,
                    "annotated.json",
                    json.dumps(doc_to_dict(doc_result.annotated_doc), indent=2, ensure_ascii=False)
                    + "\n",
                )
                kg_input = marked
            else:
                doc_result.status = STATUS_FAILED

        if doc_result.status != STATUS_FAILED:
            graph, stage = construct_kg(
                kg_input, config.schema, config, gateway, doc_id=doc.doc_id
            )
            doc_result.stages["kg"] = stage
            _write_attempts(store, run_id, doc.doc_id, "kg", stage)
            if graph is not None:
                doc_result.kg = graph
                store.write_doc_file(run_id, doc.doc_id, "kg.json", dump_kg(graph))
            else:
                doc_result.status = STATUS_FAILED
        else:
            doc_result.stages["kg"] = StageResult(status=STATUS_SKIPPED)

        if doc_result.status != STATUS_FAILED:
            statuses = {s.status for s in doc_result.stages.values()}
            doc_result.status = STATUS_REPAIRED if STATUS_REPAIRED in statuses else STATUS_OK
        results.append(doc_result)

    manifest = {
        "run_id": run_id,
        "input_hash": fingerprint,
        "config": {
            "mode": config.mode,
            "schema_id": config.schema.schema_id,
            "schema_version": config.schema.version,
            "templates": {
                "annotate": config.annotate_template,
                "kg": config.kg_template,
                "kg_example": config.kg_example_template,
            },
            "params": {
                "annotate": {
                    "temperature": config.annotate_params.temperature,
                    "top_p": config.annotate_params.top_p,
                    "max_tokens": config.annotate_params.max_tokens,
                },
                "kg": {
                    "temperature": config.kg_params.temperature,
                    "top_p": config.kg_params.top_p,
                    "max_tokens": config.kg_params.max_tokens,
                },
            },
            "max_repair_attempts": config.max_repair_attempts,
            "alignment": config.alignment,
        },
        "docs": {
            r.doc_id: {
                "status": r.status,
                "prompt_count": r.prompt_count,
                "stages": {
                    name: {
                        "status": s.status,
                        "attempts": s.attempts,
                        "warnings": s.warnings,
                    }
                    for name, s in r.stages.items()
                },
            }
            for r in results
        },
        "totals": {
            "docs": len(results),
            "prompts": sum(r.prompt_count for r in results),
            "ok": sum(1 for r in results if r.status == STATUS_OK),
            "repaired": sum(1 for r in results if r.status == STATUS_REPAIRED),
            "failed": sum(1 for r in results if r.status == STATUS_FAILED),
        },
        "timestamps": {"started": started, "finished": datetime.now(timezone.utc).isoformat()},
    }
    store.write_manifest(run_id, manifest)
    return manifest


def _write_attempts(
    store: RunStore, run_id: str, doc_id: str, stage: str, result: StageResult
) -> None:
    for n, raw in enumerate(result.raw_completions, start=1):
        store.write_doc_file(run_id, doc_id, f"attempts/{stage}-{n}.txt", raw)


# -- run comparison -----------------------------------------------------------


def compare_runs(
    run_a: dict[str, Any],
    run_b: dict[str, Any],
    gold_kgs: dict[str, KnowledgeGraph],
    store: RunStore,
) -> dict[str, Any]:
    """Score both runs' graphs against gold and report deltas (a minus b)."""
    ids_a = set(run_a["docs"])
    ids_b = set(run_b["docs"])
    if ids_a != ids_b:
        raise DocMismatch(f"runs cover different docs: {sorted(ids_a ^ ids_b)}")
    missing_gold = sorted(ids_a - set(gold_kgs))
    if missing_gold:
        raise DocMismatch(f"no gold graphs for docs: {missing_gold}")

    def evaluate(manifest: dict[str, Any]) -> dict[str, Any]:
        node_counts: dict[str, MatchCounts] = {}
        relation_counts: dict[str, MatchCounts] = {}
        for doc_id in sorted(manifest["docs"]):
            pred = store.read_kg(manifest["run_id"], doc_id) or KnowledgeGraph(doc_id=doc_id)
            node_rep, rel_rep, _ = score_kg(pred, gold_kgs[doc_id])
            for sym, (c, _m) in node_rep.per_symbol.items():
                node_counts[sym] = node_counts.get(sym, MatchCounts()) + c
            for label, (c, _m) in rel_rep.per_symbol.items():
                relation_counts[label] = relation_counts.get(label, MatchCounts()) + c
        return {
            "nodes": report_from_counts(node_counts),
            "relations": report_from_counts(relation_counts),
        }

    eval_a = evaluate(run_a)
    eval_b = evaluate(run_b)
    return {
        "run_a": {
            "run_id": run_a["run_id"],
            "nodes": eval_a["nodes"].to_dict(),
            "relations": eval_a["relations"].to_dict(),
        },
        "run_b": {
            "run_id": run_b["run_id"],
            "nodes": eval_b["nodes"].to_dict(),
            "relations": eval_b["relations"].to_dict(),
        },
        "delta": {
            "node_f1": eval_a["nodes"].micro.f1 - eval_b["nodes"].micro.f1,
            "relation_f1": eval_a["relations"].micro.f1 - eval_b["relations"].micro.f1,
        },
    }
