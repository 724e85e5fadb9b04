"""HTTP review API over one run directory.

Backs the researcher's review-refine loop: read and edit the schema with
optimistic version checks, inspect and correct per-document annotations,
trigger re-extraction with the current schema, and read the resulting
graphs. All state lives as JSON sidecars in the run directory; every
mutation is flushed to disk before its response returns.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import BackgroundTasks, FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from ..gateway import Gateway, GatewayError
from ..kg import dump_kg
from ..pipeline import RunConfig, annotate_doc, construct_kg
from ..schema import (
    AnnotatedDoc,
    EntitySchema,
    Span,
    dump_schema,
    load_schema,
    schema_to_dict,
    validate_doc,
    validate_schema,
)
from .models import (
    AnnotationPut,
    DocDetail,
    DocSummary,
    ExtractionStatus,
    HistoryEntry,
    SchemaModel,
    SpanModel,
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ReviewStore:
    """Run-directory state: schema.json at the root, sidecars per doc."""

    def __init__(self, run_dir: str | Path, schema: EntitySchema):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._schema_lock = threading.Lock()
        self._doc_locks: dict[str, threading.Lock] = {}
        self._doc_locks_guard = threading.Lock()
        if self.schema_path.is_file():
            self.schema = load_schema(self.schema_path)
        else:
            self.schema = schema
            self._write_schema(schema)

    @property
    def schema_path(self) -> Path:
        return self.run_dir / "schema.json"

    def doc_lock(self, doc_id: str) -> threading.Lock:
        with self._doc_locks_guard:
            return self._doc_locks.setdefault(doc_id, threading.Lock())

    def _write_schema(self, schema: EntitySchema) -> None:
        self.schema_path.write_text(dump_schema(schema), encoding="utf-8")

    def update_schema(self, schema: EntitySchema) -> EntitySchema:
        with self._schema_lock:
            bumped = EntitySchema(
                schema_id=schema.schema_id,
                entity_types=schema.entity_types,
                relation_types=schema.relation_types,
                version=self.schema.version + 1,
            )
            self._write_schema(bumped)
            history = self.run_dir / "schema_history.jsonl"
            with open(history, "a", encoding="utf-8") as fh:
                entry = {"timestamp": _now(), "schema": schema_to_dict(bumped)}
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            self.schema = bumped
            return bumped

    # -- documents -----------------------------------------------------

    def doc_ids(self) -> list[str]:
        docs = self.run_dir / "docs"
        if not docs.is_dir():
            return []
        return sorted(p.name for p in docs.iterdir() if (p / "raw.txt").is_file())

    def doc_dir(self, doc_id: str) -> Path:
        return self.run_dir / "docs" / doc_id

    def has_doc(self, doc_id: str) -> bool:
        return (self.doc_dir(doc_id) / "raw.txt").is_file()

    def raw_text(self, doc_id: str) -> str:
        return (self.doc_dir(doc_id) / "raw.txt").read_text(encoding="utf-8")

    def review(self, doc_id: str) -> dict:
        path = self.doc_dir(doc_id) / "review.json"
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))
        return {
            "state": "pending",
            "origin": "model",
            "history": [],
            "spans": None,
            "extraction": {"status": "none", "attempts": 0, "generation": 0, "warnings": []},
        }

    def write_review(self, doc_id: str, review: dict) -> None:
        path = self.doc_dir(doc_id) / "review.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(review, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    def model_spans(self, doc_id: str) -> list[Span]:
        path = self.doc_dir(doc_id) / "annotated.json"
        if not path.is_file():
            return []
        data = json.loads(path.read_text(encoding="utf-8"))
        return [Span(s["start"], s["end"], s["symbol"]) for s in data.get("spans", [])]

    def current_doc(self, doc_id: str) -> AnnotatedDoc:
        review = self.review(doc_id)
        if review.get("spans") is not None:
            spans = [Span(s["start"], s["end"], s["symbol"]) for s in review["spans"]]
        else:
            spans = self.model_spans(doc_id)
        return AnnotatedDoc(doc_id, self.raw_text(doc_id), tuple(spans))

    def kg_payload(self, doc_id: str) -> Optional[dict]:
        path = self.doc_dir(doc_id) / "kg.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


def _span_diff(old: list[Span], new: list[Span]) -> dict:
    old_set, new_set = set(old), set(new)
    as_dict = lambda s: {"start": s.start, "end": s.end, "symbol": s.symbol}
    return {
        "added": [as_dict(s) for s in sorted(new_set - old_set)],
        "removed": [as_dict(s) for s in sorted(old_set - new_set)],
    }


def create_app(
    run_dir: str | Path,
    schema: EntitySchema,
    gateway: Gateway | None = None,
    cors_origin: str = "*",
) -> FastAPI:
    store = ReviewStore(run_dir, schema)
    # the document listing owns /docs; the interactive API browser moves aside
    app = FastAPI(title="matforge review API", docs_url="/apidocs", redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.gateway = gateway

    def extraction_of(review: dict) -> ExtractionStatus:
        return ExtractionStatus(**review.get("extraction", {}))

    @app.get("/schema", response_model=SchemaModel)
    def get_schema():
        return SchemaModel.from_schema(store.schema)

    @app.put("/schema", response_model=SchemaModel)
    def put_schema(body: SchemaModel, if_match: Optional[str] = Header(default=None)):
        if if_match is not None and str(store.schema.version) != if_match:
            raise HTTPException(
                status_code=409,
                detail=f"schema version is {store.schema.version}, not {if_match}",
            )
        candidate = body.to_schema()
        violations = validate_schema(candidate)
        if violations:
            raise HTTPException(status_code=400, detail="; ".join(violations))
        return SchemaModel.from_schema(store.update_schema(candidate))

    @app.get("/docs", response_model=list[DocSummary])
    def list_docs():
        out = []
        for doc_id in store.doc_ids():
            review = store.review(doc_id)
            doc = store.current_doc(doc_id)
            out.append(
                DocSummary(
                    doc_id=doc_id,
                    state=review["state"],
                    origin=review["origin"],
                    n_spans=len(doc.spans),
                    extraction=extraction_of(review),
                )
            )
        return out

    def require_doc(doc_id: str) -> None:
        if not store.has_doc(doc_id):
            raise HTTPException(status_code=404, detail=f"unknown doc {doc_id!r}")

    @app.get("/docs/{doc_id}", response_model=DocDetail)
    def get_doc(doc_id: str):
        require_doc(doc_id)
        review = store.review(doc_id)
        doc = store.current_doc(doc_id)
        return DocDetail.from_doc(
            doc,
            state=review["state"],
            origin=review["origin"],
            extraction=extraction_of(review),
            history=[HistoryEntry(**h) for h in review["history"]],
        )

    @app.put("/docs/{doc_id}/annotation", response_model=DocDetail)
    def put_annotation(doc_id: str, body: AnnotationPut):
        require_doc(doc_id)
        with store.doc_lock(doc_id):
            review = store.review(doc_id)
            old_doc = store.current_doc(doc_id)
            if body.spans is not None:
                spans = [s.to_span() for s in body.spans]
                candidate = AnnotatedDoc(doc_id, old_doc.text, tuple(spans))
                violations = validate_doc(candidate, store.schema)
                if violations:
                    raise HTTPException(status_code=400, detail="; ".join(violations))
                review["spans"] = [
                    {"start": s.start, "end": s.end, "symbol": s.symbol}
                    for s in candidate.spans
                ]
                review["origin"] = "human"
                review["state"] = body.state or "edited"
                review["history"].append(
                    {
                        "timestamp": _now(),
                        "actor": body.actor,
                        "action": review["state"],
                        "diff": _span_diff(list(old_doc.spans), list(candidate.spans)),
                    }
                )
            elif body.state is not None:
                review["state"] = body.state
                review["history"].append(
                    {"timestamp": _now(), "actor": body.actor, "action": body.state, "diff": {}}
                )
            else:
                raise HTTPException(status_code=400, detail="nothing to update")
            store.write_review(doc_id, review)
        return get_doc(doc_id)

    def _reextract(doc_id: str, generation: int) -> None:
        config = RunConfig(mode="hybrid", schema=store.schema)
        text = store.raw_text(doc_id)
        doc_dir = store.doc_dir(doc_id)
        try:
            marked, doc, stage = annotate_doc(text, store.schema, config, app.state.gateway)
            for n, raw in enumerate(stage.raw_completions, start=1):
                path = doc_dir / "attempts" / f"reextract-{generation}-annotate-{n}.txt"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(raw, encoding="utf-8")
            status, attempts, warnings = stage.status, stage.attempts, list(stage.warnings)
            if doc is not None:
                (doc_dir / "marked.txt").write_text(marked, encoding="utf-8")
                (doc_dir / "annotated.json").write_text(
                    json.dumps(
                        {
                            "doc_id": doc_id,
                            "text": doc.text,
                            "spans": [
                                {"start": s.start, "end": s.end, "symbol": s.symbol}
                                for s in doc.spans
                            ],
                        },
                        indent=2,
                        ensure_ascii=False,
                    )
                    + "\n",
                    encoding="utf-8",
                )
                graph, kg_stage = construct_kg(
                    marked, store.schema, config, app.state.gateway, doc_id=doc_id
                )
                for n, raw in enumerate(kg_stage.raw_completions, start=1):
                    path = doc_dir / "attempts" / f"reextract-{generation}-kg-{n}.txt"
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(raw, encoding="utf-8")
                attempts += kg_stage.attempts
                warnings.extend(kg_stage.warnings)
                if graph is not None:
                    (doc_dir / "kg.json").write_text(dump_kg(graph), encoding="utf-8")
                    if kg_stage.status == "repaired" or status == "repaired":
                        status = "repaired"
                else:
                    status = "failed"
        except GatewayError as e:
            status, attempts, warnings = "failed", 0, [str(e)]
        with store.doc_lock(doc_id):
            review = store.review(doc_id)
            review["extraction"] = {
                "status": status,
                "attempts": attempts,
                "generation": generation,
                "warnings": warnings,
            }
            review["spans"] = None  # fresh model output supersedes edits
            review["origin"] = "model"
            review["state"] = "pending"
            store.write_review(doc_id, review)

    @app.post("/docs/{doc_id}/reextract", status_code=202)
    def post_reextract(doc_id: str, background: BackgroundTasks):
        require_doc(doc_id)
        if app.state.gateway is None:
            raise HTTPException(status_code=503, detail="no gateway configured")
        with store.doc_lock(doc_id):
            review = store.review(doc_id)
            generation = review.get("extraction", {}).get("generation", 0) + 1
            review["extraction"] = {
                "status": "queued",
                "attempts": 0,
                "generation": generation,
                "warnings": [],
            }
            review["state"] = "pending"
            review["history"].append(
                {
                    "timestamp": _now(),
                    "actor": "system",
                    "action": "reextract",
                    "diff": {"schema_version": store.schema.version},
                }
            )
            store.write_review(doc_id, review)
        background.add_task(_reextract, doc_id, generation)
        return {"doc_id": doc_id, "status": "queued", "generation": generation}

    @app.get("/docs/{doc_id}/kg")
    def get_kg(doc_id: str):
        require_doc(doc_id)
        payload = store.kg_payload(doc_id)
        if payload is None:
            review = store.review(doc_id)
            attempts = sorted((store.doc_dir(doc_id) / "attempts").glob("*kg*.txt"))
            raw = attempts[-1].read_text(encoding="utf-8") if attempts else None
            return {
                "doc_id": doc_id,
                "status": review.get("extraction", {}).get("status", "none"),
                "kg": None,
                "raw": raw,
            }
        return {"doc_id": doc_id, "status": "ok", "kg": payload}

    @app.get("/runs/{run_id}/report")
    def get_report(run_id: str):
        manifest_path = store.run_dir / "manifest.json"
        if not manifest_path.is_file():
            raise HTTPException(status_code=404, detail="no manifest in this run directory")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("run_id") != run_id:
            raise HTTPException(
                status_code=404, detail=f"this server hosts run {manifest.get('run_id')!r}"
            )
        return manifest

    return app
