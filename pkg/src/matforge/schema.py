"""Entity schemas and span-annotated documents.

The shared vocabulary of the toolkit: entity types (a short symbol, a
human-readable name, and one or more natural-language description
variants), relation types between symbols, and documents carrying typed,
non-overlapping character spans.

Offsets count Unicode scalar values (Python string indices), never bytes:
materials text is full of subscripts like ``Al₂O₃`` whose byte offsets
would differ across encodings.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

SYMBOL_RE = re.compile(r"[A-Z][A-Z0-9_]{0,15}\Z")


@dataclass(frozen=True)
class EntityType:
    """One extractable entity category, e.g. ``MAT`` / "material"."""

    symbol: str
    name: str
    descriptions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "descriptions", tuple(self.descriptions))


@dataclass(frozen=True)
class RelationType:
    """A directed relation between two entity symbols, e.g. SPL "is property of" MAT."""

    label: str
    source_symbol: str
    target_symbol: str


@dataclass(frozen=True)
class EntitySchema:
    """The full set of entity and relation definitions governing a corpus.

    ``version`` increases by one on every researcher edit, giving the
    review loop an audit trail.
    """

    schema_id: str
    entity_types: tuple[EntityType, ...] = ()
    relation_types: tuple[RelationType, ...] = ()
    version: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "entity_types", tuple(self.entity_types))
        object.__setattr__(self, "relation_types", tuple(self.relation_types))

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(t.symbol for t in self.entity_types)

    def entity_type(self, symbol: str) -> EntityType:
        for t in self.entity_types:
            if t.symbol == symbol:
                return t
        raise KeyError(symbol)

    def has_symbol(self, symbol: str) -> bool:
        return any(t.symbol == symbol for t in self.entity_types)


@dataclass(frozen=True, order=True)
class Span:
    """A half-open character range ``[start, end)`` labelled with an entity symbol."""

    start: int
    end: int
    symbol: str


@dataclass(frozen=True)
class AnnotatedDoc:
    """Source text plus its typed spans, sorted ascending by (start, end)."""

    doc_id: str
    text: str
    spans: tuple[Span, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "spans", tuple(sorted(self.spans)))


def validate_schema(schema: EntitySchema) -> list[str]:
    """Check all schema invariants; returns one message per violation.

    Pure: never raises, an empty list means the schema is valid.
    """
    violations: list[str] = []
    seen: set[str] = set()
    for t in schema.entity_types:
        if not SYMBOL_RE.match(t.symbol):
            violations.append(
                f"entity_types[{t.symbol!r}].symbol: must match {SYMBOL_RE.pattern}"
            )
        if t.symbol in seen:
            violations.append(f"entity_types[{t.symbol!r}].symbol: duplicate symbol")
        seen.add(t.symbol)
        if not t.descriptions:
            violations.append(f"entity_types[{t.symbol!r}].descriptions: must not be empty")
        for i, d in enumerate(t.descriptions):
            if not d.strip():
                violations.append(
                    f"entity_types[{t.symbol!r}].descriptions[{i}]: empty description"
                )
    seen_relations: set[tuple[str, str, str]] = set()
    for r in schema.relation_types:
        triple = (r.label, r.source_symbol, r.target_symbol)
        if triple in seen_relations:
            violations.append(f"relation_types[{r.label!r}]: duplicate relation {triple}")
        seen_relations.add(triple)
        for end, sym in (("source", r.source_symbol), ("target", r.target_symbol)):
            if not schema.has_symbol(sym):
                violations.append(
                    f"relation_types[{r.label!r}].{end}: unknown symbol {sym!r}"
                )
    if schema.version < 1:
        violations.append("version: must be >= 1")
    return violations


def validate_doc(doc: AnnotatedDoc, schema: EntitySchema) -> list[str]:
    """Check span ordering, bounds, non-overlap, and symbol membership."""
    violations: list[str] = []
    n = len(doc.text)
    prev_end = None
    for i, span in enumerate(doc.spans):
        where = f"spans[{i}]"
        if not (0 <= span.start < span.end <= n):
            violations.append(
                f"{where}: bounds [{span.start},{span.end}) outside text of length {n}"
            )
            continue
        if prev_end is not None and span.start < prev_end:
            violations.append(f"{where}: overlaps previous span (starts before {prev_end})")
        prev_end = max(prev_end, span.end) if prev_end is not None else span.end
        if not schema.has_symbol(span.symbol):
            violations.append(f"{where}.symbol: unknown symbol {span.symbol!r}")
    return violations


# -- JSON serialization ---------------------------------------------------
#
# schema.json layout:
#   {schema_id, version,
#    entity_types: [{symbol, name, descriptions: []}],
#    relation_types: [{label, source, target}]}


def schema_to_dict(schema: EntitySchema) -> dict[str, Any]:
    return {
        "schema_id": schema.schema_id,
        "version": schema.version,
        "entity_types": [
            {"symbol": t.symbol, "name": t.name, "descriptions": list(t.descriptions)}
            for t in schema.entity_types
        ],
        "relation_types": [
            {"label": r.label, "source": r.source_symbol, "target": r.target_symbol}
            for r in schema.relation_types
        ],
    }


def schema_from_dict(data: dict[str, Any]) -> EntitySchema:
    return EntitySchema(
        schema_id=data["schema_id"],
        version=int(data.get("version", 1)),
        entity_types=tuple(
            EntityType(
                symbol=t["symbol"],
                name=t.get("name", t["symbol"]),
                descriptions=tuple(t.get("descriptions", ())),
            )
            for t in data.get("entity_types", ())
        ),
        relation_types=tuple(
            RelationType(
                label=r["label"],
                source_symbol=r["source"],
                target_symbol=r["target"],
            )
            for r in data.get("relation_types", ())
        ),
    )


def dump_schema(schema: EntitySchema) -> str:
    return json.dumps(schema_to_dict(schema), indent=2, ensure_ascii=False) + "\n"


def load_schema(path: str | Path) -> EntitySchema:
    return schema_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def doc_to_dict(doc: AnnotatedDoc) -> dict[str, Any]:
    return {
        "doc_id": doc.doc_id,
        "text": doc.text,
        "spans": [{"start": s.start, "end": s.end, "symbol": s.symbol} for s in doc.spans],
    }


def doc_from_dict(data: dict[str, Any]) -> AnnotatedDoc:
    return AnnotatedDoc(
        doc_id=data["doc_id"],
        text=data["text"],
        spans=tuple(
            Span(int(s["start"]), int(s["end"]), s["symbol"])
            for s in data.get("spans", ())
        ),
    )


def dump_docs_jsonl(docs: Iterable[AnnotatedDoc]) -> str:
    """One ``{doc_id, text, spans}`` object per line."""
    return "".join(json.dumps(doc_to_dict(d), ensure_ascii=False) + "\n" for d in docs)


def load_docs_jsonl(data: str | bytes) -> list[AnnotatedDoc]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    docs = []
    for line in data.splitlines():
        if line.strip():
            docs.append(doc_from_dict(json.loads(line)))
    return docs


# -- bundled example schemas ----------------------------------------------


def bundled_schema_names() -> list[str]:
    pkg = resources.files("matforge") / "schemas"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def bundled_schema(name: str) -> EntitySchema:
    """Load one of the schemas shipped with the package (e.g. ``matkg``, ``sofc``)."""
    res = resources.files("matforge") / "schemas" / f"{name}.json"
    try:
        text = res.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(f"no bundled schema named {name!r}") from None
    return schema_from_dict(json.loads(text))
