"""Pydantic request/response models for the review API."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

from ..schema import AnnotatedDoc, EntitySchema, EntityType, RelationType, Span


class SpanModel(BaseModel):
    start: int
    end: int
    symbol: str

    @classmethod
    def from_span(cls, span: Span) -> "SpanModel":
        return cls(start=span.start, end=span.end, symbol=span.symbol)

    def to_span(self) -> Span:
        return Span(self.start, self.end, self.symbol)


class EntityTypeModel(BaseModel):
    symbol: str
    name: str
    descriptions: list[str] = Field(default_factory=list)


class RelationTypeModel(BaseModel):
    label: str
    source: str
    target: str


class SchemaModel(BaseModel):
    schema_id: str
    version: int = 1
    entity_types: list[EntityTypeModel] = Field(default_factory=list)
    relation_types: list[RelationTypeModel] = Field(default_factory=list)

    @classmethod
    def from_schema(cls, schema: EntitySchema) -> "SchemaModel":
        return cls(
            schema_id=schema.schema_id,
            version=schema.version,
            entity_types=[
                EntityTypeModel(
                    symbol=t.symbol, name=t.name, descriptions=list(t.descriptions)
                )
                for t in schema.entity_types
            ],
            relation_types=[
                RelationTypeModel(label=r.label, source=r.source_symbol, target=r.target_symbol)
                for r in schema.relation_types
            ],
        )

    def to_schema(self) -> EntitySchema:
        return EntitySchema(
            schema_id=self.schema_id,
            version=self.version,
            entity_types=tuple(
                EntityType(t.symbol, t.name, tuple(t.descriptions)) for t in self.entity_types
            ),
            relation_types=tuple(
                RelationType(r.label, r.source, r.target) for r in self.relation_types
            ),
        )


class AnnotationPut(BaseModel):
    spans: Optional[list[SpanModel]] = None
    state: Optional[Literal["accepted", "edited", "rejected"]] = None
    actor: str = "researcher"


class HistoryEntry(BaseModel):
    timestamp: str
    actor: str
    action: str
    diff: dict[str, Any] = Field(default_factory=dict)


class ExtractionStatus(BaseModel):
    status: str = "none"  # none | queued | ok | repaired | failed
    attempts: int = 0
    generation: int = 0
    warnings: list[str] = Field(default_factory=list)


class DocSummary(BaseModel):
    doc_id: str
    state: str
    origin: str
    n_spans: int
    extraction: ExtractionStatus


class DocDetail(BaseModel):
    doc_id: str
    text: str
    spans: list[SpanModel]
    state: str
    origin: str
    extraction: ExtractionStatus
    history: list[HistoryEntry] = Field(default_factory=list)

    @classmethod
    def from_doc(
        cls,
        doc: AnnotatedDoc,
        state: str,
        origin: str,
        extraction: ExtractionStatus,
        history: list[HistoryEntry],
    ) -> "DocDetail":
        return cls(
            doc_id=doc.doc_id,
            text=doc.text,
            spans=[SpanModel.from_span(s) for s in doc.spans],
            state=state,
            origin=origin,
            extraction=extraction,
            history=history,
        )


class ErrorBody(BaseModel):
    detail: str
    violations: list[str] = Field(default_factory=list)
