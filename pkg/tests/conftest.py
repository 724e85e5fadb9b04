from __future__ import annotations

import random

import pytest

from matforge.schema import (
    AnnotatedDoc,
    EntitySchema,
    EntityType,
    RelationType,
    Span,
    bundled_schema,
)

# Alphabet for randomized docs: marker delimiter characters are excluded
# because literal '<SYM>' / '@@' text is not representable by the codec.
TEXT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " .,;:()-+/%'\"=?!"
    "₀₁₂₃₄₅₆₇₈₉°µΩαβ–"
)


@pytest.fixture(scope="session")
def matkg_schema() -> EntitySchema:
    return bundled_schema("matkg")


@pytest.fixture(scope="session")
def kg_schema() -> EntitySchema:
    """Schema for graph tests: matkg types plus a synthesis-method type."""
    return EntitySchema(
        schema_id="kg-test",
        entity_types=(
            EntityType("MAT", "material", ("Names or formulas of materials.",)),
            EntityType("DSC", "material description", ("Descriptive modifiers of a material.",)),
            EntityType("APL", "application of material", ("Applications of a material.",)),
            EntityType("SYN", "synthesis method", ("Methods used to synthesize a material.",)),
        ),
        relation_types=(
            RelationType("description of", "DSC", "MAT"),
            RelationType("is application of", "APL", "MAT"),
            RelationType("synthesized by", "MAT", "SYN"),
        ),
    )


@pytest.fixture(scope="session")
def intro_doc() -> AnnotatedDoc:
    # offsets hand-counted: platinum [5,13), catalyst [27,35)
    return AnnotatedDoc(
        doc_id="intro",
        text="nano platinum is used as a catalyst",
        spans=(Span(5, 13, "MAT"), Span(27, 35, "APL")),
    )


@pytest.fixture(scope="session")
def methods_doc() -> AnnotatedDoc:
    # offsets hand-counted: Nanostructured [0,14), Al₂O₃ [15,20), solar cells [53,64)
    return AnnotatedDoc(
        doc_id="methods",
        text="Nanostructured Al₂O₃ improves the efficiency of such solar cells",
        spans=(Span(0, 14, "DSC"), Span(15, 20, "MAT"), Span(53, 64, "APL")),
    )


def make_random_doc(
    rng: random.Random,
    symbols: tuple[str, ...],
    doc_id: str = "",
    max_len: int = 60,
    max_spans: int = 6,
) -> AnnotatedDoc:
    """A valid doc with random text and random non-overlapping spans."""
    length = rng.randint(0, max_len)
    text = "".join(rng.choice(TEXT_ALPHABET) for _ in range(length))
    n_spans = rng.randint(0, max_spans)
    cuts = sorted(rng.sample(range(length + 1), min(2 * n_spans, length + 1)))
    spans = []
    for start, end in zip(cuts[::2], cuts[1::2]):
        if start < end:
            spans.append(Span(start, end, rng.choice(symbols)))
    return AnnotatedDoc(doc_id=doc_id, text=text, spans=tuple(spans))
