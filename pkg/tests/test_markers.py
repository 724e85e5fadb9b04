from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TEXT_ALPHABET, make_random_doc
from matforge.markers import (
    InvalidDoc,
    MarkerFormat,
    MismatchedClose,
    NestedMarker,
    SourceDivergence,
    UnclosedMarker,
    UnknownSymbol,
    align_to_source,
    parse_marked,
    render_marked,
    strip_markers,
)
from matforge.schema import AnnotatedDoc, Span


def test_render_entity_markers(matkg_schema):
    doc = AnnotatedDoc(
        "d",
        "Nanostructured Al2O3 thin films",
        (Span(0, 14, "DSC"), Span(15, 20, "MAT")),
    )
    out = render_marked(doc, MarkerFormat.entity(), matkg_schema)
    assert out == "<DSC>Nanostructured</DSC> <MAT>Al2O3</MAT> thin films"


def test_render_methods_sentence(matkg_schema, methods_doc):
    out = render_marked(methods_doc, MarkerFormat.entity(), matkg_schema)
    assert out == (
        "<DSC>Nanostructured</DSC> <MAT>Al₂O₃</MAT> improves the efficiency "
        "of such <APL>solar cells</APL>"
    )


def test_render_special_marker(matkg_schema, intro_doc):
    out = render_marked(intro_doc, MarkerFormat.special("MAT"), matkg_schema)
    assert out == "nano @@platinum## is used as a catalyst"


def test_render_special_omits_other_symbols(matkg_schema, intro_doc):
    out = render_marked(intro_doc, MarkerFormat.special("APL"), matkg_schema)
    assert out == "nano platinum is used as a @@catalyst##"


def test_render_without_spans_is_identity(matkg_schema):
    doc = AnnotatedDoc("d", "no entities here at all")
    for fmt in (MarkerFormat.entity(), MarkerFormat.special("MAT")):
        assert render_marked(doc, fmt, matkg_schema) == doc.text


def test_render_rejects_invalid_doc(matkg_schema):
    doc = AnnotatedDoc("d", "short", (Span(0, 99, "MAT"),))
    with pytest.raises(InvalidDoc):
        render_marked(doc, MarkerFormat.entity(), matkg_schema)


def test_marker_format_invariants():
    with pytest.raises(ValueError):
        MarkerFormat("special_marker")
    with pytest.raises(ValueError):
        MarkerFormat("entity_marker", "MAT")


def test_parse_entity_markers(matkg_schema):
    outcome = parse_marked(
        "<DSC>Nanostructured</DSC> <MAT>Al2O3</MAT> thin films",
        matkg_schema,
        MarkerFormat.entity(),
    )
    assert outcome.warnings == ()
    assert outcome.doc.text == "Nanostructured Al2O3 thin films"
    assert outcome.doc.spans == (Span(0, 14, "DSC"), Span(15, 20, "MAT"))


def test_parse_without_markers(matkg_schema):
    outcome = parse_marked("no markers here", matkg_schema, MarkerFormat.entity())
    assert outcome.doc.spans == ()
    assert outcome.warnings == ()
    assert outcome.doc.text == "no markers here"


def test_unclosed_marker_strict_raises_lenient_drops(matkg_schema):
    text = "<MAT>Al2O3 thin films"
    with pytest.raises(UnclosedMarker):
        parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="strict")
    outcome = parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="lenient")
    assert outcome.doc.spans == ()
    assert outcome.doc.text == "Al2O3 thin films"
    assert any("unclosed" in w for w in outcome.warnings)


def test_unknown_symbol_tag(matkg_schema):
    text = "<XYZ>stuff</XYZ> and <MAT>Al2O3</MAT>"
    with pytest.raises(UnknownSymbol):
        parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="strict")
    outcome = parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="lenient")
    assert outcome.doc.text == "<XYZ>stuff</XYZ> and Al2O3"
    assert outcome.doc.spans == (Span(21, 26, "MAT"),)
    assert len(outcome.warnings) == 2


def test_lookalike_tags_are_plain_text(matkg_schema):
    # lowercase html and crystal directions never match the symbol grammar
    text = "<b>bold</b> and <100> directions"
    outcome = parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="strict")
    assert outcome.doc.text == text
    assert outcome.doc.spans == ()


def test_mismatched_close(matkg_schema):
    text = "<MAT>Al2O3</DSC> films"
    with pytest.raises(MismatchedClose):
        parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="strict")
    outcome = parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="lenient")
    # close-at-open-symbol: the open MAT span is closed at the stray </DSC>
    assert outcome.doc.spans == (Span(0, 5, "MAT"),)
    assert any("mismatched" in w for w in outcome.warnings)


def test_nested_markers(matkg_schema):
    text = "<MAT>Al<DSC>2</DSC>O3</MAT>"
    with pytest.raises(NestedMarker):
        parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="strict")
    outcome = parse_marked(text, matkg_schema, MarkerFormat.entity(), mode="lenient")
    assert outcome.doc.text == "Al2O3"
    assert outcome.warnings  # outer open dropped, stray close dropped


def test_stray_close_lenient(matkg_schema):
    outcome = parse_marked("plain ## text", matkg_schema, MarkerFormat.special("MAT"), "lenient")
    assert outcome.doc.text == "plain  text"
    assert any("stray close" in w for w in outcome.warnings)


def test_parse_special_markers(matkg_schema):
    outcome = parse_marked(
        "nano @@platinum## is used as a catalyst",
        matkg_schema,
        MarkerFormat.special("MAT"),
    )
    assert outcome.doc.spans == (Span(5, 13, "MAT"),)
    assert outcome.doc.text == "nano platinum is used as a catalyst"


def test_lenient_parse_never_errors_on_garbage(matkg_schema):
    rng = random.Random(7)
    tokens = ["<MAT>", "</MAT>", "<DSC>", "</DSC>", "@@", "##", "<XY>", "x", " ", "Al2O3"]
    for _ in range(500):
        text = "".join(rng.choice(tokens) for _ in range(rng.randint(0, 12)))
        for fmt in (MarkerFormat.entity(), MarkerFormat.special("MAT")):
            outcome = parse_marked(text, matkg_schema, fmt, mode="lenient")
            spans = outcome.doc.spans
            for a, b in zip(spans, spans[1:]):
                assert a.end <= b.start  # never overlapping
            assert all(0 <= s.start < s.end <= len(outcome.doc.text) for s in spans)


def test_strip_markers(matkg_schema):
    assert strip_markers("nano @@platinum## is…", matkg_schema, MarkerFormat.special("MAT")) == (
        "nano platinum is…"
    )
    assert strip_markers("<MAT>Al2O3</MAT>", matkg_schema, MarkerFormat.entity()) == "Al2O3"
    assert strip_markers("untouched", matkg_schema, MarkerFormat.entity()) == "untouched"


def test_round_trip_random_docs(matkg_schema):
    rng = random.Random(42)
    entity = MarkerFormat.entity()
    for i in range(300):
        doc = make_random_doc(rng, matkg_schema.symbols, doc_id=f"d{i}")
        rendered = render_marked(doc, entity, matkg_schema)
        outcome = parse_marked(rendered, matkg_schema, entity, "strict", doc_id=doc.doc_id)
        assert outcome.warnings == ()
        assert outcome.doc == doc
        assert strip_markers(rendered, matkg_schema, entity) == doc.text


def test_round_trip_special_random_docs(matkg_schema):
    rng = random.Random(43)
    fmt = MarkerFormat.special("MAT")
    for i in range(300):
        doc = make_random_doc(rng, ("MAT",), doc_id=f"d{i}")
        rendered = render_marked(doc, fmt, matkg_schema)
        outcome = parse_marked(rendered, matkg_schema, fmt, "strict", doc_id=doc.doc_id)
        assert outcome.warnings == ()
        assert outcome.doc == doc


@settings(max_examples=200)
@given(st.data())
def test_round_trip_property(matkg_schema, data):
    text = data.draw(st.text(alphabet=TEXT_ALPHABET, max_size=50))
    cuts = sorted(
        data.draw(
            st.lists(st.integers(0, len(text)), max_size=8),
        )
    )
    spans = []
    symbols = matkg_schema.symbols
    for start, end in zip(cuts[::2], cuts[1::2]):
        if start < end:
            spans.append(Span(start, end, symbols[(start + end) % len(symbols)]))
    doc = AnnotatedDoc("prop", text, tuple(spans))
    rendered = render_marked(doc, MarkerFormat.entity(), matkg_schema)
    outcome = parse_marked(rendered, matkg_schema, MarkerFormat.entity(), "strict", doc_id="prop")
    assert outcome.doc == doc


def test_align_to_source_reanchors(matkg_schema):
    outcome = parse_marked(
        "nano <MAT>platinum</MAT> is used as a <APL>catalyst</APL>",
        matkg_schema,
        MarkerFormat.entity(),
        "lenient",
    )
    source = "nano platinum is used as a catalyst"
    aligned = align_to_source(outcome, source, "strict")
    assert aligned.doc.text == source
    assert aligned.doc.spans == (Span(5, 13, "MAT"), Span(27, 35, "APL"))
    assert aligned.warnings == ()


def test_align_handles_reflowed_whitespace(matkg_schema):
    outcome = parse_marked(
        "nano  <MAT>platinum</MAT>\nis used as a catalyst",
        matkg_schema,
        MarkerFormat.entity(),
        "lenient",
    )
    aligned = align_to_source(outcome, "nano platinum is used as a catalyst", "strict")
    assert aligned.doc.spans == (Span(5, 13, "MAT"),)


def test_align_no_markers_no_spans(matkg_schema):
    source = "nano platinum is used as a catalyst"
    outcome = parse_marked(source, matkg_schema, MarkerFormat.entity(), "lenient")
    aligned = align_to_source(outcome, source, "strict")
    assert aligned.doc.spans == ()


def test_align_divergence_strict_raises(matkg_schema):
    outcome = parse_marked(
        "nano <MAT>platinum</MAT> is great. Bonus hallucinated sentence.",
        matkg_schema,
        MarkerFormat.entity(),
        "lenient",
    )
    with pytest.raises(SourceDivergence):
        align_to_source(outcome, "nano platinum is great.", "strict")


def test_align_divergence_lenient_locates_unique_surfaces(matkg_schema):
    outcome = parse_marked(
        "Totally <MAT>platinum</MAT> rephrased and <APL>the</APL> output",
        matkg_schema,
        MarkerFormat.entity(),
        "lenient",
    )
    source = "the nano platinum is used as the catalyst"
    aligned = align_to_source(outcome, source, "lenient")
    # platinum occurs once and is kept; "the" is ambiguous and dropped
    assert aligned.doc.spans == (Span(9, 17, "MAT"),)
    assert any("ambiguous" in w for w in aligned.warnings)


def test_align_round_trip_after_render(matkg_schema):
    rng = random.Random(99)
    fmt = MarkerFormat.entity()
    for i in range(200):
        doc = make_random_doc(rng, matkg_schema.symbols, doc_id=f"a{i}")
        rendered = render_marked(doc, fmt, matkg_schema)
        outcome = parse_marked(rendered, matkg_schema, fmt, "lenient", doc_id=doc.doc_id)
        aligned = align_to_source(outcome, doc.text, "strict")
        assert aligned.doc == doc
