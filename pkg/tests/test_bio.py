from __future__ import annotations

import random

import pytest

from conftest import make_random_doc
from matforge.bio import (
    BioLabel,
    BioSequence,
    DanglingInside,
    MalformedLine,
    MisalignedSpan,
    Token,
    UnknownLabel,
    bio_to_spans,
    read_conll,
    spans_to_bio,
    tokenize,
    write_conll,
)
from matforge.schema import Span


def test_tokenize_intro_sentence():
    tokens = tokenize("nano platinum is used as a catalyst")
    assert [t.surface for t in tokens] == [
        "nano", "platinum", "is", "used", "as", "a", "catalyst",
    ]
    assert (tokens[0].start, tokens[0].end) == (0, 4)
    assert (tokens[1].start, tokens[1].end) == (5, 13)
    assert (tokens[6].start, tokens[6].end) == (27, 35)


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_edge_punctuation():
    tokens = tokenize("Al2O3.")
    assert [t.surface for t in tokens] == ["Al2O3", "."]
    tokens = tokenize("(see Fig. 2c).")
    assert [t.surface for t in tokens] == ["(", "see", "Fig", ".", "2c", ")", "."]


def test_tokenize_keeps_interior_punctuation():
    assert [t.surface for t in tokenize("a 0.9 ratio")] == ["a", "0.9", "ratio"]
    assert [t.surface for t in tokenize("LiMn0.9Fe0.1PO4")] == ["LiMn0.9Fe0.1PO4"]


def test_tokenize_offsets_cover_surfaces():
    text = "Nanostructured Al₂O₃ (fcc), ~5 nm."
    for token in tokenize(text):
        assert text[token.start : token.end] == token.surface


def test_tokenize_idempotent_under_rejoin():
    rng = random.Random(3)
    for i in range(200):
        text = make_random_doc(rng, ("X",), doc_id=str(i)).text
        once = tokenize(text)
        rejoined = " ".join(t.surface for t in once)
        assert [t.surface for t in tokenize(rejoined)] == [t.surface for t in once]


def test_spans_to_bio_methods_example(methods_doc):
    tokens = tokenize(methods_doc.text)
    seq, warnings = spans_to_bio(tokens, methods_doc.spans)
    assert warnings == []
    assert [t.surface for t in seq.tokens[:2]] == ["Nanostructured", "Al₂O₃"]
    assert [t.surface for t in seq.tokens[-3:]] == ["such", "solar", "cells"]
    labels = [str(l) for l in seq.labels]
    assert labels[:2] == ["B-DSC", "B-MAT"]
    assert labels[-3:] == ["O", "B-APL", "I-APL"]


def test_spans_to_bio_no_spans_all_o():
    tokens = tokenize("three plain words")
    seq, _ = spans_to_bio(tokens, [])
    assert [str(l) for l in seq.labels] == ["O", "O", "O"]


def test_spans_to_bio_strict_rejects_midtoken_boundary():
    tokens = tokenize("an Al2O3 film")
    with pytest.raises(MisalignedSpan):
        spans_to_bio(tokens, [Span(3, 5, "MAT")], mode="strict")


def test_spans_to_bio_lenient_snaps_outward():
    text = "an Al2O3 film"
    tokens = tokenize(text)
    seq, warnings = spans_to_bio(tokens, [Span(3, 5, "MAT")], mode="lenient")
    assert [str(l) for l in seq.labels] == ["O", "B-MAT", "O"]
    assert any("snapped" in w for w in warnings)


def test_bio_to_spans_methods_labels(methods_doc):
    tokens = tokenize(methods_doc.text)
    seq, _ = spans_to_bio(tokens, methods_doc.spans)
    spans, warnings = bio_to_spans(seq)
    assert warnings == []
    assert tuple(spans) == methods_doc.spans


def test_bio_to_spans_all_o():
    tokens = tokenize("no entities at all")
    seq, _ = spans_to_bio(tokens, [])
    assert bio_to_spans(seq) == ([], [])


def test_bio_to_spans_dangling_inside():
    tokens = tokenize("dangling inside")
    seq = BioSequence(tuple(tokens), (BioLabel("O"), BioLabel("I", "MAT")))
    with pytest.raises(DanglingInside):
        bio_to_spans(seq, mode="strict")
    spans, warnings = bio_to_spans(seq, mode="lenient")
    assert spans == [Span(9, 15, "MAT")]
    assert any("treated as B-MAT" in w for w in warnings)


def test_bio_to_spans_symbol_switch_inside():
    tokens = tokenize("a b c")
    seq = BioSequence(
        tuple(tokens), (BioLabel("B", "MAT"), BioLabel("I", "DSC"), BioLabel("O"))
    )
    with pytest.raises(DanglingInside):
        bio_to_spans(seq, mode="strict")
    spans, _ = bio_to_spans(seq, mode="lenient")
    assert spans == [Span(0, 1, "MAT"), Span(2, 3, "DSC")]


def test_adjacent_b_tags_make_separate_spans():
    tokens = tokenize("one two")
    seq = BioSequence(tuple(tokens), (BioLabel("B", "MAT"), BioLabel("B", "MAT")))
    spans, _ = bio_to_spans(seq)
    assert spans == [Span(0, 3, "MAT"), Span(4, 7, "MAT")]


def test_bio_round_trip_on_aligned_spans():
    rng = random.Random(11)
    symbols = ("MAT", "DSC", "APL", "SPL")
    for _ in range(300):
        n = rng.randint(0, 12)
        words = ["w%d" % k for k in range(n)]
        text = " ".join(words)
        tokens = tokenize(text)
        # random spans aligned to token boundaries
        spans = []
        k = 0
        while k < n:
            if rng.random() < 0.4:
                width = min(rng.randint(1, 3), n - k)
                spans.append(
                    Span(tokens[k].start, tokens[k + width - 1].end, rng.choice(symbols))
                )
                k += width
            else:
                k += 1
        seq, w1 = spans_to_bio(tokens, spans, mode="strict")
        assert w1 == []
        back, w2 = bio_to_spans(seq, mode="strict")
        assert w2 == []
        assert back == spans


def test_read_conll_two_sentences():
    data = "EU B-ORG\nrejects O\n\nGerman B-MISC\ncall O\n"
    seqs = read_conll(data)
    assert len(seqs) == 2
    assert [t.surface for t in seqs[0].tokens] == ["EU", "rejects"]
    assert [str(l) for l in seqs[0].labels] == ["B-ORG", "O"]
    spans, _ = bio_to_spans(seqs[0])
    assert spans == [Span(0, 2, "ORG")]


def test_read_conll_multicolumn_takes_last():
    data = "EU NNP B-NP B-ORG\nrejects VBZ B-VP O\n"
    seqs = read_conll(data)
    assert [str(l) for l in seqs[0].labels] == ["B-ORG", "O"]


def test_read_conll_empty():
    assert read_conll("") == []
    assert read_conll("\n\n\n") == []


def test_read_conll_malformed_line():
    with pytest.raises(MalformedLine):
        read_conll("justoneword\n")


def test_read_conll_unknown_label():
    with pytest.raises(UnknownLabel):
        read_conll("EU WEIRD-ORG\n")


def test_write_read_round_trip():
    data = "EU B-ORG\nrejects O\n\nGerman B-MISC\ncall O\n"
    seqs = read_conll(data)
    assert write_conll(seqs) == data
    assert read_conll(write_conll(seqs)) == seqs


def test_bio_label_validation():
    with pytest.raises(ValueError):
        BioLabel("B")
    with pytest.raises(ValueError):
        BioLabel("O", "MAT")
    with pytest.raises(UnknownLabel):
        BioLabel.parse("Q-THING")


def test_sequence_length_invariant():
    with pytest.raises(ValueError):
        BioSequence((Token("a", 0, 1),), ())
