"""Exact-match NER scoring and prompt-count accounting.

A prediction is a true positive only when an unconsumed gold span has the
identical (symbol, start, end); everything else is a false positive, and
unmatched gold spans are false negatives. Precision, recall, and F1 follow
the usual TP/FP/FN formulas with an explicit convention for empty
denominators: both empty means vacuously perfect (flagged degenerate),
exactly one empty scores zero.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .schema import AnnotatedDoc, EntitySchema, Span


class DocMismatch(ValueError):
    """Prediction and gold corpora do not cover the same documents."""


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    degenerate: bool = False


@dataclass(frozen=True)
class EvalReport:
    per_symbol: Mapping[str, tuple[MatchCounts, Metrics]]
    micro: Metrics
    macro: Metrics
    micro_counts: MatchCounts

    def to_dict(self) -> dict[str, Any]:
        def metrics_dict(m: Metrics) -> dict[str, Any]:
            return {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "degenerate": m.degenerate,
            }

        return {
            "per_symbol": {
                sym: {"tp": c.tp, "fp": c.fp, "fn": c.fn, **metrics_dict(m)}
                for sym, (c, m) in sorted(self.per_symbol.items())
            },
            "micro": {
                "tp": self.micro_counts.tp,
                "fp": self.micro_counts.fp,
                "fn": self.micro_counts.fn,
                **metrics_dict(self.micro),
            },
            "macro": metrics_dict(self.macro),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def match_exact(pred: Iterable[Span], gold: Iterable[Span]) -> MatchCounts:
    """Count TP/FP/FN under exact (symbol, start, end) identity.

    Each gold span is consumed by at most one prediction, so duplicate
    predictions of the same span count one TP and the rest FP.
    """
    pred_counter = Counter(pred)
    gold_counter = Counter(gold)
    tp = sum(min(n, gold_counter[key]) for key, n in pred_counter.items())
    n_pred = sum(pred_counter.values())
    n_gold = sum(gold_counter.values())
    return MatchCounts(tp=tp, fp=n_pred - tp, fn=n_gold - tp)


def match_exact_per_symbol(
    pred: Iterable[Span], gold: Iterable[Span]
) -> dict[str, MatchCounts]:
    by_symbol: dict[str, tuple[list[Span], list[Span]]] = {}
    for s in pred:
        by_symbol.setdefault(s.symbol, ([], []))[0].append(s)
    for s in gold:
        by_symbol.setdefault(s.symbol, ([], []))[1].append(s)
    return {sym: match_exact(p, g) for sym, (p, g) in by_symbol.items()}


def prf(counts: MatchCounts) -> Metrics:
    """Precision, recall, and their harmonic mean from raw counts.

    Zero-denominator convention: tp+fp == tp+fn == 0 scores 1.0 across the
    board with the degenerate flag set; a single empty denominator scores
    that metric 0.0 (also flagged).
    """
    p_den = counts.tp + counts.fp
    r_den = counts.tp + counts.fn
    if p_den == 0 and r_den == 0:
        return Metrics(1.0, 1.0, 1.0, degenerate=True)
    degenerate = p_den == 0 or r_den == 0
    precision = counts.tp / p_den if p_den else 0.0
    recall = counts.tp / r_den if r_den else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(precision, recall, f1, degenerate=degenerate)


def report_from_counts(per_symbol: Mapping[str, MatchCounts]) -> EvalReport:
    """Assemble per-symbol metrics, pooled micro, and unweighted macro.

    Micro is computed from summed counts, never from averaged metrics.
    Symbols absent from both sides never enter the counts, so the macro
    average is over observed symbols only.
    """
    scored = {sym: (c, prf(c)) for sym, c in per_symbol.items()}
    pooled = sum(per_symbol.values(), MatchCounts())
    micro = prf(pooled)
    if scored:
        ms = [m for _, m in scored.values()]
        macro = Metrics(
            precision=sum(m.precision for m in ms) / len(ms),
            recall=sum(m.recall for m in ms) / len(ms),
            f1=sum(m.f1 for m in ms) / len(ms),
            degenerate=any(m.degenerate for m in ms),
        )
    else:
        macro = Metrics(1.0, 1.0, 1.0, degenerate=True)
    return EvalReport(per_symbol=scored, micro=micro, macro=macro, micro_counts=pooled)


def evaluate_corpus(
    pred_docs: Iterable[AnnotatedDoc], gold_docs: Iterable[AnnotatedDoc]
) -> EvalReport:
    """Accumulate exact-match counts per symbol across paired documents."""
    pred_by_id: dict[str, AnnotatedDoc] = {}
    for d in pred_docs:
        if d.doc_id in pred_by_id:
            raise DocMismatch(f"duplicate doc_id {d.doc_id!r} in predictions")
        pred_by_id[d.doc_id] = d
    gold_by_id: dict[str, AnnotatedDoc] = {}
    for d in gold_docs:
        if d.doc_id in gold_by_id:
            raise DocMismatch(f"duplicate doc_id {d.doc_id!r} in gold")
        gold_by_id[d.doc_id] = d
    missing = sorted(set(gold_by_id) - set(pred_by_id))
    extra = sorted(set(pred_by_id) - set(gold_by_id))
    if missing or extra:
        raise DocMismatch(
            f"doc_id sets differ (missing from pred: {missing}, unknown to gold: {extra})"
        )
    totals: dict[str, MatchCounts] = {}
    for doc_id, gold in gold_by_id.items():
        pred = pred_by_id[doc_id]
        if pred.text != gold.text:
            raise DocMismatch(f"texts differ for doc_id {doc_id!r}")
        for sym, c in match_exact_per_symbol(pred.spans, gold.spans).items():
            totals[sym] = totals.get(sym, MatchCounts()) + c
    return report_from_counts(totals)


def prompt_count(schema: EntitySchema, approach: str, n_units: int) -> int:
    """Prompts needed to annotate *n_units* inputs under each highlighting approach.

    Entity markers extract every type in one prompt; special markers need
    one prompt per (input, entity type) pair, growing with the schema.
    """
    if n_units < 0:
        raise ValueError("n_units must be >= 0")
    if approach == "entity_marker":
        return n_units
    if approach == "special_marker":
        return n_units * len(schema.entity_types)
    raise ValueError(f"unknown approach {approach!r}")
