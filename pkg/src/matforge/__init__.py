"""matforge: marker-based entity annotation, BIO interop, exact-match NER
scoring, and LLM-driven knowledge-graph extraction for materials text."""

from .schema import (
    AnnotatedDoc,
    EntitySchema,
    EntityType,
    RelationType,
    Span,
    bundled_schema,
    load_schema,
    validate_doc,
    validate_schema,
)
from .markers import MarkerFormat, ParseOutcome, align_to_source, parse_marked, render_marked, strip_markers
from .bio import BioLabel, BioSequence, Token, bio_to_spans, read_conll, spans_to_bio, tokenize, write_conll
from .ner_eval import EvalReport, MatchCounts, Metrics, evaluate_corpus, match_exact, prf, prompt_count
from .kg import KgEdge, KgNode, KnowledgeGraph, node_match, normalize_name, parse_kg, score_kg
from .dataset import BuildConfig, FinetunePair, build_pairs, load_conll_as_corpus, load_spans_jsonl, render_prompt
from .gateway import Gateway, GatewayConfig, GenerationParams, default_params
from .pipeline import RunConfig, RunStore, annotate_doc, compare_runs, construct_kg, run

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDoc",
    "BioLabel",
    "BioSequence",
    "BuildConfig",
    "EntitySchema",
    "EntityType",
    "EvalReport",
    "FinetunePair",
    "Gateway",
    "GatewayConfig",
    "GenerationParams",
    "KgEdge",
    "KgNode",
    "KnowledgeGraph",
    "MarkerFormat",
    "MatchCounts",
    "Metrics",
    "ParseOutcome",
    "RelationType",
    "RunConfig",
    "RunStore",
    "Span",
    "Token",
    "align_to_source",
    "annotate_doc",
    "bio_to_spans",
    "build_pairs",
    "bundled_schema",
    "compare_runs",
    "construct_kg",
    "default_params",
    "evaluate_corpus",
    "load_conll_as_corpus",
    "load_schema",
    "load_spans_jsonl",
    "match_exact",
    "node_match",
    "normalize_name",
    "parse_kg",
    "parse_marked",
    "prf",
    "prompt_count",
    "read_conll",
    "render_marked",
    "render_prompt",
    "run",
    "score_kg",
    "spans_to_bio",
    "strip_markers",
    "tokenize",
    "validate_doc",
    "validate_schema",
    "write_conll",
]
