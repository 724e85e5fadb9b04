"""Fine-tuning pair construction and benchmark-format loaders.

Builds prompt/completion pairs from an annotated corpus under either
highlighting approach:

* special markers duplicate each input once per entity type and highlight
  only that type;
* entity markers emit one pair per input with every type highlighted.

To keep models from over-learning silence, a fixed fraction (default half)
of the candidates whose completion contains no highlight is removed, chosen
by a seeded shuffle so the build is reproducible bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .bio import BioSequence, bio_to_spans, read_conll
from .markers import ENTITY_MARKER, SPECIAL_MARKER, MarkerFormat, render_marked
from .rng import Lcg64, mix64
from .schema import AnnotatedDoc, EntitySchema, Span, load_docs_jsonl, validate_doc


class DatasetError(ValueError):
    pass


class InvalidCorpus(DatasetError):
    pass


class UnknownTemplate(DatasetError):
    pass


class MissingDescription(DatasetError):
    pass


@dataclass(frozen=True)
class FinetunePair:
    prompt: str
    completion: str
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"prompt": self.prompt, "completion": self.completion, "meta": self.meta}


@dataclass(frozen=True)
class BuildConfig:
    approach: str = ENTITY_MARKER  # entity_marker | special_marker
    drop_rate: float = 0.5
    seed: int = 0
    template_id: str = "ner_entity_marker"
    max_input_chars: int = 8192  # character-budget stand-in for the model token cap

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError("drop_rate must be in [0, 1]")
        if self.approach not in (ENTITY_MARKER, SPECIAL_MARKER):
            raise ValueError(f"unknown approach {self.approach!r}")


@dataclass
class BuildReport:
    candidates: int = 0
    dropped: int = 0
    skipped_docs: list[tuple[str, str]] = field(default_factory=list)


# -- prompt templates --------------------------------------------------------


def _template_root() -> Any:
    return resources.files("matforge") / "templates"


def load_template(template_id: str, template_dir: str | Path | None = None) -> str:
    """Read a template by id, from *template_dir* if given, else the bundled set."""
    if template_dir is not None:
        path = Path(template_dir) / f"{template_id}.txt"
        if not path.is_file():
            raise UnknownTemplate(f"no template {template_id!r} in {template_dir}")
        return path.read_text(encoding="utf-8")
    res = _template_root() / f"{template_id}.txt"
    try:
        return res.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UnknownTemplate(f"no bundled template {template_id!r}") from None


def render_prompt(
    template_id: str,
    schema: EntitySchema,
    symbols_in_scope: Sequence[str],
    description_choice: dict[str, int],
    input_text: str,
    extra: dict[str, str] | None = None,
    template_dir: str | Path | None = None,
) -> str:
    """Fill a template's ``{DEFINITIONS}`` and ``{INPUT}`` placeholders.

    The definitions block lists each in-scope symbol with its chosen
    description variant, in schema order. An empty scope is only meaningful
    for graph-construction templates (ids starting ``kg``), where the
    instructions carry the schema instead.
    """
    text = load_template(template_id, template_dir)
    if not symbols_in_scope and not template_id.startswith("kg"):
        raise MissingDescription(
            f"template {template_id!r} needs at least one entity definition"
        )
    lines = []
    for t in schema.entity_types:
        if t.symbol not in symbols_in_scope:
            continue
        if t.symbol not in description_choice:
            raise MissingDescription(f"no description chosen for {t.symbol}")
        idx = description_choice[t.symbol]
        if not 0 <= idx < len(t.descriptions):
            raise MissingDescription(
                f"description index {idx} out of range for {t.symbol}"
            )
        lines.append(f"{t.symbol} ({t.name}): {t.descriptions[idx]}")
    unknown = set(symbols_in_scope) - set(schema.symbols)
    if unknown:
        raise MissingDescription(f"symbols not in schema: {sorted(unknown)}")
    text = text.replace("{DEFINITIONS}", "\n".join(lines))
    for key, value in (extra or {}).items():
        text = text.replace("{" + key + "}", value)
    return text.replace("{INPUT}", input_text)


# -- pair construction --------------------------------------------------------


def build_pairs(
    corpus: Sequence[AnnotatedDoc],
    schema: EntitySchema,
    config: BuildConfig,
    template_dir: str | Path | None = None,
) -> tuple[list[FinetunePair], BuildReport]:
    """Construct fine-tuning pairs with the duplication and drop rules.

    Deterministic given (corpus order, schema, config): description choices
    come from a per-candidate stream derived from the seed, and the
    highlight-free drop removes exactly ``floor(drop_rate * k)`` of the k
    silent candidates selected by a seeded shuffle.
    """
    report = BuildReport()
    for doc in corpus:
        violations = validate_doc(doc, schema)
        if violations:
            raise InvalidCorpus(f"doc {doc.doc_id!r}: " + "; ".join(violations))

    candidates: list[tuple[FinetunePair, bool]] = []  # (pair, highlight-free)
    kept_docs: list[tuple[int, AnnotatedDoc]] = []
    for doc_index, doc in enumerate(corpus):
        if len(doc.text) > config.max_input_chars:
            report.skipped_docs.append(
                (doc.doc_id, f"input longer than {config.max_input_chars} characters")
            )
            continue
        kept_docs.append((doc_index, doc))

    if config.approach == SPECIAL_MARKER:
        for doc_index, doc in kept_docs:
            for type_index, etype in enumerate(schema.entity_types):
                rng = Lcg64(mix64(config.seed, doc_index, type_index))
                choice = {etype.symbol: rng.below(len(etype.descriptions))}
                fmt = MarkerFormat.special(etype.symbol)
                completion = render_marked(doc, fmt, schema)
                prompt = render_prompt(
                    config.template_id,
                    schema,
                    [etype.symbol],
                    choice,
                    doc.text,
                    template_dir=template_dir,
                )
                pair = FinetunePair(
                    prompt=prompt,
                    completion=completion,
                    meta={
                        "doc_id": doc.doc_id,
                        "approach": config.approach,
                        "target_symbol": etype.symbol,
                        "description_choice": choice,
                    },
                )
                candidates.append((pair, completion == doc.text))
    else:
        fmt = MarkerFormat.entity()
        for doc_index, doc in kept_docs:
            rng = Lcg64(mix64(config.seed, doc_index))
            choice = {
                t.symbol: rng.below(len(t.descriptions)) for t in schema.entity_types
            }
            completion = render_marked(doc, fmt, schema)
            prompt = render_prompt(
                config.template_id,
                schema,
                list(schema.symbols),
                choice,
                doc.text,
                template_dir=template_dir,
            )
            pair = FinetunePair(
                prompt=prompt,
                completion=completion,
                meta={
                    "doc_id": doc.doc_id,
                    "approach": config.approach,
                    "target_symbol": None,
                    "description_choice": choice,
                },
            )
            candidates.append((pair, completion == doc.text))

    report.candidates = len(candidates)
    silent = [i for i, (_, quiet) in enumerate(candidates) if quiet]
    # epsilon keeps decimal rates like 0.3 * 10 from flooring to 2
    n_drop = int(config.drop_rate * len(silent) + 1e-9)
    drop_rng = Lcg64(mix64(config.seed, 0xD120))
    order = list(silent)
    drop_rng.shuffle(order)
    dropped = set(order[:n_drop])
    report.dropped = len(dropped)
    pairs = [p for i, (p, _) in enumerate(candidates) if i not in dropped]
    return pairs, report


def dump_pairs_jsonl(pairs: Iterable[FinetunePair]) -> str:
    return "".join(json.dumps(p.to_dict(), ensure_ascii=False) + "\n" for p in pairs)


# -- corpus loaders ------------------------------------------------------------


def load_spans_jsonl(
    data: str | bytes, schema: EntitySchema | None = None
) -> list[AnnotatedDoc]:
    """Read ``{doc_id, text, spans}`` lines; validates when a schema is given."""
    docs = load_docs_jsonl(data)
    if schema is not None:
        for doc in docs:
            violations = validate_doc(doc, schema)
            if violations:
                raise InvalidCorpus(f"doc {doc.doc_id!r}: " + "; ".join(violations))
    return docs


def load_conll_as_corpus(
    data: str | bytes,
    symbol_map: dict[str, str] | None = None,
    doc_id_prefix: str = "conll",
) -> list[AnnotatedDoc]:
    """CoNLL column file -> corpus: lenient BIO decoding over synthesized text."""
    docs: list[AnnotatedDoc] = []
    for i, seq in enumerate(read_conll(data)):
        seq = _map_symbols(seq, symbol_map)
        spans, _ = bio_to_spans(seq, mode="lenient")
        docs.append(
            AnnotatedDoc(
                doc_id=f"{doc_id_prefix}-{i:04d}",
                text=seq.text,
                spans=tuple(spans),
            )
        )
    return docs


def _map_symbols(seq: BioSequence, symbol_map: dict[str, str] | None) -> BioSequence:
    if not symbol_map:
        return seq
    from .bio import BioLabel, UnknownLabel

    labels = []
    for label in seq.labels:
        if label.tag == "O":
            labels.append(label)
            continue
        if label.symbol not in symbol_map:
            raise UnknownLabel(f"no mapping for dataset label {label.symbol!r}")
        labels.append(BioLabel(label.tag, symbol_map[label.symbol]))
    return BioSequence(seq.tokens, tuple(labels))
