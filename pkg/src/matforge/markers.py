"""Inline entity-marker codecs.

Two highlight grammars over otherwise-unchanged text:

* entity markers: each span of type ``SYM`` is wrapped ``<SYM>surface</SYM>``,
  so one output can carry every entity type at once;
* special markers: spans of a single target type are wrapped ``@@surface##``,
  one type per rendering.

Rendering is exact (stripping the markers recovers the source text
byte-for-byte). Parsing is the inverse, with a strict mode that rejects any
malformation and a lenient mode that repairs what it can and reports every
repair as a warning. Only tags whose symbol exists in the governing schema
are markers at all: ``<b>``, ``<100>`` and similar scientific notation stay
plain text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Literal

from .schema import AnnotatedDoc, EntitySchema, Span, validate_doc

Mode = Literal["strict", "lenient"]

ENTITY_MARKER = "entity_marker"
SPECIAL_MARKER = "special_marker"

SPECIAL_OPEN = "@@"
SPECIAL_CLOSE = "##"

# Candidate entity tags share the symbol grammar; whether a candidate is a
# real marker depends on the schema at parse time.
_TAG_RE = re.compile(r"</?([A-Z][A-Z0-9_]{0,15})>")


class MarkerError(ValueError):
    """Base for marker codec failures; carries the offset where parsing stopped."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class InvalidDoc(MarkerError):
    def __init__(self, violations: list[str]):
        super().__init__("document failed validation: " + "; ".join(violations))
        self.violations = violations


class UnknownSymbol(MarkerError):
    pass


class UnclosedMarker(MarkerError):
    pass


class MismatchedClose(MarkerError):
    pass


class NestedMarker(MarkerError):
    pass


class SourceDivergence(MarkerError):
    pass


@dataclass(frozen=True)
class MarkerFormat:
    """Which highlight grammar to use; special markers carry the one target symbol."""

    kind: str
    target_symbol: str | None = None

    def __post_init__(self) -> None:
        if self.kind == SPECIAL_MARKER and not self.target_symbol:
            raise ValueError("special_marker format requires a target_symbol")
        if self.kind == ENTITY_MARKER and self.target_symbol is not None:
            raise ValueError("entity_marker format does not take a target_symbol")
        if self.kind not in (ENTITY_MARKER, SPECIAL_MARKER):
            raise ValueError(f"unknown marker kind {self.kind!r}")

    @classmethod
    def entity(cls) -> "MarkerFormat":
        return cls(ENTITY_MARKER)

    @classmethod
    def special(cls, target_symbol: str) -> "MarkerFormat":
        return cls(SPECIAL_MARKER, target_symbol)


@dataclass(frozen=True)
class ParseOutcome:
    """A parsed document plus notes about every repair lenient parsing made."""

    doc: AnnotatedDoc
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "warnings", tuple(self.warnings))


def render_marked(doc: AnnotatedDoc, fmt: MarkerFormat, schema: EntitySchema) -> str:
    """Serialize *doc* to marker-highlighted text.

    Entity format wraps every span; special format wraps only spans of the
    target symbol and silently omits the rest. Non-span text is preserved
    exactly, so stripping the markers recovers ``doc.text``.
    """
    violations = validate_doc(doc, schema)
    if violations:
        raise InvalidDoc(violations)
    if fmt.kind == SPECIAL_MARKER and not schema.has_symbol(fmt.target_symbol):
        raise UnknownSymbol(f"target symbol {fmt.target_symbol!r} not in schema")
    out: list[str] = []
    cursor = 0
    for span in doc.spans:
        if fmt.kind == SPECIAL_MARKER and span.symbol != fmt.target_symbol:
            continue
        out.append(doc.text[cursor : span.start])
        surface = doc.text[span.start : span.end]
        if fmt.kind == ENTITY_MARKER:
            out.append(f"<{span.symbol}>{surface}</{span.symbol}>")
        else:
            out.append(f"{SPECIAL_OPEN}{surface}{SPECIAL_CLOSE}")
        cursor = span.end
    out.append(doc.text[cursor:])
    return "".join(out)


def _scan(text: str, schema: EntitySchema, fmt: MarkerFormat) -> Iterator[tuple]:
    """Yield ``("text", s)`` and ``("open"/"close", symbol, token, pos)`` events.

    Only recognized markers become events; everything else is literal text.
    For entity format an unknown-but-symbol-shaped tag is emitted as an
    ``unknown`` event so strict mode can reject it.
    """
    if fmt.kind == ENTITY_MARKER:
        pos = 0
        for m in _TAG_RE.finditer(text):
            if m.start() > pos:
                yield ("text", text[pos : m.start()])
            sym = m.group(1)
            kind = "close" if m.group(0).startswith("</") else "open"
            if schema.has_symbol(sym):
                yield (kind, sym, m.group(0), m.start())
            else:
                yield ("unknown", sym, m.group(0), m.start())
            pos = m.end()
        if pos < len(text):
            yield ("text", text[pos:])
    else:
        sym = fmt.target_symbol
        pos = 0
        token_re = re.compile(re.escape(SPECIAL_OPEN) + "|" + re.escape(SPECIAL_CLOSE))
        for m in token_re.finditer(text):
            if m.start() > pos:
                yield ("text", text[pos : m.start()])
            kind = "open" if m.group(0) == SPECIAL_OPEN else "close"
            yield (kind, sym, m.group(0), m.start())
            pos = m.end()
        if pos < len(text):
            yield ("text", text[pos:])


def parse_marked(
    text: str,
    schema: EntitySchema,
    fmt: MarkerFormat,
    mode: Mode = "strict",
    doc_id: str = "",
) -> ParseOutcome:
    """Parse marker-highlighted text back into spans over the stripped text.

    Strict mode raises on the first malformation (unknown symbol tag,
    unclosed open, close without an open, mismatched close, nesting).
    Lenient mode never raises; repairs are applied in a fixed order and each
    one appends a warning:

    * unknown-symbol tags are kept as literal text;
    * an open that never closes (superseded by another open, or hanging at
      end of input) is dropped;
    * a close with no open is dropped;
    * a close whose symbol differs from the open one closes the open span
      at that point;
    * empty spans are dropped.
    """
    if fmt.kind == SPECIAL_MARKER and not schema.has_symbol(fmt.target_symbol):
        raise UnknownSymbol(f"target symbol {fmt.target_symbol!r} not in schema")
    strict = mode == "strict"
    stripped: list[str] = []
    length = 0
    spans: list[Span] = []
    warnings: list[str] = []
    open_symbol: str | None = None
    open_at = 0

    def emit(sym: str, start: int, end: int, pos: int) -> None:
        if start == end:
            if strict:
                raise MarkerError(f"empty {sym} span at offset {pos}", pos)
            warnings.append(f"dropped empty {sym} span at offset {pos}")
            return
        spans.append(Span(start, end, sym))

    for event in _scan(text, schema, fmt):
        if event[0] == "text":
            stripped.append(event[1])
            length += len(event[1])
            continue
        kind, sym, token, pos = event
        if kind == "unknown":
            if strict:
                raise UnknownSymbol(f"tag {token!r} at offset {pos} is not in the schema", pos)
            warnings.append(f"kept unknown tag {token!r} at offset {pos} as literal text")
            stripped.append(token)
            length += len(token)
        elif kind == "open":
            if open_symbol is not None:
                if strict:
                    raise NestedMarker(
                        f"open {token!r} at offset {pos} while <{open_symbol}> is open", pos
                    )
                warnings.append(f"dropped unclosed <{open_symbol}> before offset {pos}")
            open_symbol, open_at = sym, length
        else:  # close
            if open_symbol is None:
                if strict:
                    raise MismatchedClose(f"close {token!r} at offset {pos} without an open", pos)
                warnings.append(f"dropped stray close {token!r} at offset {pos}")
            elif sym != open_symbol:
                if strict:
                    raise MismatchedClose(
                        f"close {token!r} at offset {pos} does not match open <{open_symbol}>",
                        pos,
                    )
                warnings.append(
                    f"closed <{open_symbol}> at mismatched close {token!r} (offset {pos})"
                )
                emit(open_symbol, open_at, length, pos)
                open_symbol = None
            else:
                emit(sym, open_at, length, pos)
                open_symbol = None
    if open_symbol is not None:
        if strict:
            raise UnclosedMarker(f"<{open_symbol}> never closed", len(text))
        warnings.append(f"dropped unclosed <{open_symbol}> at end of input")

    doc = AnnotatedDoc(doc_id=doc_id, text="".join(stripped), spans=tuple(spans))
    return ParseOutcome(doc=doc, warnings=tuple(warnings))


def strip_markers(text: str, schema: EntitySchema, fmt: MarkerFormat) -> str:
    """Remove every recognized marker token; equals the lenient parse's text."""
    return parse_marked(text, schema, fmt, mode="lenient").doc.text


_WS_RE = re.compile(r"\s+")


def normalize_ws(s: str) -> str:
    return _WS_RE.sub(" ", s).strip()


def _whitespace_alignment(parsed: str, source: str) -> list[int] | None:
    """Map each non-whitespace index of *parsed* to its index in *source*.

    Returns None when the two texts differ by more than whitespace.
    Whitespace positions map to -1.
    """
    mapping = [-1] * len(parsed)
    i = j = 0
    while i < len(parsed) and j < len(source):
        if parsed[i].isspace():
            i += 1
        elif source[j].isspace():
            j += 1
        elif parsed[i] == source[j]:
            mapping[i] = j
            i += 1
            j += 1
        else:
            return None
    while i < len(parsed):
        if not parsed[i].isspace():
            return None
        i += 1
    while j < len(source):
        if not source[j].isspace():
            return None
        j += 1
    return mapping


def _flexible_ws_pattern(surface: str) -> re.Pattern | None:
    parts = surface.split()
    if not parts:
        return None
    return re.compile(r"\s+".join(re.escape(p) for p in parts))


def align_to_source(outcome: ParseOutcome, source: str, mode: Mode = "strict") -> ParseOutcome:
    """Re-anchor spans parsed from model output onto the original *source* text.

    Generative models habitually reflow whitespace, so the parsed text is
    matched against the source modulo whitespace runs. Strict mode requires
    the whole stripped text to equal the source after whitespace
    normalization and raises :class:`SourceDivergence` otherwise. Lenient
    mode falls back to locating each span's surface string in the source:
    spans that locate uniquely are kept, the rest are dropped with warnings.
    """
    parsed = outcome.doc.text
    if parsed == source:
        return outcome
    warnings = list(outcome.warnings)
    mapping = _whitespace_alignment(parsed, source)
    spans: list[Span] = []
    if mapping is not None:
        for span in outcome.doc.spans:
            anchored = [mapping[k] for k in range(span.start, span.end) if mapping[k] >= 0]
            if not anchored:
                warnings.append(
                    f"dropped whitespace-only {span.symbol} span at [{span.start},{span.end})"
                )
                continue
            spans.append(Span(anchored[0], anchored[-1] + 1, span.symbol))
    elif mode == "strict":
        raise SourceDivergence(
            "stripped output does not equal the source text after whitespace normalization"
        )
    else:
        warnings.append("output text diverged from source; anchoring spans by surface string")
        taken: list[Span] = []
        for span in outcome.doc.spans:
            surface = parsed[span.start : span.end]
            pattern = _flexible_ws_pattern(surface)
            hits = list(pattern.finditer(source)) if pattern else []
            if len(hits) != 1:
                warnings.append(
                    f"dropped {span.symbol} span {surface!r}: "
                    f"{'not found' if not hits else 'ambiguous'} in source"
                )
                continue
            candidate = Span(hits[0].start(), hits[0].end(), span.symbol)
            if any(not (candidate.end <= t.start or candidate.start >= t.end) for t in taken):
                warnings.append(f"dropped {span.symbol} span {surface!r}: overlaps another span")
                continue
            taken.append(candidate)
        spans = taken

    doc = AnnotatedDoc(doc_id=outcome.doc.doc_id, text=source, spans=tuple(spans))
    return ParseOutcome(doc=doc, warnings=tuple(warnings))
