"""BIO (IOB2) token labels and CoNLL-style column files.

Bridges span annotations and the token-classification world: every entity
starts with ``B-X`` and continues with ``I-X``; ``O`` marks everything else.
Entities are recovered as maximal ``B-X (I-X)*`` runs.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from .schema import Span

Mode = str  # "strict" | "lenient"

_EDGE_PUNCT = set(string.punctuation)


class BioError(ValueError):
    pass


class MisalignedSpan(BioError):
    pass


class DanglingInside(BioError):
    pass


class MalformedLine(BioError):
    pass


class UnknownLabel(BioError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class BioLabel:
    tag: str  # "B" | "I" | "O"
    symbol: str | None = None

    def __post_init__(self) -> None:
        if self.tag == "O" and self.symbol is not None:
            raise ValueError("O label carries no symbol")
        if self.tag in ("B", "I") and not self.symbol:
            raise ValueError(f"{self.tag} label requires a symbol")
        if self.tag not in ("B", "I", "O"):
            raise ValueError(f"unknown tag {self.tag!r}")

    def __str__(self) -> str:
        return "O" if self.tag == "O" else f"{self.tag}-{self.symbol}"

    @classmethod
    def parse(cls, text: str) -> "BioLabel":
        if text == "O":
            return cls("O")
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            return cls(text[0], text[2:])
        raise UnknownLabel(f"not a BIO label: {text!r}")


@dataclass(frozen=True)
class BioSequence:
    tokens: tuple[Token, ...]
    labels: tuple[BioLabel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels"
            )

    @property
    def text(self) -> str:
        """The single-space joined surface string used for synthesized offsets."""
        return " ".join(t.surface for t in self.tokens)


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization with ASCII punctuation split off token edges.

    Interior punctuation stays attached so chemistry tokens like ``0.9`` or
    ``LiMn0.9Fe0.1PO4`` do not shatter; only leading/trailing punctuation
    characters become their own tokens.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        start, end = i, j
        while start < end and text[start] in _EDGE_PUNCT:
            tokens.append(Token(text[start], start, start + 1))
            start += 1
        # peel trailing punctuation after the core, preserving order
        trailing: list[Token] = []
        while end > start and text[end - 1] in _EDGE_PUNCT:
            trailing.append(Token(text[end - 1], end - 1, end))
            end -= 1
        if start < end:
            tokens.append(Token(text[start:end], start, end))
        tokens.extend(reversed(trailing))
        i = j
    return tokens


def spans_to_bio(
    tokens: list[Token] | tuple[Token, ...],
    spans: list[Span] | tuple[Span, ...],
    mode: Mode = "strict",
) -> tuple[BioSequence, list[str]]:
    """Label *tokens* with B/I/O against *spans*.

    A token fully inside a span gets ``B-symbol`` if it is the first token of
    that span, ``I-symbol`` otherwise. A span boundary strictly inside a
    token is an error in strict mode; lenient mode snaps the span outward to
    token boundaries and records a warning.
    """
    warnings: list[str] = []
    labels: list[BioLabel] = [BioLabel("O")] * len(tokens)
    for span in sorted(spans):
        covered = [
            k
            for k, t in enumerate(tokens)
            if t.end > span.start and t.start < span.end
        ]
        if not covered:
            warnings.append(
                f"span {span.symbol} [{span.start},{span.end}) covers no token"
            )
            continue
        first, last = tokens[covered[0]], tokens[covered[-1]]
        if first.start < span.start or last.end > span.end:
            msg = (
                f"span {span.symbol} [{span.start},{span.end}) cuts through token "
                f"boundaries [{first.start},{last.end})"
            )
            if mode == "strict":
                raise MisalignedSpan(msg)
            warnings.append(msg + "; snapped outward")
        for pos, k in enumerate(covered):
            labels[k] = BioLabel("B" if pos == 0 else "I", span.symbol)
    return BioSequence(tuple(tokens), tuple(labels)), warnings


def bio_to_spans(
    seq: BioSequence, mode: Mode = "strict"
) -> tuple[list[Span], list[str]]:
    """Recover spans as maximal ``B-X (I-X)*`` runs over the token offsets.

    An ``I-X`` without a compatible predecessor raises in strict mode; in
    lenient mode it starts a new span (treated as ``B-X``) with a warning.
    """
    warnings: list[str] = []
    spans: list[Span] = []
    current: tuple[str, int, int] | None = None  # (symbol, start, end)

    def flush() -> None:
        nonlocal current
        if current is not None:
            spans.append(Span(current[1], current[2], current[0]))
            current = None

    for token, label in zip(seq.tokens, seq.labels):
        if label.tag == "B":
            flush()
            current = (label.symbol, token.start, token.end)
        elif label.tag == "I":
            if current is not None and current[0] == label.symbol:
                current = (current[0], current[1], token.end)
            else:
                msg = f"I-{label.symbol} at token {token.surface!r} has no open {label.symbol} run"
                if mode == "strict":
                    raise DanglingInside(msg)
                warnings.append(msg + "; treated as B-" + label.symbol)
                flush()
                current = (label.symbol, token.start, token.end)
        else:
            flush()
    flush()
    return spans, warnings


def read_conll(data: str | bytes) -> list[BioSequence]:
    """Parse token-per-line column text: blank lines separate sentences,
    the label sits in the last column, the surface in the first.

    Token offsets are synthesized by single-space joining the surfaces.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    sequences: list[BioSequence] = []
    surfaces: list[str] = []
    labels: list[BioLabel] = []

    def flush() -> None:
        nonlocal surfaces, labels
        if surfaces:
            tokens = []
            offset = 0
            for s in surfaces:
                tokens.append(Token(s, offset, offset + len(s)))
                offset += len(s) + 1
            sequences.append(BioSequence(tuple(tokens), tuple(labels)))
            surfaces, labels = [], []

    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        columns = line.split()
        if len(columns) < 2:
            raise MalformedLine(f"line {lineno}: expected at least 2 columns, got {line!r}")
        surfaces.append(columns[0])
        labels.append(BioLabel.parse(columns[-1]))
    flush()
    return sequences


def write_conll(sequences: list[BioSequence] | tuple[BioSequence, ...]) -> str:
    """Two-column ``surface label`` lines, blank line between sentences, LF endings."""
    blocks = []
    for seq in sequences:
        blocks.append(
            "\n".join(f"{t.surface} {l}" for t, l in zip(seq.tokens, seq.labels))
        )
    return "\n\n".join(blocks) + ("\n" if blocks else "")
