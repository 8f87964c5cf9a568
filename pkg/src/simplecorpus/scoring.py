"""Complexity scorers: value in [0, 1], lower means simpler.

Three interchangeable span scorers:
  - LexiconScorer: per-token complexities from a TSV table, max over the span.
  - FrequencyScorer: complexity from corpus counts, max over the span.
  - ExternalScorer: batches requests to an out-of-process model over the
    newline-JSON protocol (see client.py).

Span aggregation for the built-in scorers is MAX, not mean: one complex
word makes a span unsafe to treat as simple. Unknown tokens default to 0.5,
above the masking threshold, so unseen words are never masked.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .records import SentenceRecord, SpanRef, validate_span

if TYPE_CHECKING:
    from .client import ExternalScorerClient

log = logging.getLogger(__name__)

DEFAULT_UNKNOWN = 0.5


@dataclass
class LexiconTable:
    """Lowercased token -> complexity in [0, 1]."""

    entries: dict[str, float] = field(default_factory=dict)
    default_unknown: float = DEFAULT_UNKNOWN

    def lookup(self, token: str) -> float:
        return self.entries.get(token.lower(), self.default_unknown)


def load_lexicon(path: str, default_unknown: float = DEFAULT_UNKNOWN) -> LexiconTable:
    """Read a token<TAB>complexity TSV; '#' lines are comments.

    Lines with a bad field count, a non-numeric score, or a score outside
    [0, 1] are skipped with a warning.
    """
    entries: dict[str, float] = {}
    skipped = 0
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                skipped += 1
                continue
            try:
                value = float(parts[1])
            except ValueError:
                skipped += 1
                continue
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                skipped += 1
                continue
            entries[parts[0].lower()] = value
    if skipped:
        log.warning("%s: skipped %d malformed lexicon lines", path, skipped)
    return LexiconTable(entries=entries, default_unknown=default_unknown)


def load_frequencies(path: str) -> dict[str, int]:
    """Read a token<TAB>count TSV (counts >= 0)."""
    freqs: dict[str, int] = {}
    skipped = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                skipped += 1
                continue
            try:
                count = int(parts[1])
            except ValueError:
                skipped += 1
                continue
            if count < 0:
                skipped += 1
                continue
            freqs[parts[0].lower()] = count
    if skipped:
        log.warning("%s: skipped %d malformed frequency lines", path, skipped)
    return freqs


def frequency_score(token: str, freqs: Mapping[str, int], f_max: int) -> float:
    """Complexity from corpus frequency: 1 - log(1+f)/log(1+f_max).

    The most frequent token scores 0, an unseen token scores 1. Requires
    f_max >= 1 and f_max >= every stored count.
    """
    if f_max < 1:
        raise ValueError("f_max must be >= 1")
    f = freqs.get(token.lower(), 0)
    value = 1.0 - math.log1p(f) / math.log1p(f_max)
    return min(1.0, max(0.0, value))


class TokenScorer:
    """Scorer whose span value is the max over per-token values.

    Subclasses implement token_score(); token_scores() vectorizes over a
    sentence and feeds the fused corruption kernel.
    """

    def token_score(self, token: str) -> float:
        raise NotImplementedError

    def token_scores(self, tokens: Sequence[str]) -> np.ndarray:
        out = np.empty(len(tokens), dtype=np.float64)
        for i, token in enumerate(tokens):
            out[i] = self.token_score(token)
        return out

    def score_span(self, record: SentenceRecord, span: SpanRef) -> float:
        validate_span(span, len(record.tokens))
        return max(self.token_score(t) for t in record.tokens[span.start:span.stop])


class LexiconScorer(TokenScorer):
    def __init__(self, table: LexiconTable):
        self.table = table

    def token_score(self, token: str) -> float:
        return self.table.lookup(token)


class FrequencyScorer(TokenScorer):
    def __init__(self, freqs: Mapping[str, int], f_max: int | None = None):
        if f_max is None:
            f_max = max(freqs.values(), default=1)
        if f_max < 1 or any(count > f_max for count in freqs.values()):
            raise ValueError("f_max must be >= 1 and >= every stored count")
        self.freqs = dict(freqs)
        self.f_max = f_max

    def token_score(self, token: str) -> float:
        return frequency_score(token, self.freqs, self.f_max)


class ExternalScorer:
    """Span scorer backed by the wire-protocol client. Sends the full
    sentence text plus token offsets so the server may use context."""

    def __init__(self, client: "ExternalScorerClient"):
        self.client = client

    def score_span(self, record: SentenceRecord, span: SpanRef) -> float:
        return self.score_spans(record, [span])[0]

    def score_spans(self, record: SentenceRecord, spans: Sequence[SpanRef]) -> list[float]:
        for span in spans:
            validate_span(span, len(record.tokens))
        items = [(record.text, (span.start, span.length)) for span in spans]
        return self.client.score_complexity(items)


def lexicon_score(record: SentenceRecord, span: SpanRef, table: LexiconTable) -> float:
    """Max of per-token lexicon lookups over the span."""
    validate_span(span, len(record.tokens))
    return max(table.lookup(t) for t in record.tokens[span.start:span.stop])


def score_span(record: SentenceRecord, span: SpanRef, scorer) -> float:
    """Score one span with any scorer; validates bounds first."""
    validate_span(span, len(record.tokens))
    return scorer.score_span(record, span)
