"""Paraphrase substitution with a similarity gate.

Complex phrases in ordinary text are rewritten via a rule table
(complex phrase -> simple phrase, scored by readability). If the rewritten
sentence stays close enough to the original it is handed to the masker,
with each inserted simple phrase as a forced candidate span so the model
has to reconstruct exactly those words. The pair's target is the REPLACED
sentence; the reconstruction objective points at the simple wording.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .masking import (
    STRATEGY_SUBSTITUTE,
    CorruptionPair,
    MaskingPolicy,
    ReplaceOp,
    corrupt_with_forced_spans,
)
from .records import SentenceRecord, SpanRef
from .rng import RecordStream

log = logging.getLogger(__name__)

BACKEND_BUILTIN = "builtin"
BACKEND_EXTERNAL = "external"

# strategy_b outcome labels; the pipeline counts them as-is
STATUS_EMITTED = "emitted"
STATUS_NO_OP = "no_op"
STATUS_DISCARDED = "discarded_by_similarity"


@dataclass(frozen=True)
class ParaphraseRule:
    complex_phrase: tuple[str, ...]
    simple_phrase: tuple[str, ...]
    readability: float

    def __post_init__(self):
        if not self.complex_phrase or not self.simple_phrase:
            raise ValueError("rule phrases must have at least one token")
        if self.complex_phrase == self.simple_phrase:
            raise ValueError("rule must change the phrase")


@dataclass
class RuleTable:
    """Best rule per lowercased complex phrase.

    "Best" means highest readability, ties broken by lexicographically
    smaller simple phrase, so rebuilding the table from the same file in
    any line order gives the same result.
    """

    rules: dict[str, ParaphraseRule] = field(default_factory=dict)
    max_phrase_len: int = 0

    def __len__(self) -> int:
        return len(self.rules)

    def lookup(self, phrase_key: str) -> ParaphraseRule | None:
        return self.rules.get(phrase_key)

    def add(self, rule: ParaphraseRule) -> None:
        key = " ".join(rule.complex_phrase).lower()
        held = self.rules.get(key)
        if held is None or _beats(rule, held):
            self.rules[key] = rule
            if len(rule.complex_phrase) > self.max_phrase_len:
                self.max_phrase_len = len(rule.complex_phrase)


def _beats(challenger: ParaphraseRule, held: ParaphraseRule) -> bool:
    if challenger.readability != held.readability:
        return challenger.readability > held.readability
    return " ".join(challenger.simple_phrase) < " ".join(held.simple_phrase)


def load_rules(path: str, min_readability: float = -math.inf) -> RuleTable:
    """Read complex<TAB>simple<TAB>readability TSV into a RuleTable.

    '#' lines are comments. Malformed lines (field count, non-numeric or
    NaN readability, empty phrase, identity rewrite) are skipped with one
    counted warning; rules below min_readability are silently dropped.
    """
    table = RuleTable()
    skipped = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                skipped += 1
                continue
            complex_phrase = tuple(parts[0].split())
            simple_phrase = tuple(parts[1].split())
            try:
                readability = float(parts[2])
            except ValueError:
                skipped += 1
                continue
            if (
                math.isnan(readability)
                or not complex_phrase
                or not simple_phrase
                or complex_phrase == simple_phrase
            ):
                skipped += 1
                continue
            if readability < min_readability:
                continue
            table.add(ParaphraseRule(complex_phrase, simple_phrase, readability))
    if skipped:
        log.warning("%s: skipped %d malformed rule lines", path, skipped)
    return table


@dataclass(frozen=True)
class Replacement:
    """One applied rewrite: where it was in the original sentence and
    where the simple phrase landed in the replaced one."""

    original_span: SpanRef
    inserted_span: SpanRef
    rule: ParaphraseRule


@dataclass(frozen=True)
class SubstitutionPolicy:
    similarity_threshold: float = 0.95
    min_readability: float = -math.inf
    similarity_backend: str = BACKEND_BUILTIN

    def __post_init__(self):
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError(
                f"similarity_threshold must be in [0, 1], got {self.similarity_threshold}"
            )
        if self.similarity_backend not in (BACKEND_BUILTIN, BACKEND_EXTERNAL):
            raise ValueError(f"unknown similarity backend {self.similarity_backend!r}")


def match_rules(record: SentenceRecord, table: RuleTable) -> list[tuple[SpanRef, ParaphraseRule]]:
    """Greedy left-to-right, longest-match-first, case-insensitive scan.

    Matches never overlap: on a hit the scan jumps past the matched span.
    """
    if not table.rules:
        return []
    tokens = record.tokens
    n = len(tokens)
    matches: list[tuple[SpanRef, ParaphraseRule]] = []
    i = 0
    while i < n:
        hit = None
        for length in range(min(table.max_phrase_len, n - i), 0, -1):
            key = " ".join(tokens[i : i + length]).lower()
            rule = table.lookup(key)
            if rule is not None:
                hit = (SpanRef(i, length), rule)
                break
        if hit is None:
            i += 1
        else:
            matches.append(hit)
            i += hit[0].length
    return matches


def substitute(
    record: SentenceRecord, table: RuleTable
) -> tuple[SentenceRecord, list[Replacement]]:
    """Rewrite every match; returns the new sentence plus offset bookkeeping.

    If the sentence-initial token is replaced and was capitalized, the
    first inserted token is re-capitalized to keep the sentence shape.
    """
    matches = match_rules(record, table)
    if not matches:
        return record, []
    out: list[str] = []
    replacements: list[Replacement] = []
    prev = 0
    for span, rule in matches:
        out.extend(record.tokens[prev : span.start])
        inserted = list(rule.simple_phrase)
        if span.start == 0 and record.tokens[0][:1].isupper():
            inserted[0] = inserted[0][:1].upper() + inserted[0][1:]
        new_span = SpanRef(len(out), len(inserted))
        out.extend(inserted)
        replacements.append(Replacement(original_span=span, inserted_span=new_span, rule=rule))
        prev = span.stop
    out.extend(record.tokens[prev:])
    replaced = SentenceRecord(
        id=record.id, text=" ".join(out), tokens=tuple(out), source_tag=record.source_tag
    )
    return replaced, replacements


def token_f1(a: Sequence[str], b: Sequence[str]) -> float:
    """Multiset token F1 of b against a.

    Computed in the collapsed form 2*|a & b| / (|a| + |b|), which equals
    2PR/(P+R) exactly but keeps boundary cases like a one-token edit in a
    20-token sentence landing exactly on 0.95.
    """
    if not a or not b:
        raise ValueError("token_f1 needs non-empty token sequences")
    inter = sum((Counter(a) & Counter(b)).values())
    if inter == 0:
        return 0.0
    return 2.0 * inter / (len(a) + len(b))


def similarity(a: SentenceRecord, b: SentenceRecord, backend=None) -> float:
    """Sentence similarity in [0, 1]; backend=None uses the builtin token-F1
    proxy, otherwise the wire-protocol client's similarity scorer."""
    if not a.tokens or not b.tokens:
        raise ValueError("similarity needs non-empty sentences")
    if backend is None:
        return token_f1(a.tokens, b.tokens)
    return float(backend.score_similarity([(a.text, b.text)])[0])


def strategy_b(
    record: SentenceRecord,
    table: RuleTable,
    policy: SubstitutionPolicy,
    masking_policy: MaskingPolicy,
    scorer,
    rng: RecordStream | None = None,
    similarity_client=None,
) -> tuple[CorruptionPair | None, str]:
    """Substitute, gate on similarity, then mask with forced spans.

    Returns (pair, STATUS_EMITTED) on success, else (None, STATUS_NO_OP)
    when no rule fired or (None, STATUS_DISCARDED) when the rewrite drifted
    below the similarity threshold.
    """
    replaced, replacements = substitute(record, table)
    if not replacements:
        return None, STATUS_NO_OP

    backend = None
    if policy.similarity_backend == BACKEND_EXTERNAL:
        if similarity_client is None:
            raise ValueError("external similarity backend requires a client")
        backend = similarity_client
    if similarity(record, replaced, backend) < policy.similarity_threshold:
        return None, STATUS_DISCARDED

    forced = [r.inserted_span for r in replacements]
    pair = corrupt_with_forced_spans(replaced, forced, scorer, masking_policy, rng)
    ops = tuple(
        ReplaceOp(
            start=r.inserted_span.start,
            length=r.inserted_span.length,
            inserted=" ".join(replaced.tokens[r.inserted_span.start : r.inserted_span.stop]),
        )
        for r in replacements
    )
    return dataclasses.replace(pair, strategy=STRATEGY_SUBSTITUTE, replace_ops=ops), STATUS_EMITTED
