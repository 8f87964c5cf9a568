"""Complexity-driven span masking.

A sentence is partitioned left to right into spans whose lengths follow
Poisson(span_lambda) conditioned on >= 1. Each span gets a complexity score
c and a mask probability:

    simple mode:   m = max_mask_prob * (1 - c / T)        for c <= T, else 0
    complex mode:  m = max_mask_prob * (c - T) / (1 - T)  for c > T,  else 0

and is then Bernoulli-masked with probability m. A masked span becomes one
mask token regardless of its width, so reconstruction has to predict span
length too.

Draw order is part of the output contract: all span lengths first (for
forced spans, only the gaps consume draws), then exactly one uniform per
candidate span, consumed even when m is zero. Token-level scorers run
through the compiled kernel backend; span-level scorers (e.g. the external
model client) take a pure-Python path that replays the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .records import SentenceRecord, SpanRef
from .rng import MASK64, RecordStream
from .scoring import TokenScorer

MODE_SIMPLE = "simple"
MODE_COMPLEX = "complex"

STRATEGY_MASK = "mask"
STRATEGY_SUBSTITUTE = "substitute"


@dataclass(frozen=True)
class MaskingPolicy:
    threshold: float = 0.25
    max_mask_prob: float = 0.15
    span_lambda: float = 3.0
    mode: str = MODE_SIMPLE
    mask_token: str = "<mask>"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 <= self.max_mask_prob <= 1.0:
            raise ValueError(f"max_mask_prob must be in [0, 1], got {self.max_mask_prob}")
        if not self.span_lambda > 0.0:
            raise ValueError(f"span_lambda must be positive, got {self.span_lambda}")
        if self.mode not in (MODE_SIMPLE, MODE_COMPLEX):
            raise ValueError(f"mode must be {MODE_SIMPLE!r} or {MODE_COMPLEX!r}, got {self.mode!r}")
        if not self.mask_token:
            raise ValueError("mask_token must be non-empty")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class MaskDecision:
    """One candidate span and what happened to it."""

    span: SpanRef
    complexity: float
    probability: float
    masked: bool


@dataclass(frozen=True)
class ReplaceOp:
    """A phrase substitution already applied to the target, in target
    token coordinates."""

    start: int
    length: int
    inserted: str


@dataclass(frozen=True)
class CorruptionPair:
    """(corrupted source, clean target) plus the full decision log.

    Dropping mask tokens from source leaves a subsequence of target; every
    masked decision accounts for exactly one mask token.
    """

    record_id: int
    source: tuple[str, ...]
    target: tuple[str, ...]
    decisions: tuple[MaskDecision, ...]
    strategy: str = STRATEGY_MASK
    mask_token: str = "<mask>"
    replace_ops: tuple[ReplaceOp, ...] = ()

    @property
    def masked_count(self) -> int:
        return sum(1 for d in self.decisions if d.masked)

    @property
    def is_noop(self) -> bool:
        return self.source == self.target


def mask_probability(c: float, policy: MaskingPolicy) -> float:
    """Eq.-style linear ramp; see module docstring. c must be in [0, 1]."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"complexity must be in [0, 1], got {c}")
    # Keep these expressions textually identical to the kernel backends.
    if policy.mode == MODE_COMPLEX:
        if c > policy.threshold:
            return policy.max_mask_prob * (c - policy.threshold) / (1.0 - policy.threshold)
        return 0.0
    if c <= policy.threshold:
        return policy.max_mask_prob * (1.0 - c / policy.threshold)
    return 0.0


def partition_spans(token_count: int, span_lambda: float, rng: RecordStream) -> list[SpanRef]:
    """Disjoint contiguous spans covering [0, token_count) exactly."""
    if token_count < 0:
        raise ValueError("token_count must be >= 0")
    spans: list[SpanRef] = []
    pos = 0
    while pos < token_count:
        length = rng.span_length(span_lambda, token_count - pos)
        spans.append(SpanRef(pos, length))
        pos += length
    return spans


def _check_forced(forced: Sequence[SpanRef], token_count: int) -> list[SpanRef]:
    ordered = sorted(forced, key=lambda s: s.start)
    prev_stop = 0
    for span in ordered:
        if span.start < prev_stop:
            raise ValueError(f"forced spans overlap at token {span.start}")
        if span.stop > token_count:
            raise ValueError(f"forced span {span} exceeds {token_count} tokens")
        prev_stop = span.stop
    return ordered


def _partition_with_forced(
    token_count: int, forced: list[SpanRef], span_lambda: float, rng: RecordStream
) -> list[SpanRef]:
    # Mirrors the span loop in kernels; only gap lengths consume draws.
    spans: list[SpanRef] = []
    pos = 0
    fi = 0
    while pos < token_count:
        if fi < len(forced) and forced[fi].start == pos:
            length = forced[fi].length
            fi += 1
        else:
            gap_end = forced[fi].start if fi < len(forced) else token_count
            length = rng.span_length(span_lambda, gap_end - pos)
        spans.append(SpanRef(pos, length))
        pos += length
    return spans


def _score_spans(record: SentenceRecord, spans: list[SpanRef], scorer) -> list[float]:
    batched = getattr(scorer, "score_spans", None)
    if batched is not None:
        return [float(v) for v in batched(record, spans)]
    return [float(scorer.score_span(record, span)) for span in spans]


def _build_source(
    tokens: tuple[str, ...], decisions: Sequence[MaskDecision], mask_token: str
) -> tuple[str, ...]:
    out: list[str] = []
    for d in decisions:
        if d.masked:
            out.append(mask_token)
        else:
            out.extend(tokens[d.span.start : d.span.stop])
    return tuple(out)


def corrupt_with_forced_spans(
    record: SentenceRecord,
    forced: Sequence[SpanRef],
    scorer,
    policy: MaskingPolicy,
    rng: RecordStream | None = None,
) -> CorruptionPair:
    """Corrupt one record, keeping each forced span intact as a candidate.

    With forced=[] this is plain corruption. rng defaults to the record's
    own stream derived from (policy.seed, record.id).
    """
    if not record.tokens:
        raise ValueError("record must have at least one token")
    n = len(record.tokens)
    ordered = _check_forced(forced, n)
    if rng is None:
        rng = RecordStream.for_record(policy.seed, record.id)
    complex_mode = policy.mode == MODE_COMPLEX

    if isinstance(scorer, TokenScorer):
        scores = np.ascontiguousarray(scorer.token_scores(record.tokens), dtype=np.float64)
        if scores.shape != (n,):
            raise ValueError(f"scorer returned {scores.shape}, expected ({n},)")
        forced_arr = np.array(
            [[s.start, s.length] for s in ordered], dtype=np.int64
        ).reshape(len(ordered), 2)
        span_arr, comps, probs, flags, state = kernels.corrupt_plan(
            scores,
            forced_arr,
            policy.threshold,
            policy.max_mask_prob,
            policy.span_lambda,
            complex_mode,
            rng.state,
        )
        rng.state = int(state) & MASK64
        decisions = tuple(
            MaskDecision(
                span=SpanRef(int(span_arr[i, 0]), int(span_arr[i, 1])),
                complexity=float(comps[i]),
                probability=float(probs[i]),
                masked=bool(flags[i]),
            )
            for i in range(span_arr.shape[0])
        )
    else:
        spans = _partition_with_forced(n, ordered, policy.span_lambda, rng)
        comps = _score_spans(record, spans, scorer)
        built: list[MaskDecision] = []
        for span, c in zip(spans, comps):
            prob = mask_probability(c, policy)
            u = rng.uniform()
            built.append(MaskDecision(span=span, complexity=c, probability=prob, masked=u < prob))
        decisions = tuple(built)

    return CorruptionPair(
        record_id=record.id,
        source=_build_source(record.tokens, decisions, policy.mask_token),
        target=record.tokens,
        decisions=decisions,
        mask_token=policy.mask_token,
    )


def corrupt(
    record: SentenceRecord,
    scorer,
    policy: MaskingPolicy,
    rng: RecordStream | None = None,
) -> CorruptionPair:
    """Corrupt one record with a fresh Poisson partition over all tokens."""
    return corrupt_with_forced_spans(record, (), scorer, policy, rng)
