"""Corpus corruption toolkit for simplification pre-training.

Builds (corrupted, original) training pairs two ways: complexity-driven
span masking of simple text, and paraphrase substitution in ordinary text
gated by sentence similarity. Ships SARI and document-level SARI for
evaluation, plus a wire-protocol client for out-of-process neural scorers.
"""

from .client import ExternalScorerClient
from .errors import (
    CorpusIOError,
    ScorerError,
    ScorerProtocolError,
    ScorerRecordError,
    ScorerTimeoutError,
    SimpleCorpusError,
    UsageError,
)
from .masking import (
    CorruptionPair,
    MaskDecision,
    MaskingPolicy,
    ReplaceOp,
    corrupt,
    corrupt_with_forced_spans,
    mask_probability,
    partition_spans,
)
from .metrics import DSariResult, SariResult, dsari, extract_ngrams, sari
from .pipeline import PipelineConfig, run_eval, run_prepare
from .records import ExclusionSet, RunSummary, SentenceRecord, SpanRef
from .rng import RecordStream
from .scoring import (
    ExternalScorer,
    FrequencyScorer,
    LexiconScorer,
    LexiconTable,
    frequency_score,
    lexicon_score,
    load_frequencies,
    load_lexicon,
    score_span,
)
from .substitution import (
    ParaphraseRule,
    Replacement,
    RuleTable,
    SubstitutionPolicy,
    load_rules,
    match_rules,
    similarity,
    strategy_b,
    substitute,
    token_f1,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusIOError",
    "CorruptionPair",
    "DSariResult",
    "ExclusionSet",
    "ExternalScorer",
    "ExternalScorerClient",
    "FrequencyScorer",
    "LexiconScorer",
    "LexiconTable",
    "MaskDecision",
    "MaskingPolicy",
    "ParaphraseRule",
    "PipelineConfig",
    "RecordStream",
    "ReplaceOp",
    "Replacement",
    "RuleTable",
    "RunSummary",
    "SariResult",
    "ScorerError",
    "ScorerProtocolError",
    "ScorerRecordError",
    "ScorerTimeoutError",
    "SentenceRecord",
    "SimpleCorpusError",
    "SpanRef",
    "SubstitutionPolicy",
    "UsageError",
    "corrupt",
    "corrupt_with_forced_spans",
    "dsari",
    "extract_ngrams",
    "frequency_score",
    "lexicon_score",
    "load_frequencies",
    "load_lexicon",
    "load_rules",
    "mask_probability",
    "match_rules",
    "partition_spans",
    "run_eval",
    "run_prepare",
    "sari",
    "score_span",
    "similarity",
    "strategy_b",
    "substitute",
    "token_f1",
]
