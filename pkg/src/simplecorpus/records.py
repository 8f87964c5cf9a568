"""Core data types shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Iterable


def whitespace_normalize(text: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return " ".join(text.split())


def exclusion_key(text: str) -> str:
    """Normal form used for leakage matching: lowercased, whitespace-collapsed."""
    return whitespace_normalize(text).lower()


@dataclass(frozen=True)
class SentenceRecord:
    """One unit of corpus text. Tokens are whitespace-split words with
    punctuation left attached; rejoining them with single spaces gives the
    whitespace-normalized text."""

    id: int
    text: str
    tokens: tuple[str, ...]
    source_tag: str = ""

    @classmethod
    def from_text(cls, id: int, text: str, source_tag: str = "") -> "SentenceRecord":
        return cls(id=id, text=text, tokens=tuple(text.split()), source_tag=source_tag)


@dataclass(frozen=True)
class SpanRef:
    """Half-open token span [start, start+length) within one sentence."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0 or self.length < 1:
            raise ValueError(f"invalid span ({self.start}, {self.length})")

    @property
    def stop(self) -> int:
        return self.start + self.length


def validate_span(span: SpanRef, token_count: int) -> None:
    if span.stop > token_count:
        raise ValueError(
            f"span ({span.start}, {span.length}) out of bounds for {token_count} tokens"
        )


class ExclusionSet:
    """Normalized held-out texts that must never appear as a training target.

    Immutable after construction; safe to share across workers.
    """

    def __init__(self, entries: Iterable[str] = ()):
        self._entries = frozenset(exclusion_key(t) for t in entries)

    @property
    def count(self) -> int:
        return len(self._entries)

    def contains_text(self, text: str) -> bool:
        return exclusion_key(text) in self._entries

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class RunSummary:
    """Counters for one prepare run. The identity

        read == emitted + excluded + discarded_by_similarity + no_op + skipped_errors

    holds over records that were successfully parsed."""

    read: int = 0
    emitted: int = 0
    excluded: int = 0
    discarded_by_similarity: int = 0
    no_op: int = 0
    skipped_errors: int = 0
    parse_errors: int = 0
    emitted_mask: int = 0
    emitted_substitute: int = 0
    masked_token_fraction: float = 0.0
    similarity_backend: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def merge(self, other: "RunSummary") -> None:
        """Fold another summary's counters into this one (fractions excluded;
        write_pairs recomputes those over the full stream)."""
        self.read += other.read
        self.emitted += other.emitted
        self.excluded += other.excluded
        self.discarded_by_similarity += other.discarded_by_similarity
        self.no_op += other.no_op
        self.skipped_errors += other.skipped_errors
        self.parse_errors += other.parse_errors
        self.emitted_mask += other.emitted_mask
        self.emitted_substitute += other.emitted_substitute
