"""Corpus ingestion, the test-set leakage guard, and pair output.

Input formats: plain (one sentence per line) and jsonl (one object per line
with a "text" field). Output is one JSON object per corruption pair per
line, plus a <output>.summary.json sidecar with the run counters.
"""

from __future__ import annotations

import json
import logging
import os
from typing import TYPE_CHECKING, Iterable, Iterator

from .errors import CorpusIOError
from .records import ExclusionSet, RunSummary, SentenceRecord

if TYPE_CHECKING:
    from .masking import CorruptionPair

log = logging.getLogger(__name__)

FORMAT_PLAIN = "plain"
FORMAT_JSONL = "jsonl"


def detect_format(path: str) -> str:
    return FORMAT_JSONL if path.endswith((".jsonl", ".ndjson")) else FORMAT_PLAIN


def read_corpus(
    path: str,
    format: str = FORMAT_PLAIN,
    *,
    source_tag: str = "",
    start_id: int = 0,
    summary: RunSummary | None = None,
) -> Iterator[SentenceRecord]:
    """Yield records in file order with sequential ids starting at start_id.

    Blank lines are skipped. Malformed jsonl lines are logged with their
    line number, counted in the summary, and do not stop the run. An
    unreadable file is fatal.
    """
    if format not in (FORMAT_PLAIN, FORMAT_JSONL):
        raise CorpusIOError(f"unknown corpus format: {format!r}")
    tag = source_tag or os.path.basename(path)
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot read corpus {path}: {exc}") from exc

    def _records() -> Iterator[SentenceRecord]:
        next_id = start_id
        with handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                if format == FORMAT_PLAIN:
                    text = line.rstrip("\n")
                else:
                    try:
                        obj = json.loads(line)
                        text = obj["text"]
                        if not isinstance(text, str):
                            raise TypeError("'text' is not a string")
                    except (json.JSONDecodeError, KeyError, TypeError) as exc:
                        log.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                        if summary is not None:
                            summary.parse_errors += 1
                        continue
                record = SentenceRecord.from_text(next_id, text, source_tag=tag)
                if not record.tokens:
                    continue
                yield record
                next_id += 1

    return _records()


def load_exclusion(paths: Iterable[str]) -> ExclusionSet:
    """Build the leakage guard from held-out corpora.

    A missing file is fatal: silently proceeding with an empty guard would
    leak test data into training pairs.
    """
    entries: list[str] = []
    for path in paths:
        fmt = detect_format(path)
        try:
            with open(path, "r", encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    if fmt == FORMAT_JSONL:
                        try:
                            text = json.loads(line)["text"]
                        except (json.JSONDecodeError, KeyError, TypeError):
                            continue
                        if not isinstance(text, str):
                            continue
                    else:
                        text = line
                    entries.append(text)
        except OSError as exc:
            raise CorpusIOError(f"cannot read exclusion file {path}: {exc}") from exc
    return ExclusionSet(entries)


def is_excluded(record: SentenceRecord, exclusion: ExclusionSet) -> bool:
    return exclusion.contains_text(record.text)


def pair_to_dict(pair: "CorruptionPair") -> dict:
    """JSON-ready form of one pair. Span offsets are token indices into the
    target sentence."""
    ops = [
        {"kind": "replace", "start": op.start, "len": op.length, "inserted": op.inserted}
        for op in pair.replace_ops
    ]
    ops.extend(
        {
            "kind": "mask",
            "start": d.span.start,
            "len": d.span.length,
            "inserted": pair.mask_token,
        }
        for d in pair.decisions
        if d.masked
    )
    return {
        "id": pair.record_id,
        "source": " ".join(pair.source),
        "target": " ".join(pair.target),
        "strategy": pair.strategy,
        "ops": ops,
        "c_values": [d.complexity for d in pair.decisions],
    }


def write_pairs(
    pairs: Iterable["CorruptionPair"],
    path: str,
    summary: RunSummary | None = None,
) -> RunSummary:
    """Write pairs as JSONL and the counter sidecar to <path>.summary.json.

    Counts emitted pairs and the masked-token fraction over all targets.
    On a write failure the sidecar still gets written (best effort) with a
    "partial" marker before the fatal error propagates.
    """
    if summary is None:
        summary = RunSummary()
    sidecar = path + ".summary.json"
    masked_tokens = 0
    total_tokens = 0
    try:
        with open(path, "w", encoding="utf-8") as out:
            for pair in pairs:
                out.write(json.dumps(pair_to_dict(pair), ensure_ascii=False))
                out.write("\n")
                summary.emitted += 1
                if pair.strategy == "substitute":
                    summary.emitted_substitute += 1
                else:
                    summary.emitted_mask += 1
                total_tokens += len(pair.target)
                masked_tokens += sum(d.span.length for d in pair.decisions if d.masked)
    except OSError as exc:
        _write_summary(sidecar, summary, partial=str(exc))
        raise CorpusIOError(f"write failed for {path}: {exc}") from exc

    summary.masked_token_fraction = masked_tokens / total_tokens if total_tokens else 0.0
    _write_summary(sidecar, summary)
    return summary


def _write_summary(sidecar: str, summary: RunSummary, partial: str | None = None) -> None:
    payload = summary.to_dict()
    if partial is not None:
        payload["partial"] = True
        payload["error"] = partial
    try:
        with open(sidecar, "w", encoding="utf-8") as out:
            json.dump(payload, out, indent=2, sort_keys=True)
            out.write("\n")
    except OSError:
        if partial is None:
            raise CorpusIOError(f"cannot write summary sidecar {sidecar}")
        log.error("could not write summary sidecar %s", sidecar)
