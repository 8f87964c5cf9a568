"""End-to-end orchestration for `prepare` and `eval`.

Routing is by corpus identity: records from the simple corpus are masked
directly, records from the ordinary corpus go through substitution plus
the similarity gate first. Record ids are assigned sequentially over every
configured corpus (simple first), and each record's random stream derives
from (seed, id), so the output is byte-identical for any shard count and
ablation modes stay id-compatible with a both-mode run over the same
files.

Workers process contiguous id ranges and share only immutable tables plus
the scorer client; emitted pairs are merged and sorted by id before
writing, which makes canonical order a property of the data, not the
schedule.
"""

from __future__ import annotations

import json
import logging
import math
import shlex
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .client import DEFAULT_RETRIES, DEFAULT_TIMEOUT, ExternalScorerClient
from .corpus_io import detect_format, is_excluded, load_exclusion, read_corpus, write_pairs
from .errors import CorpusIOError, ScorerRecordError, UsageError
from .masking import CorruptionPair, MaskingPolicy, corrupt
from .metrics import dsari, sari
from .records import ExclusionSet, RunSummary, SentenceRecord
from .scoring import ExternalScorer, FrequencyScorer, LexiconScorer, load_frequencies, load_lexicon
from .substitution import (
    BACKEND_EXTERNAL,
    STATUS_DISCARDED,
    STATUS_NO_OP,
    RuleTable,
    SubstitutionPolicy,
    load_rules,
    strategy_b,
)

log = logging.getLogger(__name__)

ABLATION_BOTH = "both"
ABLATION_MASK_ONLY = "mask-only"
ABLATION_SUBSTITUTE_ONLY = "substitute-only"
ABLATIONS = (ABLATION_BOTH, ABLATION_MASK_ONLY, ABLATION_SUBSTITUTE_ONLY)

SCORER_LEXICON = "lexicon"
SCORER_FREQUENCY = "frequency"
SCORER_EXTERNAL = "external"
SCORER_KINDS = (SCORER_LEXICON, SCORER_FREQUENCY, SCORER_EXTERNAL)

TAG_SIMPLE = "simple"
TAG_ORDINARY = "ordinary"

METRIC_SARI = "sari"
METRIC_DSARI = "dsari"


@dataclass
class PipelineConfig:
    simple_corpus: str | None = None
    ordinary_corpus: str | None = None
    exclusion_paths: tuple[str, ...] = ()
    masking: MaskingPolicy = field(default_factory=MaskingPolicy)
    substitution: SubstitutionPolicy = field(default_factory=SubstitutionPolicy)
    rules_path: str | None = None
    scorer_kind: str = SCORER_LEXICON
    lexicon_path: str | None = None
    frequency_path: str | None = None
    scorer_addr: str | None = None
    scorer_timeout: float = DEFAULT_TIMEOUT
    scorer_retries: int = DEFAULT_RETRIES
    output: str = "pairs.jsonl"
    shards: int = 1
    ablation: str = ABLATION_BOTH
    progress_every: int = 1000

    def substitution_active(self) -> bool:
        return self.ordinary_corpus is not None and self.ablation != ABLATION_MASK_ONLY

    def validate(self) -> None:
        if self.shards < 1:
            raise UsageError(f"shards must be >= 1, got {self.shards}")
        if self.progress_every < 1:
            raise UsageError(f"progress_every must be >= 1, got {self.progress_every}")
        if self.ablation not in ABLATIONS:
            raise UsageError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.scorer_kind not in SCORER_KINDS:
            raise UsageError(f"scorer must be one of {SCORER_KINDS}, got {self.scorer_kind!r}")
        if not self.simple_corpus and not self.ordinary_corpus:
            raise UsageError("need simple_corpus and/or ordinary_corpus")
        if self.ablation == ABLATION_MASK_ONLY and not self.simple_corpus:
            raise UsageError("ablation mask-only requires simple_corpus")
        if self.ablation == ABLATION_SUBSTITUTE_ONLY and not self.ordinary_corpus:
            raise UsageError("ablation substitute-only requires ordinary_corpus")
        if self.substitution_active() and not self.rules_path:
            raise UsageError("substitution needs rules_path (--rules)")
        if self.scorer_kind == SCORER_LEXICON and not self.lexicon_path:
            raise UsageError("scorer 'lexicon' needs lexicon_path (--lexicon)")
        if self.scorer_kind == SCORER_FREQUENCY and not self.frequency_path:
            raise UsageError("scorer 'frequency' needs frequency_path (--frequencies)")
        needs_addr = self.scorer_kind == SCORER_EXTERNAL or (
            self.substitution_active()
            and self.substitution.similarity_backend == BACKEND_EXTERNAL
        )
        if needs_addr and not self.scorer_addr:
            raise UsageError("external scoring needs scorer_addr (--scorer-addr)")
        if not self.output:
            raise UsageError("output path must be set")


def _as_host_port(addr: str) -> tuple[str, int] | None:
    if " " in addr.strip():
        return None
    host, sep, port = addr.rpartition(":")
    if sep and host and port.isdigit():
        return host, int(port)
    return None


def open_scorer_client(config: PipelineConfig) -> ExternalScorerClient:
    """scorer_addr is either host:port (TCP) or a command line to spawn."""
    addr = config.scorer_addr
    assert addr
    host_port = _as_host_port(addr)
    if host_port is not None:
        return ExternalScorerClient.connect(
            host_port[0],
            host_port[1],
            timeout=config.scorer_timeout,
            max_retries=config.scorer_retries,
        )
    return ExternalScorerClient.spawn(
        shlex.split(addr), timeout=config.scorer_timeout, max_retries=config.scorer_retries
    )


def _build_scorer(config: PipelineConfig, client: ExternalScorerClient | None):
    if config.scorer_kind == SCORER_LEXICON:
        return LexiconScorer(load_lexicon(config.lexicon_path))
    if config.scorer_kind == SCORER_FREQUENCY:
        return FrequencyScorer(load_frequencies(config.frequency_path))
    assert client is not None
    return ExternalScorer(client)


class _Progress:
    """Thread-safe counter that emits one-line JSON stats to stderr."""

    def __init__(self, total: int, every: int, stream=None):
        self.total = total
        self.every = max(1, every)
        self.stream = stream
        self.count = 0
        self.start = time.monotonic()
        self._lock = threading.Lock()

    def step(self) -> None:
        with self._lock:
            self.count += 1
            if self.count % self.every and self.count != self.total:
                return
            elapsed = time.monotonic() - self.start
            line = json.dumps(
                {
                    "event": "progress",
                    "processed": self.count,
                    "total": self.total,
                    "elapsed_s": round(elapsed, 3),
                    "records_per_s": round(self.count / elapsed, 1) if elapsed > 0 else None,
                }
            )
            print(line, file=self.stream or sys.stderr, flush=True)


def _process_chunk(
    records: Sequence[SentenceRecord],
    config: PipelineConfig,
    scorer,
    table: RuleTable | None,
    exclusion: ExclusionSet | None,
    sim_client: ExternalScorerClient | None,
    summary: RunSummary,
    progress: _Progress,
) -> list[CorruptionPair]:
    pairs: list[CorruptionPair] = []
    for record in records:
        try:
            if exclusion is not None and is_excluded(record, exclusion):
                summary.excluded += 1
                continue
            if record.source_tag == TAG_ORDINARY:
                pair, status = strategy_b(
                    record,
                    table,
                    config.substitution,
                    config.masking,
                    scorer,
                    similarity_client=sim_client,
                )
                if status == STATUS_NO_OP:
                    summary.no_op += 1
                elif status == STATUS_DISCARDED:
                    summary.discarded_by_similarity += 1
                elif exclusion is not None and exclusion.contains_text(" ".join(pair.target)):
                    # substitution can rewrite a sentence INTO a held-out one
                    summary.excluded += 1
                else:
                    pairs.append(pair)
            else:
                pairs.append(corrupt(record, scorer, config.masking))
        except ScorerRecordError as exc:
            log.warning("record %d skipped: %s", record.id, exc)
            summary.skipped_errors += 1
        finally:
            progress.step()
    return pairs


def _chunks(records: list[SentenceRecord], shards: int) -> list[list[SentenceRecord]]:
    if not records:
        return []
    per = math.ceil(len(records) / shards)
    return [records[i : i + per] for i in range(0, len(records), per)]


def run_prepare(config: PipelineConfig, progress_stream=None) -> RunSummary:
    config.validate()
    summary = RunSummary(similarity_backend=config.substitution.similarity_backend)
    client: ExternalScorerClient | None = None
    try:
        needs_client = config.scorer_kind == SCORER_EXTERNAL or (
            config.substitution_active()
            and config.substitution.similarity_backend == BACKEND_EXTERNAL
        )
        if needs_client:
            client = open_scorer_client(config)
        try:
            scorer = _build_scorer(config, client)
            table = (
                load_rules(config.rules_path, config.substitution.min_readability)
                if config.substitution_active()
                else None
            )
        except OSError as exc:
            raise CorpusIOError(str(exc)) from exc
        exclusion = load_exclusion(config.exclusion_paths) if config.exclusion_paths else None
        sim_client = (
            client if config.substitution.similarity_backend == BACKEND_EXTERNAL else None
        )

        # ids run over every configured corpus so that ablation modes and
        # shard counts agree on each record's random stream
        records: list[SentenceRecord] = []
        next_id = 0
        if config.simple_corpus:
            simple = list(
                read_corpus(
                    config.simple_corpus,
                    detect_format(config.simple_corpus),
                    source_tag=TAG_SIMPLE,
                    start_id=0,
                    summary=summary,
                )
            )
            next_id = simple[-1].id + 1 if simple else 0
            if config.ablation != ABLATION_SUBSTITUTE_ONLY:
                records.extend(simple)
        if config.ordinary_corpus:
            ordinary = list(
                read_corpus(
                    config.ordinary_corpus,
                    detect_format(config.ordinary_corpus),
                    source_tag=TAG_ORDINARY,
                    start_id=next_id,
                    summary=summary,
                )
            )
            if config.ablation != ABLATION_MASK_ONLY:
                records.extend(ordinary)

        summary.read = len(records)
        progress = _Progress(len(records), config.progress_every, stream=progress_stream)
        chunks = _chunks(records, config.shards)
        pairs: list[CorruptionPair] = []
        if len(chunks) <= 1:
            for chunk in chunks:
                pairs.extend(
                    _process_chunk(
                        chunk, config, scorer, table, exclusion, sim_client, summary, progress
                    )
                )
        else:
            parts = [RunSummary() for _ in chunks]
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                futures = [
                    pool.submit(
                        _process_chunk,
                        chunk,
                        config,
                        scorer,
                        table,
                        exclusion,
                        sim_client,
                        part,
                        progress,
                    )
                    for chunk, part in zip(chunks, parts)
                ]
                for future in futures:
                    pairs.extend(future.result())
            for part in parts:
                summary.merge(part)

        pairs.sort(key=lambda p: p.record_id)
        write_pairs(pairs, config.output, summary=summary)
    finally:
        if client is not None:
            client.close()
    return summary


def _tokenizer(lowercase: bool):
    if lowercase:
        return lambda text: text.lower().split()
    return str.split


def run_eval(
    metric: str,
    system_path: str,
    lowercase: bool = True,
    per_instance: bool = False,
) -> dict:
    """Score a system-output JSONL ({"input","output","references"} per
    line) and return the report dict."""
    if metric not in (METRIC_SARI, METRIC_DSARI):
        raise UsageError(f"metric must be '{METRIC_SARI}' or '{METRIC_DSARI}', got {metric!r}")
    tok = _tokenizer(lowercase)
    score = sari if metric == METRIC_SARI else dsari
    results = []
    skipped = 0
    try:
        handle = open(system_path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot read eval file {system_path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                inp, out, refs = obj["input"], obj["output"], obj["references"]
                if (
                    not isinstance(inp, str)
                    or not isinstance(out, str)
                    or not isinstance(refs, list)
                    or not refs
                    or not all(isinstance(r, str) for r in refs)
                ):
                    raise TypeError("schema: input str, output str, references non-empty [str]")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping invalid line (%s)", system_path, lineno, exc)
                skipped += 1
                continue
            results.append(score(tok(inp), tok(out), [tok(r) for r in refs]))
    if not results:
        raise CorpusIOError(f"{system_path}: no valid evaluation lines ({skipped} skipped)")
    scalar_keys = (
        ("sari", "keep", "del", "add") if metric == METRIC_SARI else ("dsari", "d_keep", "d_del", "d_add")
    )
    dicts = [r.to_dict() for r in results]
    report = {
        "metric": metric,
        "count": len(results),
        "skipped": skipped,
        "lowercase": lowercase,
        "mean": {k: sum(d[k] for d in dicts) / len(dicts) for k in scalar_keys},
    }
    if per_instance:
        report["per_instance"] = dicts
    return report
