"""SARI and its document-level variant.

SARI compares a system output against the input and one or more references
over n-grams (n = 1..4) in three directions: KEEP (F1 on n-grams shared by
input and output, weighted by how many references retain them), DEL
(precision on n-grams the output dropped, rewarded when references drop
them too), ADD (F1 on n-grams the output introduced). Each component is
averaged over n and the headline score is the component mean, scaled to
[0, 100].

Vacuous-component convention, applied per component per n: candidate set
and reference-demand set both empty scores 1; exactly one empty scores 0.
This makes a perfect match score exactly 100.

The document-level variant multiplies the components by length and
sentence-count penalties measured against the first reference:

    long_output_penalty   = exp(1 - L_out/L_ref)   when L_out > L_ref, else 1
    short_output_penalty  = exp(1 - L_ref/L_out)   when L_out < L_ref, else 1
    sentence_count_penalty = exp(-|S_out - S_ref| / max(S_out, S_ref))

KEEP takes long_output_penalty and sentence_count_penalty, DEL takes
short_output_penalty and sentence_count_penalty, ADD takes
long_output_penalty only.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

TokenSeq = Sequence[str]

NGRAM_ORDERS = (1, 2, 3, 4)


def extract_ngrams(tokens: TokenSeq, n: int) -> Counter:
    """Sliding-window n-grams with multiplicity; empty if len(tokens) < n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class SariNgramScores:
    keep: float
    delete: float
    add: float

    def to_dict(self) -> dict:
        return {"keep": self.keep, "del": self.delete, "add": self.add}


@dataclass(frozen=True)
class SariResult:
    sari: float
    keep: float
    delete: float
    add: float
    per_n: dict[int, SariNgramScores]

    def to_dict(self) -> dict:
        return {
            "sari": self.sari,
            "keep": self.keep,
            "del": self.delete,
            "add": self.add,
            "per_n": {str(n): s.to_dict() for n, s in self.per_n.items()},
        }


@dataclass(frozen=True)
class DSariResult:
    dsari: float
    d_keep: float
    d_del: float
    d_add: float

    def to_dict(self) -> dict:
        return {
            "dsari": self.dsari,
            "d_keep": self.d_keep,
            "d_del": self.d_del,
            "d_add": self.d_add,
        }


def _scale(counter: Counter, factor: int) -> Counter:
    return Counter({gram: count * factor for gram, count in counter.items()})


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0


def _keep_score(src_rep: Counter, out_rep: Counter, ref_total: Counter) -> float:
    cand = src_rep & out_rep
    demand = src_rep & ref_total
    if not cand and not demand:
        return 1.0
    if not cand or not demand:
        return 0.0
    good = cand & ref_total
    p = sum(good[g] / cand[g] for g in good) / len(cand)
    r = sum(good[g] / demand[g] for g in good) / len(demand)
    return _f1(p, r)


def _del_score(src_rep: Counter, out_rep: Counter, ref_total: Counter) -> float:
    cand = src_rep - out_rep
    demand = src_rep - ref_total
    if not cand and not demand:
        return 1.0
    if not cand or not demand:
        return 0.0
    good = cand - ref_total
    # precision only: over-deletion must not be rewarded by a recall term
    return sum(good[g] / cand[g] for g in good) / len(cand)


def _add_score(src_keys: set, out_keys: set, ref_keys: set) -> float:
    cand = out_keys - src_keys
    demand = ref_keys - src_keys
    if not cand and not demand:
        return 1.0
    if not cand or not demand:
        return 0.0
    good = cand & ref_keys
    return _f1(len(good) / len(cand), len(good) / len(demand))


def sari(
    input_tokens: TokenSeq, output_tokens: TokenSeq, references: Sequence[TokenSeq]
) -> SariResult:
    """Sentence-level score; tokens are compared case-sensitively, so
    normalize (e.g. lowercase) before calling."""
    if not references:
        raise ValueError("sari needs at least one reference")
    numref = len(references)
    keeps: list[float] = []
    dels: list[float] = []
    adds: list[float] = []
    per_n: dict[int, SariNgramScores] = {}
    for n in NGRAM_ORDERS:
        src = extract_ngrams(input_tokens, n)
        out = extract_ngrams(output_tokens, n)
        ref_total: Counter = Counter()
        for ref in references:
            ref_total.update(extract_ngrams(ref, n))
        # count scaling keeps the per-gram reference fractions in [0, 1]
        src_rep = _scale(src, numref)
        out_rep = _scale(out, numref)
        k = _keep_score(src_rep, out_rep, ref_total)
        d = _del_score(src_rep, out_rep, ref_total)
        a = _add_score(set(src), set(out), set(ref_total))
        keeps.append(k)
        dels.append(d)
        adds.append(a)
        per_n[n] = SariNgramScores(keep=100.0 * k, delete=100.0 * d, add=100.0 * a)
    keep = 100.0 * sum(keeps) / len(keeps)
    delete = 100.0 * sum(dels) / len(dels)
    add = 100.0 * sum(adds) / len(adds)
    return SariResult(
        sari=(keep + delete + add) / 3.0, keep=keep, delete=delete, add=add, per_n=per_n
    )


def long_output_penalty(out_len: int, ref_len: int) -> float:
    """Penalizes output longer than the reference; 1 otherwise."""
    if out_len <= ref_len:
        return 1.0
    if ref_len == 0:
        return 0.0
    return math.exp(1.0 - out_len / ref_len)


def short_output_penalty(out_len: int, ref_len: int) -> float:
    """Penalizes output shorter than the reference; 1 otherwise."""
    if out_len >= ref_len:
        return 1.0
    if out_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / out_len)


def sentence_count_penalty(out_sents: int, ref_sents: int) -> float:
    """Penalizes a sentence-count mismatch; 1 when counts agree."""
    top = max(out_sents, ref_sents)
    if top == 0:
        return 1.0
    return math.exp(-abs(out_sents - ref_sents) / top)


def sentence_count(tokens: TokenSeq) -> int:
    """Sentences = tokens ending in terminal punctuation; a non-empty
    document with no terminal counts as one sentence."""
    count = sum(1 for t in tokens if t and t[-1] in ".!?")
    if count == 0 and tokens:
        return 1
    return count


def dsari(
    input_doc: TokenSeq, output_doc: TokenSeq, references: Sequence[TokenSeq]
) -> DSariResult:
    """Document-level score: SARI components over whole-document token
    sequences, each multiplied by the penalties described in the module
    docstring. Penalties are measured against the first reference."""
    if not references:
        raise ValueError("dsari needs at least one reference")
    base = sari(input_doc, output_doc, references)
    ref = references[0]
    lp_long = long_output_penalty(len(output_doc), len(ref))
    lp_short = short_output_penalty(len(output_doc), len(ref))
    slp = sentence_count_penalty(sentence_count(output_doc), sentence_count(ref))
    d_keep = base.keep * lp_long * slp
    d_del = base.delete * lp_short * slp
    d_add = base.add * lp_long
    return DSariResult(dsari=(d_keep + d_del + d_add) / 3.0, d_keep=d_keep, d_del=d_del, d_add=d_add)
