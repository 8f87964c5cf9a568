"""Numba kernel backend.

Same contract as pure.py, compiled with @njit. State is carried as uint64;
all PRNG constants are pre-cast so no operation promotes to float64 (numba
follows numpy promotion rules, and a stray int64 would silently do that).
The Poisson walk is compiled from the exact source in rng.py so both
backends run the same float arithmetic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .. import rng as _rng

NAME = "numba"

_GOLDEN = np.uint64(_rng.GOLDEN)
_MIX1 = np.uint64(_rng._MIX1)
_MIX2 = np.uint64(_rng._MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_UNIT_53 = _rng.UNIT_53

_poisson_icdf = njit(cache=True)(_rng.poisson_icdf)


@njit(cache=True)
def _uniform(state):
    state = state + _GOLDEN
    z = (state ^ (state >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return (z >> _S11) * _UNIT_53, state


@njit(cache=True)
def _span_length(state, lam, budget):
    while True:
        u, state = _uniform(state)
        k = _poisson_icdf(u, lam)
        if k >= 1:
            break
    return (k if k < budget else budget), state


@njit(cache=True)
def _partition_lengths(token_count, lam, state, out):
    m = 0
    pos = 0
    while pos < token_count:
        length, state = _span_length(state, lam, token_count - pos)
        out[m] = length
        m += 1
        pos += length
    return m, state


def partition_lengths(token_count: int, lam: float, state: int):
    out = np.empty(max(token_count, 1), dtype=np.int64)
    m, state = _partition_lengths(token_count, lam, np.uint64(state), out)
    return out[:m].copy(), int(state)


@njit(cache=True)
def _corrupt_plan(token_scores, forced, threshold, max_mask_prob, lam, complex_mode,
                  state, spans, comps, probs, flags):
    n = token_scores.shape[0]
    nf = forced.shape[0]
    m = 0
    pos = 0
    fi = 0
    while pos < n:
        if fi < nf and forced[fi, 0] == pos:
            length = forced[fi, 1]
            fi += 1
        else:
            gap_end = forced[fi, 0] if fi < nf else n
            length, state = _span_length(state, lam, gap_end - pos)
        spans[m, 0] = pos
        spans[m, 1] = length
        m += 1
        pos += length

    for i in range(m):
        start = spans[i, 0]
        length = spans[i, 1]
        c = token_scores[start]
        for j in range(start + 1, start + length):
            if token_scores[j] > c:
                c = token_scores[j]
        comps[i] = c
        if complex_mode:
            probs[i] = max_mask_prob * (c - threshold) / (1.0 - threshold) if c > threshold else 0.0
        else:
            probs[i] = max_mask_prob * (1.0 - c / threshold) if c <= threshold else 0.0

    for i in range(m):
        u, state = _uniform(state)
        if u < probs[i]:
            flags[i] = 1

    return m, state


def corrupt_plan(
    token_scores: np.ndarray,
    forced: np.ndarray,
    threshold: float,
    max_mask_prob: float,
    lam: float,
    complex_mode: bool,
    state: int,
):
    n = len(token_scores)
    cap = max(n, 1)
    spans = np.zeros((cap, 2), dtype=np.int64)
    comps = np.zeros(cap, dtype=np.float64)
    probs = np.zeros(cap, dtype=np.float64)
    flags = np.zeros(cap, dtype=np.uint8)
    m, state = _corrupt_plan(
        np.ascontiguousarray(token_scores, dtype=np.float64),
        np.ascontiguousarray(forced, dtype=np.int64).reshape(-1, 2),
        float(threshold), float(max_mask_prob), float(lam), bool(complex_mode),
        np.uint64(state), spans, comps, probs, flags,
    )
    return spans[:m].copy(), comps[:m].copy(), probs[:m].copy(), flags[:m].copy(), int(state)


def warmup() -> None:
    """Trigger JIT compilation so timed runs never pay compile cost."""
    scores = np.zeros(4, dtype=np.float64)
    forced = np.zeros((0, 2), dtype=np.int64)
    corrupt_plan(scores, forced, 0.25, 0.15, 3.0, False, 1)
    partition_lengths(4, 3.0, 1)
