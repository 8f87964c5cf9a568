"""Pure-Python/numpy kernel backend.

Reference implementation of the per-record corruption plan. The numba
backend in jit.py must produce bit-identical outputs for the same inputs;
the cross-backend tests enforce that. Keep the arithmetic expressions in
the two files textually aligned.
"""

from __future__ import annotations

import numpy as np

from ..rng import GOLDEN, MASK64, UNIT_53, _MIX1, _MIX2, poisson_icdf

NAME = "numpy"


def _uniform(state: int) -> tuple[float, int]:
    state = (state + GOLDEN) & MASK64
    z = ((state ^ (state >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    z ^= z >> 31
    return (z >> 11) * UNIT_53, state


def _span_length(state: int, lam: float, budget: int) -> tuple[int, int]:
    while True:
        u, state = _uniform(state)
        k = poisson_icdf(u, lam)
        if k >= 1:
            break
    return (k if k < budget else budget), state


def partition_lengths(token_count: int, lam: float, state: int):
    """Span lengths covering [0, token_count) exactly; returns final state."""
    lengths = []
    pos = 0
    while pos < token_count:
        length, state = _span_length(state, lam, token_count - pos)
        lengths.append(length)
        pos += length
    return np.asarray(lengths, dtype=np.int64), state


def corrupt_plan(
    token_scores: np.ndarray,
    forced: np.ndarray,
    threshold: float,
    max_mask_prob: float,
    lam: float,
    complex_mode: bool,
    state: int,
):
    """Full per-record masking plan.

    token_scores: per-token complexity, float64[n].
    forced: int64[k, 2] (start, len), sorted, disjoint, validated upstream.
    Returns (spans int64[m,2], comps float64[m], probs float64[m],
    flags uint8[m], state). Draw order: all span lengths left to right,
    then one Bernoulli uniform per span.
    """
    n = len(token_scores)
    nf = len(forced)
    spans = []
    pos = 0
    fi = 0
    while pos < n:
        if fi < nf and forced[fi, 0] == pos:
            length = int(forced[fi, 1])
            fi += 1
        else:
            gap_end = int(forced[fi, 0]) if fi < nf else n
            length, state = _span_length(state, lam, gap_end - pos)
        spans.append((pos, length))
        pos += length

    m = len(spans)
    span_arr = np.asarray(spans, dtype=np.int64).reshape(m, 2)
    comps = np.empty(m, dtype=np.float64)
    probs = np.empty(m, dtype=np.float64)
    flags = np.zeros(m, dtype=np.uint8)

    for i, (start, length) in enumerate(spans):
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

    return span_arr, comps, probs, flags, state
