"""Timing comparison of the two kernel backends.

Runs the per-record corruption plan over synthetic workloads on the numba
build and the numpy fallback, checks the outputs agree bit for bit, and
prints per-call timings. Compile time is excluded (one warmup call per
backend) because the jit cache makes it a once-per-machine cost.

Run: python3 benchmarks/bench_kernels.py [--records 20000]
"""

import argparse
import random
import time

import numpy as np

from simplecorpus.kernels import get_backend
from simplecorpus.rng import derive_record_state

WORKLOADS = [
    ("short sentences (8 tokens)", 8),
    ("medium sentences (24 tokens)", 24),
    ("long sentences (96 tokens)", 96),
]


def make_inputs(n_tokens: int, records: int, seed: int):
    rng = random.Random(seed)
    scores = [
        np.asarray([rng.random() * 0.5 for _ in range(n_tokens)], dtype=np.float64)
        for _ in range(records)
    ]
    states = [derive_record_state(seed, rid) for rid in range(records)]
    return scores, states


def run_backend(backend, scores, states, forced):
    outputs = []
    t0 = time.perf_counter()
    for token_scores, state in zip(scores, states):
        outputs.append(
            backend.corrupt_plan(token_scores, forced, 0.25, 0.15, 3.0, False, state)
        )
    return time.perf_counter() - t0, outputs


def assert_identical(a, b, label):
    for (sa, ca, pa, fa, ra), (sb, cb, pb, fb, rb) in zip(a, b):
        assert np.array_equal(sa, sb), f"{label}: span mismatch"
        assert np.array_equal(ca, cb) and np.array_equal(pa, pb), f"{label}: score mismatch"
        assert np.array_equal(fa, fb), f"{label}: flag mismatch"
        assert ra == rb, f"{label}: state mismatch"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=20_000)
    args = parser.parse_args()

    jit = get_backend("numba")
    pure = get_backend("numpy")
    jit.warmup()

    forced = np.empty((0, 2), dtype=np.int64)
    print(f"{'workload':<32} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for label, n_tokens in WORKLOADS:
        scores, states = make_inputs(n_tokens, args.records, seed=7)
        t_jit, out_jit = run_backend(jit, scores, states, forced)
        t_pure, out_pure = run_backend(pure, scores, states, forced)
        assert_identical(out_jit, out_pure, label)
        per_jit = t_jit / args.records * 1e6
        per_pure = t_pure / args.records * 1e6
        print(
            f"{label:<32} {per_jit:>9.1f} us {per_pure:>9.1f} us {t_pure / t_jit:>8.1f}x"
        )
    print(f"\n{args.records} records per workload; outputs bit-identical across backends.")


if __name__ == "__main__":
    main()
