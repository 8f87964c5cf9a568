"""Backend equivalence: the numba build and the numpy fallback must agree
bit-for-bit, and the env flag must select them."""

import os
import subprocess
import sys

import numpy as np
import pytest

from simplecorpus import kernels
from simplecorpus.rng import derive_record_state

pure = kernels.get_backend("numpy")
jit = kernels.get_backend("numba")

NO_FORCED = np.empty((0, 2), dtype=np.int64)


def _random_cases(count, rng):
    for _ in range(count):
        n = int(rng.integers(1, 40))
        scores = rng.random(n)
        nf = int(rng.integers(0, 3))
        forced = []
        pos = 0
        for _ in range(nf):
            if pos >= n:
                break
            start = int(rng.integers(pos, n))
            length = int(rng.integers(1, min(4, n - start) + 1))
            forced.append((start, length))
            pos = start + length
        yield scores, np.asarray(forced, dtype=np.int64).reshape(len(forced), 2)


def test_partition_lengths_pin():
    # frozen by tests/oracles/rng_reference.py
    state = derive_record_state(42, 0)
    for backend in (pure, jit):
        lengths, _ = backend.partition_lengths(20, 3.0, state)
        assert lengths.tolist() == [4, 3, 5, 2, 1, 3, 2]


def test_partition_lengths_cover_budget():
    state = derive_record_state(3, 17)
    for n in (1, 2, 7, 100):
        lengths, state = pure.partition_lengths(n, 3.0, state)
        assert lengths.sum() == n
        assert (lengths >= 1).all()


def test_backends_bit_identical():
    rng = np.random.default_rng(2024)
    state = derive_record_state(11, 0)
    for i, (scores, forced) in enumerate(_random_cases(60, rng)):
        complex_mode = bool(i % 2)
        threshold = 0.25 if i % 3 else 0.6
        a = pure.corrupt_plan(scores, forced, threshold, 0.15, 3.0, complex_mode, state)
        b = jit.corrupt_plan(scores, forced, threshold, 0.15, 3.0, complex_mode, state)
        for x, y in zip(a[:4], b[:4]):
            np.testing.assert_array_equal(np.asarray(x), np.asarray(y))
        assert int(a[4]) == int(b[4])
        state = int(a[4])


def test_corrupt_plan_partition_properties():
    state = derive_record_state(5, 9)
    scores = np.zeros(30)
    spans, comps, probs, flags, _ = pure.corrupt_plan(
        scores, NO_FORCED, 0.25, 0.15, 3.0, False, state
    )
    assert spans[0, 0] == 0
    assert (spans[:-1, 0] + spans[:-1, 1] == spans[1:, 0]).all()
    assert spans[-1, 0] + spans[-1, 1] == 30
    assert len(comps) == len(probs) == len(flags) == len(spans)


def test_corrupt_plan_keeps_forced_span_intact():
    state = derive_record_state(42, 0)
    forced = np.array([[2, 1]], dtype=np.int64)
    spans, _, _, _, _ = pure.corrupt_plan(np.zeros(5), forced, 0.25, 0.15, 3.0, False, state)
    # frozen by tests/oracles/rng_reference.py
    assert spans.tolist() == [[0, 2], [2, 1], [3, 2]]


def test_corrupt_plan_complexities_are_span_max():
    scores = np.array([0.1, 0.9, 0.2, 0.3, 0.05])
    forced = np.array([[0, 2], [2, 2], [4, 1]], dtype=np.int64)
    _, comps, _, _, _ = pure.corrupt_plan(scores, forced, 0.25, 0.15, 3.0, False, 123)
    assert comps.tolist() == [0.9, 0.3, 0.05]


def _run_with_env(flag):
    code = (
        "from simplecorpus import kernels; print(kernels.backend_name())"
    )
    env = dict(os.environ, SIMPLECORPUS_KERNELS=flag)
    return subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )


def test_env_flag_selects_backend():
    assert _run_with_env("numpy").stdout.strip() == "numpy"
    assert _run_with_env("numba").stdout.strip() == "numba"


def test_env_flag_rejects_unknown_value():
    proc = _run_with_env("cuda")
    assert proc.returncode != 0
    assert "SIMPLECORPUS_KERNELS" in proc.stderr


def test_warmup_compiles_without_error():
    kernels.warmup()
    assert kernels.backend_name() in ("numba", "numpy")
