"""Deterministic random streams for corpus corruption.

Every record gets its own stream derived from (root seed, record id), so
results never depend on shard layout or processing order. The generator is
splitmix64: tiny state, good mixing, and trivially portable, which lets the
numba kernels and the pure-Python fallback reproduce the exact same draws.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 1 / 2**53: top 53 bits of a draw map to a double in [0, 1)
UNIT_53 = 1.0 / 9007199254740992.0

# Forward-CDF walk bailout; Poisson(lam) mass beyond this is below double
# resolution for any lambda this toolkit accepts.
POISSON_KMAX = 1024


def mix64(x: int) -> int:
    """Stateless splitmix64 finalizer, used to derive per-record seeds."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_record_state(seed: int, record_id: int) -> int:
    """Initial stream state for one record. Independent of sharding."""
    return mix64((seed & MASK64) ^ mix64(record_id & MASK64))


def poisson_icdf(u: float, lam: float) -> int:
    """Smallest k with Poisson(lam) CDF(k) >= u, by forward walk.

    This is the quantile-function sampler: feed it a uniform draw and it
    returns a Poisson variate. Kept as a module-level function so the numba
    backend can compile this exact source (bit-identical float arithmetic).
    """
    p = math.exp(-lam)
    cdf = p
    k = 0
    while cdf < u and k < POISSON_KMAX:
        k += 1
        p = p * (lam / k)
        cdf = cdf + p
    return k


class RecordStream:
    """Mutable splitmix64 stream over one record's random budget.

    Draw order is part of the output contract: corruption consumes all span
    lengths first, then one uniform per candidate span for the mask decision
    (also for spans whose probability is zero).
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    @classmethod
    def for_record(cls, seed: int, record_id: int) -> "RecordStream":
        return cls(derive_record_state(seed, record_id))

    def next_u64(self) -> int:
        state = (self.state + GOLDEN) & MASK64
        self.state = state
        z = ((state ^ (state >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * UNIT_53

    def span_length(self, lam: float, budget: int) -> int:
        """Poisson(lam) draw conditioned on >= 1, clamped to budget.

        Zero draws are rejected and resampled rather than remapped, so the
        conditional distribution over {1.. } is exact.
        """
        while True:
            k = poisson_icdf(self.uniform(), lam)
            if k >= 1:
                break
        return k if k < budget else budget
