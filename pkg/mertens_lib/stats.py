"""
Streamed statistics of M(n): extrema, zeros and strided samples.

``StatsRecorder`` folds classified blocks into a ``MertensStats`` strictly in
block order. Each block is handled with numpy prefix sums; only the events
are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Tuple

import numpy as np

from mertens_lib.errors import IntegrityError
from mertens_lib.sieve import ClassifiedBlock

# |M(n)| stays far below this for n <= 10**16.
M_BOUND = 1 << 31


class AccumulatorOverflowError(IntegrityError):
    """Raised when the running Mertens value leaves the checked range."""
    pass


@dataclass
class RunningState:
    n_last: int = 0
    M_last: int = 0
    max: int = 0
    min: int = 0


@dataclass
class MertensStats:
    limit: int
    stride: int
    extrema: List[Tuple[int, int]] = field(default_factory=list)
    zeros: List[int] = field(default_factory=list)
    zero_mu: List[int] = field(default_factory=list)
    samples: List[Tuple[int, int]] = field(default_factory=list)
    running: RunningState = field(default_factory=RunningState)

    @property
    def complete(self) -> bool:
        return self.running.n_last == self.limit

    def events(self) -> Iterator[dict]:
        """Events ordered by n; at equal n: extremum, zero, sample."""
        merged: List[Tuple[int, int, dict]] = []
        for n, m in self.extrema:
            merged.append((n, 0, {"kind": "extremum", "n": n, "M": m}))
        for n, mu in zip(self.zeros, self.zero_mu):
            merged.append((n, 1, {"kind": "zero", "n": n, "M": 0, "mu": mu}))
        for n, m in self.samples:
            merged.append((n, 2, {"kind": "sample", "n": n, "M": m}))
        merged.sort(key=lambda item: (item[0], item[1]))
        for _, _, event in merged:
            yield event

    def summary(self) -> dict:
        r = self.running
        return {"kind": "summary", "limit": self.limit, "n": r.n_last, "M": r.M_last,
                "max": r.max, "min": r.min, "zeros": len(self.zeros)}


class StatsRecorder:
    """Sequential reducer applying the recording rules block by block."""

    def __init__(self, stats: MertensStats):
        self.stats = stats

    def consume(self, block: ClassifiedBlock) -> None:
        stats = self.stats
        running = stats.running
        if block.start != running.n_last + 1:
            raise IntegrityError(
                f"block starting at {block.start} does not follow n={running.n_last}")

        mu = block.mu
        M = running.M_last + np.cumsum(mu, dtype=np.int64)
        start = block.start

        peak = np.maximum.accumulate(M)
        trough = np.minimum.accumulate(M)
        if int(peak[-1]) >= M_BOUND or int(trough[-1]) <= -M_BOUND:
            raise AccumulatorOverflowError(f"|M| reached 2**31 in block at {start}")

        # running record before each position
        prev_max = np.concatenate(([running.max], np.maximum(peak[:-1], running.max)))
        prev_min = np.concatenate(([running.min], np.minimum(trough[:-1], running.min)))
        record = np.flatnonzero((M > prev_max) | (M < prev_min))
        stats.extrema.extend((start + int(i), int(M[i])) for i in record)

        zero_idx = np.flatnonzero(M == 0)
        stats.zeros.extend(start + int(i) for i in zero_idx)
        stats.zero_mu.extend(int(mu[i]) for i in zero_idx)

        first = (-start) % stats.stride
        for i in range(first, len(M), stats.stride):
            stats.samples.append((start + i, int(M[i])))

        running.n_last = block.end
        running.M_last = int(M[-1])
        running.max = max(running.max, int(peak[-1]))
        running.min = min(running.min, int(trough[-1]))
