"""
Bucket scheduling of large sieving primes.

A prime well above the block length hits a block at most once, so striding
over it in every block is wasted work. Each such prime instead waits in the
bucket of the block holding its next multiple; when that block comes up the
prime reports its hits and moves to the bucket of its following multiple.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Dict, List

import numpy as np

from mertens_lib.sieve import SMALL_PRIME_FLOOR, BucketHits, log_entry


class BucketSchedule:
    """Map from block index to the primes due in that block."""

    def __init__(self, block_len: int, limit: int):
        self.block_len = block_len
        self.limit = limit
        self._buckets: Dict[int, List[int]] = defaultdict(list)
        self._where: Dict[int, int] = {}
        self._processed = -1

    @classmethod
    def for_primes(cls, primes: np.ndarray, threshold: int, block_len: int, limit: int,
                   first_block: int = 0) -> "BucketSchedule":
        """Schedule every prime above ``threshold`` for its first active block >= ``first_block``."""
        schedule = cls(block_len, limit)
        schedule._processed = first_block - 1
        for p in primes.tolist():
            if p <= threshold:
                continue
            # first n whose sieving bound reaches p
            entry = p if p <= SMALL_PRIME_FLOOR else p * p
            if entry > limit:
                break
            schedule.insert(p, max(schedule.block_of(entry), first_block))
        return schedule

    def block_of(self, n: int) -> int:
        return (n - 1) // self.block_len

    def insert(self, p: int, block_index: int) -> None:
        assert p not in self._where, f"prime {p} already scheduled"
        assert block_index > self._processed, f"prime {p} scheduled into finished block {block_index}"
        self._buckets[block_index].append(p)
        self._where[p] = block_index

    def due(self, block_index: int) -> List[int]:
        return list(self._buckets.get(block_index, ()))

    def __len__(self) -> int:
        return len(self._where)

    def take_hits(self, block_index: int, start: int, end: int) -> BucketHits:
        """Collect the contributions of the primes due in this block and reschedule them."""
        assert block_index == self._processed + 1, "blocks must be taken in order"
        primes = self._buckets.pop(block_index, [])
        offsets: List[int] = []
        increments: List[int] = []
        zeros: List[int] = []
        for p in primes:
            del self._where[p]
            entry = log_entry(p)
            sq = p * p
            n = -(-start // p) * p
            while n <= end:
                offsets.append(n - start)
                increments.append(entry)
                if n % sq == 0:
                    zeros.append(n - start)
                n += p
            if n <= self.limit:
                self._buckets[self.block_of(n)].append(p)
                self._where[p] = self.block_of(n)
        self._processed = block_index
        assert not self._buckets or min(self._buckets) > block_index, "stale bucket left behind"
        return BucketHits(
            offsets=np.asarray(offsets, dtype=np.int64),
            increments=np.asarray(increments, dtype=np.uint8),
            zero_offsets=np.asarray(zeros, dtype=np.int64),
        )
