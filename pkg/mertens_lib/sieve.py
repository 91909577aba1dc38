"""
Log-space Möbius sieve.

Each integer n in a block gets one byte:

- bit 7 is set while n is still square-free,
- for every sieving prime p dividing n the byte grows by floor(log2 p) | 1,
  so the low bit counts prime factors mod 2 and bits 0-6 hold a log sum,
- multiples of p**2 are set to 0.

After sieving with the primes up to sqrt(end), at most one prime factor of n
is unseen. Its presence shows as a log sum well below floor(log2 n), which
decides whether the parity has to be flipped.

Key features:
- 13860-periodic pre-sieve wheel for 2, 3, 4, 5, 7, 9 and 11
- numpy strided updates per prime, vectorised classification per block
- ordered block stream shared by the scans and the isolated M(x) code
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import isqrt
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from mertens_lib.errors import ParameterError
from mertens_lib.threadpool import ordered_map

WHEEL_PRIMES = (2, 3, 5, 7, 11)
WHEEL_SQUARES = (4, 9)
WHEEL_PERIOD = 2 * 2 * 3 * 3 * 5 * 7 * 11  # 13860

# Block length of the full 10^16 sweep, 629760 wheel periods; also the largest accepted.
MAX_BLOCK_LEN = 8_728_473_600
DEFAULT_BLOCK_LEN = WHEEL_PERIOD * 512

VALIDITY_CEILING = 10**16
THRESHOLD_SWITCH = 1 << 20
# All primes up to this bound are sieved even when sqrt(end) is smaller.
SMALL_PRIME_FLOOR = 1024

SQUAREFREE_FLAG = 0x80
LOG_MASK = 0x7F


class SieveRangeError(ParameterError):
    """Raised when n exceeds the range where the log-sum thresholds are proven."""
    pass


class MissingPrimesError(ParameterError):
    """Raised when the sieving primes do not reach the bound a block needs."""
    pass


class BlockPhase(enum.Enum):
    RAW = "raw"
    LOGGED = "logged"
    CLASSIFIED = "classified"


def log_entry(p: int) -> int:
    """floor(log2 p) with the lowest bit forced to 1."""
    return (p.bit_length() - 1) | 1


@lru_cache(maxsize=8)
def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (plain Eratosthenes over odd numbers)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_odd_prime = np.ones(n // 2 + 1, dtype=bool)  # index i -> 2i + 1
    is_odd_prime[0] = False
    for i in range(1, (isqrt(n) - 1) // 2 + 1):
        if is_odd_prime[i]:
            p = 2 * i + 1
            is_odd_prime[p * p // 2::p] = False
    odd = 2 * np.flatnonzero(is_odd_prime) + 1
    odd = odd[odd <= n]
    primes = np.concatenate((np.array([2], dtype=np.int64), odd.astype(np.int64)))
    primes.setflags(write=False)
    return primes


def sieving_bound(end: int) -> int:
    """Largest prime a block ending at ``end`` has to be sieved with."""
    return max(isqrt(end), min(end, SMALL_PRIME_FLOOR))


@dataclass(frozen=True)
class LogTable:
    """Sieving primes with their log bytes; ``limit`` is the bound they cover."""

    primes: np.ndarray
    entries: np.ndarray
    limit: int

    def __post_init__(self) -> None:
        assert len(self.primes) == len(self.entries)
        assert bool(np.all(self.entries & 1)), "log entries must be odd"

    @classmethod
    def up_to(cls, limit: int) -> "LogTable":
        primes = primes_up_to(limit)
        bits = np.floor(np.log2(primes.astype(np.float64))).astype(np.int64) if len(primes) else primes
        # float log2 is exact enough for p < 2**53; fix any rounding at powers of two
        if len(primes):
            bits = np.where((np.int64(1) << bits) > primes, bits - 1, bits)
            bits = np.where((np.int64(1) << (bits + 1)) <= primes, bits + 1, bits)
        entries = (bits | 1).astype(np.uint8)
        return cls(primes=primes, entries=entries, limit=limit)

    def covering(self, end: int) -> "LogTable":
        """Check that this table reaches ``sieving_bound(end)``."""
        bound = sieving_bound(end)
        if self.limit < bound:
            raise MissingPrimesError(
                f"sieving primes reach {self.limit}, block ending at {end} needs {bound}")
        return self


@lru_cache(maxsize=1)
def presieve_wheel() -> np.ndarray:
    """Sieve state of one wheel period; index i stands for every n = i mod 13860."""
    pattern = np.full(WHEEL_PERIOD, SQUAREFREE_FLAG, dtype=np.uint8)
    for p in WHEEL_PRIMES:
        pattern[0::p] += np.uint8(log_entry(p))
    for sq in WHEEL_SQUARES:
        pattern[0::sq] = 0
    pattern.setflags(write=False)
    return pattern


@dataclass
class SieveBlock:
    start: int
    values: np.ndarray
    phase: BlockPhase = BlockPhase.RAW
    wheeled: bool = True

    @property
    def length(self) -> int:
        return int(self.values.shape[0])

    @property
    def end(self) -> int:
        return self.start + self.length - 1


@dataclass
class BucketHits:
    """Contributions of bucketed primes to one block, as offsets into the block."""

    offsets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    increments: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    zero_offsets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def raw_block(start: int, length: int, wheel: bool = True) -> SieveBlock:
    """Fresh block over [start, start + length - 1], optionally pre-sieved by the wheel."""
    if start < 1 or length < 1:
        raise ParameterError(f"invalid block start={start} length={length}")
    if wheel:
        pattern = presieve_wheel()
        offset = start % WHEEL_PERIOD
        reps = (offset + length) // WHEEL_PERIOD + 1
        values = np.tile(pattern, reps)[offset:offset + length].copy()
    else:
        values = np.full(length, SQUAREFREE_FLAG, dtype=np.uint8)
    return SieveBlock(start=start, values=values, phase=BlockPhase.RAW, wheeled=wheel)


def sieve_block(block: SieveBlock, logs: LogTable, *, strided_limit: Optional[int] = None,
                hits: Optional[BucketHits] = None) -> SieveBlock:
    """Add the log bytes of every sieving prime, then zero the square multiples.

    Primes above ``strided_limit`` are skipped here; their contributions come
    in through ``hits`` from the bucket scheduler.
    """
    if block.phase is not BlockPhase.RAW:
        raise ParameterError(f"block at {block.start} is {block.phase.value}, expected raw")
    logs.covering(block.end)

    start, end = block.start, block.end
    values = block.values
    bound = sieving_bound(end)
    count = int(np.searchsorted(logs.primes, bound, side="right"))
    primes = logs.primes[:count]
    entries = logs.entries[:count]
    top = bound if strided_limit is None else min(bound, strided_limit)

    for p, entry in zip(primes.tolist(), entries.tolist()):
        if p > top:
            break
        if block.wheeled and p in WHEEL_PRIMES:
            continue
        values[(-start) % p::p] += np.uint8(entry)

    if hits is not None and len(hits.offsets):
        np.add.at(values, hits.offsets, hits.increments)

    for p in primes.tolist():
        sq = p * p
        if sq > end:
            break
        if p > top:
            # bucketed primes report their own square multiples
            break
        values[(-start) % sq::sq] = 0

    if hits is not None and len(hits.zero_offsets):
        values[hits.zero_offsets] = 0

    return replace(block, phase=BlockPhase.LOGGED)


def floor_log2_range(start: int, length: int) -> np.ndarray:
    """Exact floor(log2 n) for n in [start, start + length), as int16."""
    out = np.empty(length, dtype=np.int16)
    n = start
    pos = 0
    while pos < length:
        k = n.bit_length() - 1
        run = min((1 << (k + 1)) - n, length - pos)
        out[pos:pos + run] = k
        pos += run
        n += run
    return out


def classify(value: int, n: int) -> int:
    """Decode one sieved byte into mu(n)."""
    if n < 1 or n > VALIDITY_CEILING:
        raise SieveRangeError(f"n={n} outside [1, 10**16]")
    if not value & SQUAREFREE_FLAG:
        return 0
    lsb = value & 1
    threshold = (n.bit_length() - 1) - 5 - (2 if n > THRESHOLD_SWITCH else 0)
    if (value & LOG_MASK) < threshold:
        return 2 * lsb - 1
    return 1 - 2 * lsb


def classify_block(block: SieveBlock) -> np.ndarray:
    """Vectorised ``classify`` over a logged block; returns mu as int8."""
    if block.phase is not BlockPhase.LOGGED:
        raise ParameterError(f"block at {block.start} is {block.phase.value}, expected logged")
    if block.end > VALIDITY_CEILING:
        raise SieveRangeError(f"block end {block.end} exceeds 10**16")

    values = block.values
    threshold = floor_log2_range(block.start, block.length) - np.int16(5)
    switch = THRESHOLD_SWITCH - block.start + 1
    if switch < block.length:
        threshold[max(switch, 0):] -= 2

    lsb = (values & 1).astype(np.int8)
    unseen = (values & LOG_MASK).astype(np.int16) < threshold
    mu = np.where(unseen, 2 * lsb - 1, 1 - 2 * lsb).astype(np.int8)
    mu[(values & SQUAREFREE_FLAG) == 0] = 0
    block.phase = BlockPhase.CLASSIFIED
    return mu


def theorem1_margin(primes: Sequence[int]) -> int:
    """Log-sum surplus of a square-free n given its distinct prime factors.

    Returns sum(floor(log2 p) | 1) - floor(log2 n); 0 for n = 1.
    """
    if len(set(primes)) != len(primes):
        raise ParameterError("prime factors must be distinct")
    n = 1
    total = 0
    for p in primes:
        n *= p
        total += log_entry(p)
    return total - (n.bit_length() - 1)


@dataclass(frozen=True)
class ClassifiedBlock:
    index: int
    start: int
    mu: np.ndarray

    @property
    def end(self) -> int:
        return self.start + len(self.mu) - 1


def block_bounds(index: int, block_len: int, limit: int) -> tuple[int, int]:
    start = 1 + index * block_len
    return start, min(start + block_len - 1, limit)


def block_count(limit: int, block_len: int) -> int:
    return (limit + block_len - 1) // block_len


def check_block_len(block_len: int) -> None:
    if block_len < WHEEL_PERIOD or block_len % WHEEL_PERIOD:
        raise ParameterError(f"block_len {block_len} must be a positive multiple of {WHEEL_PERIOD}")
    if block_len > MAX_BLOCK_LEN:
        raise ParameterError(f"block_len {block_len} exceeds {MAX_BLOCK_LEN}")


def _sieve_task(args: tuple) -> ClassifiedBlock:
    index, start, end, logs, strided_limit, hits = args
    block = sieve_block(raw_block(start, end - start + 1), logs,
                        strided_limit=strided_limit, hits=hits)
    return ClassifiedBlock(index=index, start=start, mu=classify_block(block))


def iter_mobius_blocks(limit: int, block_len: int, *, threads: int = 1, first_block: int = 0,
                       bucketed: bool = False, bucket_threshold: Optional[int] = None) -> Iterator[ClassifiedBlock]:
    """Classified blocks covering [1, limit] in index order, from ``first_block`` on.

    Sieving runs on ``threads`` workers; the bucket schedule, when used, is
    advanced by the caller's thread only.
    """
    if limit < 1:
        raise ParameterError(f"limit must be >= 1, got {limit}")
    if limit > VALIDITY_CEILING:
        raise SieveRangeError(f"limit {limit} exceeds 10**16")
    check_block_len(block_len)

    logs = LogTable.up_to(sieving_bound(limit))
    total = block_count(limit, block_len)

    if not bucketed:
        tasks: Iterable[tuple] = (
            (i, *block_bounds(i, block_len, limit), logs, None, None)
            for i in range(first_block, total)
        )
        yield from ordered_map(_sieve_task, tasks, threads=threads, worker_type="sieve")
        return

    from mertens_lib.buckets import BucketSchedule

    threshold = block_len if bucket_threshold is None else bucket_threshold
    threshold = max(threshold, WHEEL_PRIMES[-1])
    schedule = BucketSchedule.for_primes(logs.primes, threshold, block_len, limit, first_block)

    def bucketed_tasks() -> Iterator[tuple]:
        for i in range(first_block, total):
            start, end = block_bounds(i, block_len, limit)
            hits = schedule.take_hits(i, start, end)
            yield (i, start, end, logs, threshold, hits)

    yield from ordered_map(_sieve_task, bucketed_tasks(), threads=threads, worker_type="sieve")


def mobius_table(limit: int, threads: int = 1) -> np.ndarray:
    """Dense mu(0..limit) as int8, with mu(0) = 0."""
    mu = np.zeros(limit + 1, dtype=np.int8)
    if limit < 1:
        return mu
    block_len = min(DEFAULT_BLOCK_LEN, -(-limit // WHEEL_PERIOD) * WHEEL_PERIOD)
    for block in iter_mobius_blocks(limit, block_len, threads=threads):
        mu[block.start:block.end + 1] = block.mu
    return mu


def mertens_table(limit: int, threads: int = 1) -> np.ndarray:
    """Dense M(0..limit) as int64."""
    return np.cumsum(mobius_table(limit, threads), dtype=np.int64)
