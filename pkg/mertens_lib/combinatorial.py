"""
Isolated values of the Mertens function in O(x^(2/3+eps)).

With nu_y = isqrt(y), kappa_y = y // (nu_y + 1) and nu_x < u < x:

    S(y, u) = 1 - sum_{y/u < m <= kappa_y} M(y // m) + kappa_y * M(nu_y)
                - sum_{k <= nu_y} (y // k) * mu(k)

    M(x) = sum_{n <= x/u, n square-free} mu(n) * S(x // n, u)

Only M below u and mu up to max(nu_x, x // u) are needed. Two engines
evaluate the S terms:

- ``numpy`` streams M(1..u-1) in sieve blocks and adds every block's
  contribution to all pending S(x // n, u) at once,
- ``walk`` is the scalar reference: quotients come from a second-difference
  cursor above cbrt(2y) and from magic division below it, with every true
  division counted.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from math import isqrt
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from mertens_lib.errors import ParameterError
from mertens_lib.logger import get_logger
from mertens_lib.magic import WORD_MAX, MagicTable
from mertens_lib.metrics import get_run_metrics
from mertens_lib.sieve import WHEEL_PERIOD, iter_mobius_blocks, mobius_table
from mertens_lib.utils import icbrt

MAX_SIEVE_BLOCK = 1 << 22
CHUNK_ELEMENTS = 1 << 20
OVERFLOW_BOUND = 1 << 62
NESTED_DIVISOR = 128
# Below this x no u with nu_x < u < x exists.
MIN_ISOLATED_X = 4


class ProviderGapError(ParameterError):
    """Raised when a mu or M value outside the provider's table is requested."""
    pass


def nu_kappa(y: int) -> Tuple[int, int]:
    nu = isqrt(y)
    return nu, y // (nu + 1)


def default_u(x: int) -> int:
    """ceil(0.5 * x**(2/3)), pushed into (nu_x, x) where possible."""
    cube = x * x
    r = icbrt(cube // 8)
    if 8 * r * r * r < cube:
        r += 1
    return max(r, isqrt(x) + 1)


def check_u(x: int, u: int) -> None:
    nu = isqrt(x)
    if not nu < u < x:
        raise ParameterError(f"u={u} must satisfy nu_x={nu} < u < x={x}")


def sieve_block_len(u: int) -> int:
    """About 96 * sqrt(2u), capped at 2**22 and rounded up to whole wheel periods."""
    raw = min(math.ceil(96 * math.sqrt(2 * u)), MAX_SIEVE_BLOCK)
    return max(WHEEL_PERIOD, -(-raw // WHEEL_PERIOD) * WHEEL_PERIOD)


@dataclass
class IsolatedQuery:
    x: int
    u: Optional[int] = None
    sieve_block: Optional[int] = None

    def __post_init__(self) -> None:
        if self.x < 1:
            raise ParameterError(f"x must be >= 1, got {self.x}")
        if self.x >= MIN_ISOLATED_X:
            if self.u is None:
                self.u = default_u(self.x)
            check_u(self.x, self.u)
            if self.sieve_block is None:
                self.sieve_block = sieve_block_len(self.u)
            elif self.sieve_block < WHEEL_PERIOD or self.sieve_block % WHEEL_PERIOD:
                raise ParameterError(f"sieve block {self.sieve_block} must be a multiple of {WHEEL_PERIOD}")
        nu, kappa = nu_kappa(self.x)
        assert kappa <= nu <= kappa + 1

    @property
    def nu(self) -> int:
        return isqrt(self.x)

    @property
    def kappa(self) -> int:
        return nu_kappa(self.x)[1]


@dataclass
class DivisionCounter:
    """Counts true integer divisions, quotients used and quotients skipped."""
    divisions: int = 0
    quotients: int = 0
    skipped: int = 0

    def divide(self, n: int, d: int) -> int:
        self.divisions += 1
        return n // d


@dataclass
class IsolatedResult:
    x: int
    M: int
    u: Optional[int]
    engine: str
    seconds: float = 0.0
    nested_x: Optional[int] = None
    nested_M: Optional[int] = None
    counter: DivisionCounter = field(default_factory=DivisionCounter)

    def to_dict(self) -> dict:
        payload = {"x": self.x, "M": self.M, "u": self.u, "engine": self.engine,
                   "seconds": round(self.seconds, 6)}
        if self.nested_x is not None:
            payload["nested"] = {"x": self.nested_x, "M": self.nested_M}
        if self.engine == "walk":
            payload["divisions"] = self.counter.divisions
        payload["quotients"] = self.counter.quotients
        payload["skipped"] = self.counter.skipped
        return payload


class MobiusTable:
    """Dense mu and M values over [0, limit] used as the walk engine's provider."""

    def __init__(self, mu: np.ndarray):
        self.mu = mu
        self.M = np.cumsum(mu, dtype=np.int64)
        self.limit = len(mu) - 1

    @classmethod
    def up_to(cls, limit: int, threads: int = 1) -> "MobiusTable":
        return cls(mobius_table(limit, threads))

    def require(self, what: str, lo: int, hi: int) -> None:
        if hi > self.limit:
            raise ProviderGapError(
                f"{what} values for [{max(lo, self.limit + 1)}, {hi}] missing; table ends at {self.limit}")


class QuotientCursor:
    """Walks q = y // n for n = n0, n0 + 1, ... without dividing.

    Keeps y = q*n + r and the last step delta = q(n-1) - q(n). The next
    quotient is guessed as q - delta and corrected by whole steps; above
    cbrt(2y) the correction is at most a couple of steps.
    """

    __slots__ = ("y", "n", "q", "r", "delta")

    def __init__(self, y: int, n0: int, counter: Optional[DivisionCounter] = None):
        if n0 < 1:
            raise ParameterError(f"cursor start must be >= 1, got {n0}")
        self.y = y
        self.n = n0
        self.q, self.r = divmod(y, n0)
        # quotient at n0 + 1 fixes the first step exactly
        self.delta = self.q - y // (n0 + 1)
        if counter is not None:
            counter.divisions += 2

    def advance(self) -> int:
        n1 = self.n + 1
        q = self.q - self.delta
        r = self.r - self.q + self.delta * n1
        while r < 0:
            q -= 1
            r += n1
        while r >= n1:
            q += 1
            r -= n1
        self.delta = self.q - q
        self.n, self.q, self.r = n1, q, r
        return q


def walk_threshold(y: int) -> int:
    """Smallest n with n**3 >= 2y."""
    c = icbrt(2 * y)
    return c if c * c * c >= 2 * y else c + 1


def quotient_walk(y: int, n_lo: int, n_hi: int, *, magic: Optional[MagicTable] = None,
                  counter: Optional[DivisionCounter] = None) -> Iterator[Tuple[int, int]]:
    """Yield (n, y // n) for n_lo <= n <= n_hi.

    Below cbrt(2y) quotients come from ``magic`` (or a counted direct
    division); from there on from one ``QuotientCursor``.
    """
    if n_lo > n_hi:
        return
    if n_lo < 1:
        raise ParameterError(f"denominators must be >= 1, got {n_lo}")
    c = walk_threshold(y)
    n = n_lo
    while n <= n_hi and n < c:
        if n == 1:
            q = y
        elif magic is not None and y <= WORD_MAX and n <= magic.limit:
            before = magic.divisions
            q = magic.quotient(y, n)
            if counter is not None:
                counter.divisions += magic.divisions - before
        else:
            q = y // n
            if counter is not None:
                counter.divisions += 1
        yield n, q
        n += 1
    if n > n_hi:
        return
    cursor = QuotientCursor(y, n, counter)
    yield n, cursor.q
    while cursor.n < n_hi:
        yield cursor.n + 1, cursor.advance()


def compute_S(y: int, u: int, provider: MobiusTable, *, magic: Optional[MagicTable] = None,
              counter: Optional[DivisionCounter] = None) -> int:
    """S(y, u) from the four-term formula, one quotient at a time."""
    counter = counter if counter is not None else DivisionCounter()
    nu = isqrt(y)
    kappa = counter.divide(y, nu + 1)
    first_m = counter.divide(y, u) + 1
    provider.require("mu", 1, nu)
    if first_m <= kappa:
        provider.require("M", y // kappa, u - 1)
    mu = provider.mu
    M = provider.M

    t1 = 0
    for k, q in quotient_walk(y, 1, nu, magic=magic, counter=counter):
        m = mu[k]
        if m == 0:
            counter.skipped += 1
            continue
        counter.quotients += 1
        t1 += int(m) * q

    t3 = 0
    for _, q in quotient_walk(y, first_m, kappa, magic=magic, counter=counter):
        counter.quotients += 1
        t3 += int(M[q])

    return 1 - t3 + kappa * int(M[nu]) - t1


def _isolated_walk(xs: Sequence[int], u: int, threads: int,
                   counter: DivisionCounter) -> Dict[int, int]:
    top = max(xs)
    provider = MobiusTable.up_to(max(u - 1, isqrt(top), top // u), threads)
    magic = MagicTable(walk_threshold(top))
    results = {}
    for x in xs:
        total = 0
        for n in range(1, x // u + 1):
            mu_n = int(provider.mu[n])
            if mu_n == 0:
                counter.skipped += 1
                continue
            y = counter.divide(x, n)
            total += mu_n * compute_S(y, u, provider, magic=magic, counter=counter)
        results[x] = total
    return results


def _integer_sqrt(values: np.ndarray) -> np.ndarray:
    root = np.floor(np.sqrt(values.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        root -= (root * root > values).astype(np.int64)
        root += ((root + 1) * (root + 1) <= values).astype(np.int64)
    return root


@dataclass
class _Targets:
    owner: np.ndarray
    mu: np.ndarray
    y: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    first_m: np.ndarray


def _overflow_check(x: int) -> None:
    nu = max(isqrt(x), 2)
    if x * (math.log(nu) + 1) >= OVERFLOW_BOUND:
        raise ParameterError(f"x={x} too large for 64-bit accumulation")


def _stream_T3(targets: _Targets, u: int, block_len: int, threads: int,
               counter: DivisionCounter) -> np.ndarray:
    """sum_{y/u < m <= kappa_y} M(y // m) for every target, M streamed in blocks."""
    acc = np.zeros(len(targets.y), dtype=np.int64)
    live = targets.first_m <= targets.kappa
    if u < 2 or not live.any():
        return acc
    Y = targets.y[live]
    first = targets.first_m[live]
    last = targets.kappa[live]
    idx = np.flatnonzero(live)
    # smallest value any target asks for
    floor_value = int((Y // last).min())

    M_prev = 0
    for block in iter_mobius_blocks(u - 1, block_len, threads=threads):
        lo, hi = block.start, block.end
        M_block = M_prev + np.cumsum(block.mu, dtype=np.int64)
        M_prev = int(M_block[-1])
        if hi < floor_value:
            continue

        a = np.maximum(first, Y // (hi + 1) + 1)
        b = np.minimum(last, Y // lo)
        counts = b - a + 1
        active = np.flatnonzero(counts > 0)
        if not len(active):
            continue
        counts = counts[active]
        ends = np.cumsum(counts)
        i = 0
        while i < len(active):
            base = int(ends[i - 1]) if i else 0
            j = max(int(np.searchsorted(ends, base + CHUNK_ELEMENTS, side="right")), i + 1)
            sel = active[i:j]
            cnt = counts[i:j]
            total = int(cnt.sum())
            starts = np.cumsum(cnt) - cnt
            m = np.repeat(a[sel] - starts, cnt) + np.arange(total, dtype=np.int64)
            values = M_block[np.repeat(Y[sel], cnt) // m - lo]
            acc[idx[sel]] += np.add.reduceat(values, starts)
            counter.quotients += total
            i = j
    return acc


def _isolated_numpy(xs: Sequence[int], u: int, block_len: int, threads: int,
                    counter: DivisionCounter) -> Dict[int, int]:
    top = max(xs)
    _overflow_check(top)
    small = max(isqrt(top), top // u)
    mu_small = mobius_table(small, threads)
    M_small = np.cumsum(mu_small, dtype=np.int64)

    owners, mus, ys = [], [], []
    for owner, x in enumerate(xs):
        n = np.flatnonzero(mu_small[1:x // u + 1]) + 1
        counter.skipped += x // u - len(n)
        owners.append(np.full(len(n), owner, dtype=np.int64))
        mus.append(mu_small[n].astype(np.int64))
        ys.append(x // n)
    Y = np.concatenate(ys)
    nu = _integer_sqrt(Y)
    kappa = Y // (nu + 1)
    targets = _Targets(owner=np.concatenate(owners), mu=np.concatenate(mus), y=Y,
                       nu=nu, kappa=kappa, first_m=Y // u + 1)

    # sum_{k <= nu_y} (y // k) mu(k) over square-free k only
    sf = np.flatnonzero(mu_small[1:isqrt(top) + 1]) + 1
    sf_mu = mu_small[sf].astype(np.int64)
    cut = np.searchsorted(sf, nu, side="right")
    t1 = np.empty(len(Y), dtype=np.int64)
    for i, (y, c) in enumerate(zip(Y.tolist(), cut.tolist())):
        t1[i] = int(np.dot(y // sf[:c], sf_mu[:c]))
    counter.quotients += int(cut.sum())
    counter.skipped += int(nu.sum() - cut.sum())

    t3 = _stream_T3(targets, u, block_len, threads, counter)
    S = 1 - t3 + kappa * M_small[nu] - t1

    results = {}
    for owner, x in enumerate(xs):
        mask = targets.owner == owner
        results[x] = int(np.dot(targets.mu[mask], S[mask]))
    return results


def _direct(x: int) -> int:
    return int(np.sum(mobius_table(x), dtype=np.int64))


def _shares_u(x: int, u: int) -> bool:
    return x >= MIN_ISOLATED_X and isqrt(x) < u < x


def mertens_isolated(q: IsolatedQuery, *, engine: str = "numpy", threads: int = 1,
                     nested: bool = False) -> IsolatedResult:
    """Exact M(q.x); with ``nested`` also M(q.x // 128), in the same pass when
    the same u is valid for both."""
    if engine not in ("numpy", "walk"):
        raise ParameterError(f"unknown engine {engine!r}")
    logger = get_logger()
    counter = DivisionCounter()
    started = time.perf_counter()

    x = q.x
    x_nested = x // NESTED_DIVISOR if nested else None
    xs: List[int] = [x]

    if x < MIN_ISOLATED_X:
        values = {x: _direct(x)}
    else:
        if x_nested is not None and _shares_u(x_nested, q.u):
            xs.append(x_nested)
        with logger.phase("isolated", x=x, u=q.u, engine=engine, targets=len(xs)) as details:
            if engine == "numpy":
                values = _isolated_numpy(xs, q.u, q.sieve_block, threads, counter)
            else:
                values = _isolated_walk(xs, q.u, threads, counter)
            details["quotients"] = counter.quotients

    result = IsolatedResult(x=x, M=values[x], u=q.u, engine=engine, counter=counter)
    if x_nested is not None:
        result.nested_x = x_nested
        if x_nested in values:
            result.nested_M = values[x_nested]
        elif x_nested < 1:
            result.nested_M = 0
        else:
            result.nested_M = mertens_isolated(IsolatedQuery(x_nested), engine=engine,
                                               threads=threads).M
    result.seconds = time.perf_counter() - started
    get_run_metrics().record_phase("isolated", result.seconds, 1)
    get_run_metrics().increment("quotients", counter.quotients)
    return result


def mertens_at(x: int, u: Optional[int] = None, *, engine: str = "numpy", threads: int = 1) -> int:
    """Shorthand for ``mertens_isolated(IsolatedQuery(x, u)).M``."""
    return mertens_isolated(IsolatedQuery(x, u), engine=engine, threads=threads).M
