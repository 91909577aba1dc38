"""
Statistics over the zeros of M(n): V(x), M+(x), gap histograms and the
band multiplier of a gap length.

Between two consecutive zeros M keeps one sign, and the run ending just
before a zero z has sign -mu(z) because M(z - 1) = M(z) - mu(z) = -mu(z).
With mu recorded at each zero the sign of every n below the source limit is
known without the M table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt, prod
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import primerange

from mertens_lib.errors import IntegrityError, ParameterError
from mertens_lib.logger import get_logger
from mertens_lib.output import read_events
from mertens_lib.stats import MertensStats

DEFAULT_BAND = (1.3, 1.7)


class ZeroRangeError(ParameterError):
    """Raised when x lies beyond the range the zero list was recorded for."""
    pass


@dataclass(frozen=True)
class ZeroList:
    """Zeros of M(n) for n <= source_limit, optionally with mu at each zero."""

    zeros: np.ndarray
    source_limit: int
    zero_mu: Optional[np.ndarray] = None
    # sign of M on the run after the last zero, up to source_limit
    tail_sign: int = 0

    def __post_init__(self) -> None:
        zeros = self.zeros
        if len(zeros):
            if zeros[0] < 2:
                raise IntegrityError(f"first zero {zeros[0]} is below 2")
            if np.any(np.diff(zeros) <= 0):
                raise IntegrityError("zeros are not strictly increasing")
            if zeros[-1] > self.source_limit:
                raise IntegrityError(f"zero {zeros[-1]} beyond source limit {self.source_limit}")
        if self.zero_mu is not None and len(self.zero_mu) != len(zeros):
            raise IntegrityError(f"{len(self.zero_mu)} mu values for {len(zeros)} zeros")

    def __len__(self) -> int:
        return len(self.zeros)

    @classmethod
    def from_iterable(cls, zeros: Iterable[int], source_limit: int, zero_mu: Optional[Iterable[int]] = None,
                      tail_sign: int = 0) -> "ZeroList":
        mu = None if zero_mu is None else np.asarray(list(zero_mu), dtype=np.int8)
        return cls(zeros=np.asarray(list(zeros), dtype=np.int64), source_limit=source_limit,
                   zero_mu=mu, tail_sign=tail_sign)

    @classmethod
    def from_stats(cls, stats: MertensStats) -> "ZeroList":
        running = stats.running
        return cls.from_iterable(stats.zeros, running.n_last, stats.zero_mu,
                                 int(np.sign(running.M_last)))

    @classmethod
    def from_events(cls, path: Union[str, Path]) -> "ZeroList":
        """Read the JSON-lines stream written by ``sieve``; needs its summary event."""
        zeros: List[int] = []
        mus: List[int] = []
        summary = None
        for event in read_events(path):
            kind = event.get("kind")
            if kind == "zero":
                zeros.append(int(event["n"]))
                if "mu" in event:
                    mus.append(int(event["mu"]))
            elif kind == "summary":
                summary = event
        if summary is None:
            raise IntegrityError(f"{path}: no summary event; the sieve run did not finish")
        mu = mus if len(mus) == len(zeros) else None
        return cls.from_iterable(zeros, int(summary["n"]), mu, int(np.sign(int(summary["M"]))))

    def _check_x(self, x: int) -> None:
        if x > self.source_limit:
            raise ZeroRangeError(f"x={x} beyond the recorded range n <= {self.source_limit}")


def count_zeros(zeros: ZeroList, x: int) -> int:
    """V(x): the number of zeros below x."""
    zeros._check_x(x)
    return int(np.searchsorted(zeros.zeros, x, side="left"))


def _runs(zeros: ZeroList) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Maximal nonzero runs [start, end] and their signs, tail included."""
    if zeros.zero_mu is None:
        raise ParameterError("sign reconstruction needs mu at every zero")
    z = zeros.zeros
    starts = np.concatenate(([1], z + 1))
    ends = np.concatenate((z - 1, [zeros.source_limit]))
    signs = np.concatenate((-zeros.zero_mu.astype(np.int64), [zeros.tail_sign]))
    return starts, ends, signs


def positivity(zeros: ZeroList, x: int) -> Fraction:
    """M+(x): exact fraction of n <= x with M(n) > 0."""
    if x < 1:
        raise ParameterError(f"x must be >= 1, got {x}")
    zeros._check_x(x)
    starts, ends, signs = _runs(zeros)
    lengths = np.clip(np.minimum(ends, x) - starts + 1, 0, None)
    return Fraction(int(lengths[signs > 0].sum()), x)


def reconstruct_signs(zeros: ZeroList, x: int) -> np.ndarray:
    """sign(M(n)) for n = 1..x as int8, built from the runs alone."""
    zeros._check_x(x)
    starts, ends, signs = _runs(zeros)
    out = np.zeros(x + 1, dtype=np.int8)
    for start, end, sign in zip(starts, np.minimum(ends, x), signs):
        if start <= end:
            out[start:end + 1] = sign
    return out[1:]


@dataclass
class GapHistogram:
    m: int
    counts: Dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def get(self, g: int) -> int:
        return self.counts.get(g, 0)


def gap_histogram(zeros: ZeroList, m: int) -> GapHistogram:
    """G_m(g) over the first m zeros; m < 2 gives an empty histogram."""
    if m > len(zeros):
        raise ParameterError(f"m={m} but only {len(zeros)} zeros recorded")
    if m < 2:
        return GapHistogram(m=m)
    gaps, counts = np.unique(np.diff(zeros.zeros[:m]), return_counts=True)
    return GapHistogram(m=m, counts={int(g): int(c) for g, c in zip(gaps, counts)})


def prime_square_set(g: int) -> Tuple[int, ...]:
    """P_g: primes p with p^2 <= g and g = 1 mod p^2."""
    return tuple(p for p in primerange(2, isqrt(g) + 1) if (g - 1) % (p * p) == 0)


def prime_square_sets(limit: int) -> Dict[int, Tuple[int, ...]]:
    """P_g for every g <= limit with a nonempty set."""
    sets: Dict[int, List[int]] = {}
    for p in primerange(2, isqrt(limit) + 1):
        sq = p * p
        for g in range(sq + 1, limit + 1, sq):
            sets.setdefault(g, []).append(p)
    return {g: tuple(ps) for g, ps in sets.items()}


def multiplier_of(primes: Sequence[int]) -> Fraction:
    """Subset sum of prod 1/(p^2 - 2), checked against the product form."""
    weights = [Fraction(1, p * p - 2) for p in primes]
    subset_sum = sum((prod(c, start=Fraction(1)) for r in range(len(weights) + 1)
                      for c in itertools.combinations(weights, r)), Fraction(0))
    product = prod((1 + w for w in weights), start=Fraction(1))
    if subset_sum != product:
        raise IntegrityError(f"multiplier forms disagree for P = {tuple(primes)}")
    return product


def band_multiplier(g: int) -> Fraction:
    if g < 1:
        raise ParameterError(f"g must be >= 1, got {g}")
    return multiplier_of(prime_square_set(g))


@dataclass
class BandReport:
    m: int
    pairs: int
    mean_ratio: Optional[float]
    band: Tuple[float, float]

    @property
    def passed(self) -> bool:
        return self.mean_ratio is not None and self.band[0] <= self.mean_ratio <= self.band[1]

    def to_dict(self) -> dict:
        return {"m": self.m, "pairs": self.pairs, "mean_ratio": self.mean_ratio,
                "band": list(self.band), "passed": self.passed}


def band_ratio(zeros: ZeroList, m: int, band: Tuple[float, float] = DEFAULT_BAND) -> BandReport:
    """Mean G_m(g) / G_m(g') for P_g = {2} against same-parity neighbours g' = g +- 2 with P_g' empty."""
    hist = gap_histogram(zeros, m)
    ratios = []
    for g, count in sorted(hist.counts.items()):
        if prime_square_set(g) != (2,):
            continue
        neighbours = [hist.get(h) for h in (g - 2, g + 2) if h >= 1 and not prime_square_set(h)]
        base = sum(neighbours) / len(neighbours) if neighbours else 0
        if base > 0:
            ratios.append(count / base)
    mean = float(np.mean(ratios)) if ratios else None
    report = BandReport(m=m, pairs=len(ratios), mean_ratio=mean, band=band)
    get_logger().info(f"Band ratio over {report.pairs} gap pairs: {mean}", extra_data=report.to_dict())
    return report


def vcount_rows(zeros: ZeroList) -> List[Tuple[int, int, int]]:
    """(k, 10^k, V(10^k)) for every power of ten within the recorded range."""
    rows = []
    k = 1
    while 10 ** k <= zeros.source_limit:
        rows.append((k, 10 ** k, count_zeros(zeros, 10 ** k)))
        k += 1
    return rows


def positivity_rows(zeros: ZeroList, xs: Sequence[int]) -> List[Tuple[int, int, float]]:
    rows = []
    for x in xs:
        frac = positivity(zeros, x)
        rows.append((x, frac.numerator * (x // frac.denominator), float(frac)))
    return rows


def gap_rows(hist: GapHistogram) -> List[Tuple[int, int, str]]:
    return [(g, c, str(band_multiplier(g))) for g, c in sorted(hist.counts.items())]
