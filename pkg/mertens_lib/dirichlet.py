"""
The mod-6 weight h, the Dirichlet inverse of f(n) = h(n-1) - h(n), and the
alternative isolated-value identity

    M(x) = 1/2 * sum_{n <= x/u} finv(n) * G(x // n, u)

evaluated at desk scale with exact rationals.

f(n) is 2, 0, -1, 0, 2, -3 for n = 1..6 mod 6, so sum f(n) n^-s equals
zeta(s) * (2 - 2*2^-s - 3*3^-s). Hence finv = mu * E / 2 where E lives on
3-smooth numbers, all denominators are powers of two, and finv vanishes
exactly where mu does away from the 3-smooth part, plus at n = m * 2^a with
a >= 1 and m coprime to 6.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Iterable, List, Optional, Union

import numpy as np

from mertens_lib.combinatorial import check_u, default_u
from mertens_lib.errors import IntegrityError, ParameterError
from mertens_lib.logger import get_logger
from mertens_lib.sieve import mobius_table

# int64 entries stay below this; larger tables fall back to Python ints
INT64_GUARD = 1 << 50
DESK_LIMIT = 10**5


class Interpretation(enum.Enum):
    """Readings of the inner sum of G(y, u).

    LITERAL_UNIT_K: the printed formula with k = 1.
    LITERAL_INDEX_K: the printed formula with k as summation index and the
        numerator read as y.
    DERIVED: k as summation index, with the constant and the boundary term
        rebuilt from sum_{n <= y} f(n) M(y/n) = sum_{m <= y} (f * mu)(m).
    """
    LITERAL_UNIT_K = "literal-unit-k"
    LITERAL_INDEX_K = "literal-index-k"
    DERIVED = "derived"


def h(t):
    """3*floor(t/3) - 2*floor((t-1)/2); works on ints and numpy int arrays."""
    return 3 * (t // 3) - 2 * ((t - 1) // 2)


def f_value(n: int) -> int:
    return h(n - 1) - h(n)


def f_values(limit: int) -> np.ndarray:
    """f(0..limit) with f(0) = 0."""
    n = np.arange(limit + 1, dtype=np.int64)
    values = h(n - 1) - h(n)
    values[0] = 0
    return values


class _Int64Overflow(Exception):
    pass


@dataclass
class DirichletInverseTable:
    """finv(n) * 2**scale_bits as integers for n <= limit."""

    limit: int
    scale_bits: int
    scaled: np.ndarray

    def value(self, n: int) -> Fraction:
        if not 1 <= n <= self.limit:
            raise ParameterError(f"n={n} outside [1, {self.limit}]")
        return Fraction(int(self.scaled[n]), 1 << self.scale_bits)

    def __getitem__(self, n: int) -> Fraction:
        return self.value(n)

    def nonzero(self) -> np.ndarray:
        return np.flatnonzero(self.scaled[1:] != 0) + 1

    def zero_density(self) -> float:
        return 1.0 - len(self.nonzero()) / self.limit


def _inverse(limit: int, f: np.ndarray, scale_bits: int, dtype) -> np.ndarray:
    scaled = np.zeros(limit + 1, dtype=dtype)
    acc = np.zeros(limit + 1, dtype=dtype)
    scaled[1] = 1 << (scale_bits - 1)
    for d in range(1, limit + 1):
        if d > 1:
            a = int(acc[d])
            if a % 2:
                raise IntegrityError(f"finv({d}) needs more than {scale_bits} fractional bits")
            value = -(a // 2)
            if dtype is not object and abs(value) >= INT64_GUARD:
                raise _Int64Overflow(d)
            scaled[d] = value
        value = scaled[d]
        if value == 0:
            continue
        top = limit // d
        if top >= 2:
            acc[2 * d::d] += f[2:top + 1] * value
    return scaled


def dirichlet_inverse_f(limit: int) -> DirichletInverseTable:
    """finv(1..limit) from finv(n) = -(1/f(1)) * sum_{d | n, d < n} f(n/d) finv(d)."""
    if limit < 1:
        raise ParameterError(f"limit must be >= 1, got {limit}")
    scale_bits = limit.bit_length() + 1
    f = f_values(limit)
    try:
        scaled = _inverse(limit, f, scale_bits, np.int64)
    except _Int64Overflow as exc:
        get_logger().debug(f"finv exceeds int64 guard at n={exc.args[0]}; using Python integers")
        scaled = _inverse(limit, f.astype(object), scale_bits, object)
    return DirichletInverseTable(limit=limit, scale_bits=scale_bits, scaled=scaled)


def convolve_with_f(table: DirichletInverseTable, n: int) -> Fraction:
    """(f * finv)(n), which is 1 for n = 1 and 0 otherwise."""
    total = Fraction(0)
    for d in range(1, isqrt(n) + 1):
        if n % d:
            continue
        e = n // d
        total += f_value(e) * table.value(d)
        if e != d:
            total += f_value(d) * table.value(e)
    return total


def _constant(y: int) -> int:
    """sum_{m <= y} (f * mu)(m) with f * mu = 2[m=1] - 2[m=2] - 3[m=3]."""
    if y < 2:
        return 2
    if y < 3:
        return 0
    return -3


def G_value(y: int, u: int, mu: np.ndarray, M: np.ndarray,
            interpretation: Interpretation = Interpretation.DERIVED) -> int:
    """G(y, u) under the chosen reading; ``mu`` and ``M`` must cover [0, y]."""
    nu = isqrt(y)
    kappa = y // (nu + 1)
    n = np.arange(y // u + 1, kappa + 1, dtype=np.int64)
    middle = int(np.dot(h(n) - h(n - 1), M[y // n])) if len(n) else 0
    k = np.arange(1, nu + 1, dtype=np.int64)
    mu_k = mu[1:nu + 1].astype(np.int64)

    if interpretation is Interpretation.DERIVED:
        tail = int(np.dot(mu_k, h(y // k)))
        return 2 * (_constant(y) + middle - h(kappa) * int(M[nu]) + tail)
    if interpretation is Interpretation.LITERAL_UNIT_K:
        tail = int(np.dot(mu_k, h(k)))
    else:
        tail = int(np.dot(mu_k, h(y // k)))
    return -3 + middle + h(nu) * int(M[kappa]) + tail


@dataclass(frozen=True)
class BVMismatch:
    x: int
    u: int
    got: Fraction
    expected: int

    def to_dict(self) -> dict:
        return {"x": self.x, "u": self.u, "got": str(self.got), "expected": self.expected}


def benito_varona_M(x: int, u: Optional[int] = None,
                    interpretation: Interpretation = Interpretation.DERIVED, *,
                    mu: Optional[np.ndarray] = None,
                    inverse: Optional[DirichletInverseTable] = None) -> Union[int, BVMismatch]:
    """M(x) from the alternative identity, or a mismatch against the sieve value."""
    if x > DESK_LIMIT:
        raise ParameterError(f"x={x} above desk limit {DESK_LIMIT}")
    u = default_u(x) if u is None else u
    check_u(x, u)
    if mu is None or len(mu) <= x:
        mu = mobius_table(x)
    M = np.cumsum(mu, dtype=np.int64)
    if inverse is None or inverse.limit < x // u:
        inverse = dirichlet_inverse_f(max(x // u, 1))

    total = Fraction(0)
    for n in range(1, x // u + 1):
        scaled = int(inverse.scaled[n])
        if scaled == 0:
            continue
        total += Fraction(scaled, 1 << inverse.scale_bits) * G_value(x // n, u, mu, M, interpretation)
    got = total / 2
    expected = int(M[x])
    if got == expected:
        return expected
    return BVMismatch(x=x, u=u, got=got, expected=expected)


@dataclass
class BVReport:
    interpretation: Interpretation
    checked: int = 0
    mismatches: List[BVMismatch] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.mismatches

    def to_dict(self, max_mismatches: int = 20) -> dict:
        return {
            "interpretation": self.interpretation.value,
            "checked": self.checked,
            "mismatches": len(self.mismatches),
            "passed": self.passed,
            "examples": [m.to_dict() for m in self.mismatches[:max_mismatches]],
        }


def benito_varona_sweep(xs: Iterable[int], u_rule: Callable[[int], int] = default_u,
                        interpretation: Interpretation = Interpretation.DERIVED) -> BVReport:
    """Check the identity for every x in ``xs`` (x >= 4) and collect mismatches."""
    xs = sorted(xs)
    report = BVReport(interpretation=interpretation)
    if not xs:
        return report
    top = xs[-1]
    mu = mobius_table(top)
    us = [u_rule(x) for x in xs]
    inverse = dirichlet_inverse_f(max(max(x // u for x, u in zip(xs, us)), 1))
    for x, u in zip(xs, us):
        outcome = benito_varona_M(x, u, interpretation, mu=mu, inverse=inverse)
        report.checked += 1
        if isinstance(outcome, BVMismatch):
            report.mismatches.append(outcome)
    get_logger().info(f"Alternative identity ({interpretation.value}): "
                      f"{report.checked - len(report.mismatches)}/{report.checked} agree",
                      extra_data=report.to_dict(max_mismatches=3))
    return report
