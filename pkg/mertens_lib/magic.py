"""
Division by invariant integers.

A ``MagicDivisor`` replaces ``n // d`` for 64-bit unsigned ``n`` with one
wide multiplication, one addition and two shifts:

    q = ((n * mul + add) >> 64) >> shift

``mul`` and ``add`` fit in 64 bits. For ``d`` not a power of two with
``s = floor(log2 d)`` the constant is ``floor(2**(64+s) / d)`` rounded up
when the round-up error is at most ``2**s``; otherwise it stays rounded down
and ``add = mul`` computes ``(n + 1) * mul``. Both branches are exact for
every ``n < 2**64``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from mertens_lib.errors import ParameterError

WORD_BITS = 64
WORD_MAX = (1 << WORD_BITS) - 1
MAX_DIVISOR = (1 << 63) - 1


class DivisorRangeError(ParameterError):
    """Raised when a divisor or dividend is outside the supported range."""
    pass


@dataclass(frozen=True)
class MagicDivisor:
    d: int
    mul: int
    add: int
    shift: int

    def __call__(self, n: int) -> int:
        return magic_div(self, n)


def magic_make(d: int) -> MagicDivisor:
    """Precompute the multiply-add-shift constants for divisor ``d``.

    Args:
        d: divisor with 2 <= d < 2**63

    Returns:
        MagicDivisor whose evaluation equals n // d for all 0 <= n < 2**64
    """
    if not 2 <= d <= MAX_DIVISOR:
        raise DivisorRangeError(f"divisor {d} outside [2, 2**63 - 1]")

    s = d.bit_length() - 1
    if d & (d - 1) == 0:
        # (n + 1) * (2**64 - 1) >> 64 == n for n < 2**64
        return MagicDivisor(d=d, mul=WORD_MAX, add=WORD_MAX, shift=s)

    m_down, rem = divmod(1 << (WORD_BITS + s), d)
    round_up_error = d - rem
    if round_up_error <= (1 << s):
        mul, add = m_down + 1, 0
    else:
        mul, add = m_down, m_down
    assert mul <= WORD_MAX and add <= WORD_MAX
    return MagicDivisor(d=d, mul=mul, add=add, shift=s)


def magic_div(md: MagicDivisor, n: int) -> int:
    """Evaluate floor(n / md.d) for 0 <= n < 2**64."""
    if not 0 <= n <= WORD_MAX:
        raise DivisorRangeError(f"dividend {n} outside [0, 2**64 - 1]")
    return ((n * md.mul + md.add) >> WORD_BITS) >> md.shift


class MagicTable:
    """Lazily built magic constants for small denominators.

    Building an entry costs one true division, counted in ``divisions``.
    Denominator 1 is the identity.
    """

    def __init__(self, limit: int):
        self.limit = limit
        self.divisions = 0
        self._table: Dict[int, MagicDivisor] = {}

    def get(self, d: int) -> Optional[MagicDivisor]:
        if d < 2 or d > self.limit:
            return None
        md = self._table.get(d)
        if md is None:
            md = magic_make(d)
            self.divisions += 1
            self._table[d] = md
        return md

    def quotient(self, n: int, d: int) -> int:
        if d == 1:
            return n
        md = self.get(d)
        if md is None:
            raise DivisorRangeError(f"denominator {d} not covered by table limit {self.limit}")
        return magic_div(md, n)

    def __len__(self) -> int:
        return len(self._table)
