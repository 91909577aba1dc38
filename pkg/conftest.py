"""Shared fixtures: brute-force oracles and a small zeta-zeros file."""

from functools import lru_cache

import mpmath
import numpy as np
import pytest
from sympy import factorint, primerange

from mertens_lib.zeros import ZeroRecord, format_zeros

ZERO_DIGITS = 50


@lru_cache(maxsize=4)
def brute_mobius(limit: int) -> np.ndarray:
    """mu(0..limit) by marking prime multiples and prime-square multiples."""
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in primerange(2, limit + 1):
        mu[::p] *= -1
        mu[::p * p] = 0
    mu.setflags(write=False)
    return mu


def factor_mobius(n: int) -> int:
    factors = factorint(n)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


@lru_cache(maxsize=None)
def _zero_record(k: int) -> ZeroRecord:
    with mpmath.workdps(ZERO_DIGITS + 5):
        rho = mpmath.zetazero(k)
        zp = mpmath.zeta(rho, derivative=1)
        gamma = mpmath.nstr(rho.imag, ZERO_DIGITS, strip_zeros=False)
        re = mpmath.nstr(zp.real, ZERO_DIGITS, strip_zeros=False)
        im = mpmath.nstr(zp.imag, ZERO_DIGITS, strip_zeros=False)
    return ZeroRecord(index=k, gamma=gamma, zeta_prime=(re, im), precision_digits=ZERO_DIGITS)


def zero_records(count: int):
    return [_zero_record(k) for k in range(1, count + 1)]


@pytest.fixture
def mobius_oracle():
    return brute_mobius


@pytest.fixture
def zeros_file(tmp_path):
    """Write the first ``count`` zeros to a file and return its path."""
    def make(count: int = 30):
        path = tmp_path / f"zeros_{count}.txt"
        path.write_text(format_zeros(zero_records(count), ZERO_DIGITS), encoding="utf-8")
        return path
    return make
