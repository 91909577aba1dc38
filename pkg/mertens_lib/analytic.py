"""
Truncated explicit formulas over zeta zeros.

- ``ingham_h``: 2 * sum a_i f(gamma_i/gamma_N) cos(gamma_i y + psi_i), the
  certified evaluation. gamma_i * y is reduced mod 2pi in binary fixed point
  with enough fractional bits that no integer part of the product is lost.
- ``q_tilde``: the unweighted sum at y = log x, an estimate of M(x)/sqrt(x).
- ``titchmarsh_M``: M(x) from the zero sum, R(x) and the trivial-zero series.
- ``ingham_h_many`` / ``q_tilde_many``: float64 versions for sampling.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath
import numpy as np
from sympy import factorint

from mertens_lib.errors import ParameterError, PrecisionError
from mertens_lib.zeros import CosTerm

RealLike = Union[int, float, str, Fraction, mpmath.mpf]

EXTRA_BITS = 64
# decimal digits of gamma needed beyond the integer digits of y
GUARD_DIGITS = 10
SUM_DPS = 30
FLOAT_CHUNK = 1 << 12


class KernelDomainError(ParameterError):
    """Raised when the kernel argument lies outside [0, 1]."""
    pass


def as_fraction(value: RealLike) -> Fraction:
    """Exact rational value of an int, decimal string, float, Fraction or mpf."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, mpmath.mpf):
        man, exp = value.man_exp
        return Fraction(man) * Fraction(2) ** exp
    raise ParameterError(f"cannot use {type(value).__name__} as an exact real")


def ingham_kernel(t: RealLike) -> mpmath.mpf:
    """(1 - t) cos(pi t) + sin(pi t) / pi for 0 <= t <= 1."""
    t = mpmath.mpf(t) if not isinstance(t, Fraction) else mpmath.mpf(t.numerator) / t.denominator
    if t < 0 or t > 1:
        raise KernelDomainError(f"kernel argument {t} outside [0, 1]")
    return (1 - t) * mpmath.cos(mpmath.pi * t) + mpmath.sin(mpmath.pi * t) / mpmath.pi


def required_digits(y: Fraction) -> int:
    return len(str(abs(y.numerator) // y.denominator)) + GUARD_DIGITS


def _check_terms(terms: Sequence[CosTerm], count: int, what: str) -> None:
    if count < 0 or count > len(terms):
        raise ParameterError(f"{what}={count} but only {len(terms)} terms available")
    for left, right in zip(terms[:count], terms[1:count]):
        if right.gamma <= left.gamma:
            raise ParameterError(f"terms must be ordered by gamma (index {right.index})")


def reduced_angles(y: RealLike, terms: Sequence[CosTerm], extra_bits: int = EXTRA_BITS) -> list:
    """gamma_i * y + psi_i mod 2pi for every term, as mpf values in [0, 2pi)."""
    y = as_fraction(y)
    need = required_digits(y)
    short = next((t for t in terms if t.digits < need), None)
    if short is not None:
        raise PrecisionError(
            f"y with {need - GUARD_DIGITS} integer digits needs gamma to {need} digits; "
            f"zero {short.index} has {short.digits}")
    p, q = y.numerator, y.denominator
    frac_bits = abs(p).bit_length() + extra_bits
    scale = 1 << frac_bits
    angles = []
    with mpmath.workprec(frac_bits + 32):
        two_pi = int(mpmath.floor(2 * mpmath.pi * scale))
        fixed = []
        for term in terms:
            gamma_fx = int(mpmath.floor(term.gamma * scale))
            psi_fx = int(mpmath.floor(term.psi * scale))
            fixed.append(((gamma_fx * p) // q + psi_fx) % two_pi)
    with mpmath.workprec(extra_bits + 32):
        for theta in fixed:
            angles.append(mpmath.mpf(theta) / scale)
    return angles


def ingham_h(y: RealLike, N_eval: int, terms: Sequence[CosTerm], *, kernel: bool = True,
             extra_bits: int = EXTRA_BITS) -> mpmath.mpf:
    """h(y, N) over the first N_eval terms (ordered by gamma)."""
    _check_terms(terms, N_eval, "N_eval")
    if N_eval == 0:
        return mpmath.mpf(0)
    used = terms[:N_eval]
    angles = reduced_angles(y, used, extra_bits)
    with mpmath.workdps(SUM_DPS):
        gamma_n = used[-1].gamma
        total = mpmath.mpf(0)
        for term, theta in zip(used, angles):
            weight = ingham_kernel(term.gamma / gamma_n) if kernel else 1
            total += term.a * weight * mpmath.cos(theta)
        return 2 * total


def h_bound(N_eval: int, terms: Sequence[CosTerm]) -> mpmath.mpf:
    """2 * sum a_i f(gamma_i/gamma_N), the largest value h(., N) can take."""
    _check_terms(terms, N_eval, "N_eval")
    if N_eval == 0:
        return mpmath.mpf(0)
    with mpmath.workdps(SUM_DPS):
        gamma_n = terms[N_eval - 1].gamma
        return 2 * mpmath.fsum(t.a * ingham_kernel(t.gamma / gamma_n) for t in terms[:N_eval])


def q_tilde(log_x: RealLike, N: int, terms: Sequence[CosTerm]) -> mpmath.mpf:
    """2 * sum_{i <= N} a_i cos(gamma_i log_x + psi_i)."""
    _check_terms(terms, N, "N")
    with mpmath.workdps(SUM_DPS):
        t = mpmath.mpf(log_x) if not isinstance(log_x, Fraction) else \
            mpmath.mpf(log_x.numerator) / log_x.denominator
        return 2 * mpmath.fsum(term.a * mpmath.cos(term.gamma * t + term.psi) for term in terms[:N])


def _float_arrays(terms: Sequence[CosTerm]):
    a = np.array([float(t.a) for t in terms], dtype=np.float64)
    gamma = np.array([float(t.gamma) for t in terms], dtype=np.float64)
    psi = np.array([float(t.psi) for t in terms], dtype=np.float64)
    return a, gamma, psi


def _cos_sum(points: np.ndarray, weights: np.ndarray, gamma: np.ndarray, psi: np.ndarray) -> np.ndarray:
    out = np.empty(len(points), dtype=np.float64)
    for lo in range(0, len(points), FLOAT_CHUNK):
        chunk = points[lo:lo + FLOAT_CHUNK]
        out[lo:lo + FLOAT_CHUNK] = np.cos(np.outer(chunk, gamma) + psi) @ weights
    return out


def ingham_h_many(ys: np.ndarray, N_eval: int, terms: Sequence[CosTerm]) -> np.ndarray:
    """Float64 h(y, N_eval) for many y; for baselines, not for certificates."""
    _check_terms(terms, N_eval, "N_eval")
    ys = np.asarray(ys, dtype=np.float64)
    if N_eval == 0:
        return np.zeros(len(ys))
    a, gamma, psi = _float_arrays(terms[:N_eval])
    t = gamma / gamma[-1]
    kernel = (1 - t) * np.cos(np.pi * t) + np.sin(np.pi * t) / np.pi
    return _cos_sum(ys, 2 * a * kernel, gamma, psi)


def q_tilde_many(log_xs: np.ndarray, N: int, terms: Sequence[CosTerm]) -> np.ndarray:
    """Float64 q_tilde for many log x values."""
    _check_terms(terms, N, "N")
    log_xs = np.asarray(log_xs, dtype=np.float64)
    if N == 0:
        return np.zeros(len(log_xs))
    a, gamma, psi = _float_arrays(terms[:N])
    return _cos_sum(log_xs, 2 * a, gamma, psi)


def mobius_value(n: int) -> int:
    if n < 1:
        raise ParameterError(f"mu undefined for n={n}")
    factors = factorint(n)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


def trivial_sum(x: RealLike, trivial_terms: int) -> mpmath.mpf:
    """sum_{n=1}^{T} (-1)^(n-1) (2pi/x)^(2n) / ((2n)! n zeta(2n+1))."""
    if trivial_terms < 1:
        raise ParameterError(f"trivial_terms must be >= 1, got {trivial_terms}")
    with mpmath.workdps(SUM_DPS):
        x = mpmath.mpf(as_fraction(x).numerator) / as_fraction(x).denominator
        ratio = (2 * mpmath.pi / x) ** 2
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for n in range(1, trivial_terms + 1):
            power *= ratio
            sign = 1 if n % 2 else -1
            total += sign * power / (mpmath.factorial(2 * n) * n * mpmath.zeta(2 * n + 1))
        return total


def titchmarsh_M(x: RealLike, N: int, trivial_terms: int, terms: Sequence[CosTerm], *,
                 integral: Optional[bool] = None) -> mpmath.mpf:
    """Truncated M(x) = 2 sqrt(x) sum a_i cos(gamma_i log x + psi_i) + R(x) + trivial sum.

    R(x) = -2, plus mu(x)/2 when x is an integer. ``integral`` overrides the
    integer test; it may only be True for integer-valued x.
    """
    xf = as_fraction(x)
    if xf <= 0:
        raise ParameterError(f"x must be > 0, got {x}")
    is_integer = xf.denominator == 1
    if integral is None:
        integral = is_integer
    elif integral and not is_integer:
        raise ParameterError(f"x={x} is not an integer")
    with mpmath.workdps(SUM_DPS):
        xm = mpmath.mpf(xf.numerator) / xf.denominator
        oscillation = mpmath.sqrt(xm) * q_tilde(mpmath.log(xm), N, terms)
        R = mpmath.mpf(-2)
        if integral:
            R += mpmath.mpf(mobius_value(xf.numerator)) / 2
        return oscillation + R + trivial_sum(xf, trivial_terms)
