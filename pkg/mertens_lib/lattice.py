"""
Lattice search for y with gamma_i * y + psi_i close to multiples of 2pi.

The basis has N + 2 vectors of dimension N + 2:

    b_0     = (-floor(sqrt(a_i) phi_i 2^nu))_i, 2^nu N^4, 0
    b_1     = ( floor(sqrt(a_i) gamma_i 2^(nu-10)))_i, 0, 1
    b_(i+2) = floor(2pi sqrt(a_i) 2^nu) e_i

with phi_i = -psi_i for large positive h and phi_i = -(psi_i + pi) for large
negative h. A reduced vector carrying +-2^nu N^4 is b_0 + z b_1 - sum m_i b_(i+2),
so y = z / 2^10 makes every sqrt(a_i)(gamma_i y - phi_i - 2pi m_i) small.

Reduction is the integral LLL variant: Gram determinants d_k and scaled
coefficients lambda_kj = d_(j+1) mu_kj stay integers, every division is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import mpmath

from mertens_lib.errors import IntegrityError, ParameterError, PrecisionError
from mertens_lib.logger import get_logger
from mertens_lib.zeros import CosTerm

Y_SHIFT = 10
PRECISION_MARGIN_BITS = 64
BITS_PER_DIGIT = math.log2(10)

Rows = List[List[int]]


class DegenerateBasisError(ParameterError):
    """Raised when the input vectors are linearly dependent."""
    pass


class LatticeStructureError(IntegrityError):
    """Raised when the reduced basis does not hold exactly one pivot vector."""
    pass


class BasisPrecisionError(PrecisionError):
    """Raised when the zero data is too short for exact basis floors."""
    pass


@dataclass
class LatticeBasis:
    N: int
    nu: int
    sign: str
    ordering: str
    vectors: Rows
    terms: List[CosTerm] = field(default_factory=list)
    phases: List[mpmath.mpf] = field(default_factory=list)

    @property
    def pivot(self) -> int:
        return (1 << self.nu) * self.N ** 4

    @property
    def dimension(self) -> int:
        return self.N + 2


@dataclass
class ReductionOutcome:
    reduced: Rows
    v: List[int]
    z: int
    y: Fraction
    m: List[int]
    residuals: List[mpmath.mpf]

    @property
    def residual_norm(self) -> mpmath.mpf:
        return mpmath.fsum(r * r for r in self.residuals)


def select_terms(terms: Sequence[CosTerm], N: int, ordering: str) -> List[CosTerm]:
    if N > len(terms):
        raise ParameterError(f"N={N} but only {len(terms)} terms available")
    if ordering == "by_gamma":
        return list(terms[:N])
    if ordering == "by_a_desc":
        return sorted(terms, key=lambda t: t.a, reverse=True)[:N]
    raise ParameterError(f"unknown ordering {ordering!r}")


def build_basis(terms: Sequence[CosTerm], N: int, nu: int, sign: str = "plus",
                ordering: str = "by_gamma") -> LatticeBasis:
    """Initial basis for the ``sign`` direction over N terms."""
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    if sign not in ("plus", "minus"):
        raise ParameterError(f"sign must be plus or minus, got {sign!r}")
    chosen = select_terms(terms, N, ordering)
    need_bits = nu + PRECISION_MARGIN_BITS
    for term in chosen:
        if term.digits * BITS_PER_DIGIT < need_bits:
            raise BasisPrecisionError(
                f"zero {term.index} has {term.digits} digits; nu={nu} needs {math.ceil(need_bits / BITS_PER_DIGIT)}")

    dim = N + 2
    first = [0] * dim
    second = [0] * dim
    diagonal = [[0] * dim for _ in range(N)]
    phases = []
    with mpmath.workprec(need_bits + 32):
        for i, term in enumerate(chosen):
            root = mpmath.sqrt(term.a)
            phi = -term.psi if sign == "plus" else -(term.psi + mpmath.pi)
            phases.append(+phi)
            first[i] = -int(mpmath.floor(mpmath.ldexp(root * phi, nu)))
            second[i] = int(mpmath.floor(mpmath.ldexp(root * term.gamma, nu - Y_SHIFT)))
            diagonal[i][i] = int(mpmath.floor(mpmath.ldexp(2 * mpmath.pi * root, nu)))
    first[N] = (1 << nu) * N ** 4
    second[N + 1] = 1
    return LatticeBasis(N=N, nu=nu, sign=sign, ordering=ordering,
                        vectors=[first, second] + diagonal, terms=chosen, phases=phases)


def _dot(x: Sequence[int], y: Sequence[int]) -> int:
    return sum(p * q for p, q in zip(x, y))


def _round_div(num: int, den: int) -> int:
    """Nearest integer to num/den for den > 0, halves rounded up."""
    return (2 * num + den) // (2 * den)


def _as_fraction(value: Union[float, str, Fraction]) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


def _gram(rows: Rows):
    """Integral Gram-Schmidt data (1-based): d[0..n], lam[k][j] for j < k."""
    n = len(rows)
    b = [None] + rows
    d = [1] + [0] * n
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    for k in range(1, n + 1):
        for j in range(1, k + 1):
            u = _dot(b[k], b[j])
            for i in range(1, j):
                u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise DegenerateBasisError(f"vector {k} depends on the previous ones")
                d[k] = u
    return d, lam


def lll_reduce(basis: Union[LatticeBasis, Sequence[Sequence[int]]], delta: Union[float, str, Fraction] = 0.99,
               eta: Union[float, str, Fraction] = 0.501) -> Rows:
    """Exact integral LLL reduction.

    Size reduction fires when |mu_kl| > eta and leaves |mu_kl| <= 1/2; the
    Lovasz test is d_k d_(k-2) >= delta d_(k-1)^2 - lambda_(k,k-1)^2.
    """
    rows = [list(map(int, r)) for r in (basis.vectors if isinstance(basis, LatticeBasis) else basis)]
    n = len(rows)
    if n == 0:
        return []
    dl = _as_fraction(delta)
    et = _as_fraction(eta)
    if not Fraction(1, 4) < dl <= 1 or not Fraction(1, 2) <= et:
        raise ParameterError(f"need 1/4 < delta <= 1 and eta >= 1/2, got delta={delta} eta={eta}")

    b = [None] + rows
    d = [1] + [0] * n
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    d[1] = _dot(b[1], b[1])
    if d[1] == 0:
        raise DegenerateBasisError("first vector is zero")

    def red(k: int, l: int) -> None:
        if et.denominator * abs(lam[k][l]) <= et.numerator * d[l]:
            return
        q = _round_div(lam[k][l], d[l])
        b[k] = [x - q * y for x, y in zip(b[k], b[l])]
        lam[k][l] -= q * d[l]
        for i in range(1, l):
            lam[k][i] -= q * lam[l][i]

    def swap(k: int, kmax: int) -> None:
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 2] * d[k] + lm * lm) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lm * t) // d[k - 1]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k]
        d[k - 1] = B

    k, kmax, swaps = 2, 1, 0
    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = _dot(b[k], b[j])
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise DegenerateBasisError(f"vector {k} depends on the previous ones")
                    d[k] = u
        while True:
            red(k, k - 1)
            lhs = dl.denominator * d[k] * d[k - 2]
            rhs = dl.numerator * d[k - 1] ** 2 - dl.denominator * lam[k][k - 1] ** 2
            if lhs < rhs:
                swap(k, kmax)
                swaps += 1
                k = max(2, k - 1)
            else:
                break
        for l in range(k - 2, 0, -1):
            red(k, l)
        k += 1

    get_logger().debug(f"LLL finished: dimension {n}, {swaps} swaps")
    return [list(v) for v in b[1:]]


@dataclass
class LLLCheck:
    size_reduced: bool
    lovasz: bool
    max_mu: Fraction
    first_failure: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.size_reduced and self.lovasz


def verify_lll(rows: Sequence[Sequence[int]], delta: Union[float, str, Fraction] = 0.99,
               eta: Union[float, str, Fraction] = 0.501) -> LLLCheck:
    """Recheck |mu_kj| <= eta and the Lovasz condition in exact rationals."""
    dl = _as_fraction(delta)
    et = _as_fraction(eta)
    rows = [list(map(int, r)) for r in rows]
    n = len(rows)
    d, lam = _gram(rows)
    max_mu = Fraction(0)
    size_ok = True
    lovasz_ok = True
    failure = None
    for k in range(2, n + 1):
        for j in range(1, k):
            mu = Fraction(lam[k][j], d[j])
            max_mu = max(max_mu, abs(mu))
            if abs(mu) > et:
                size_ok = False
                failure = failure or k
        # |b*_k|^2 = d_k / d_(k-1)
        b_k = Fraction(d[k], d[k - 1])
        b_prev = Fraction(d[k - 1], d[k - 2])
        mu = Fraction(lam[k][k - 1], d[k - 1])
        if b_k < (dl - mu * mu) * b_prev:
            lovasz_ok = False
            failure = failure or k
    return LLLCheck(size_reduced=size_ok, lovasz=lovasz_ok, max_mu=max_mu, first_failure=failure)


def determinant_squared(rows: Sequence[Sequence[int]]) -> int:
    """Gram determinant of the full basis (the squared lattice volume)."""
    d, _ = _gram([list(map(int, r)) for r in rows])
    return d[-1]


def residuals_at(y: Fraction, basis: LatticeBasis, m: Optional[Sequence[int]] = None):
    """sqrt(a_i)(gamma_i y - phi_i - 2pi m_i); m defaults to the nearest integers."""
    digits = max(len(str(abs(y.numerator) // y.denominator)) + 30, mpmath.mp.dps)
    with mpmath.workdps(digits):
        ym = mpmath.mpf(y.numerator) / y.denominator
        two_pi = 2 * mpmath.pi
        chosen_m = []
        out = []
        for i, (term, phi) in enumerate(zip(basis.terms, basis.phases)):
            offset = term.gamma * ym - phi
            mi = int(mpmath.nint(offset / two_pi)) if m is None else m[i]
            chosen_m.append(mi)
            out.append(mpmath.sqrt(term.a) * (offset - two_pi * mi))
    return chosen_m, out


def extract_y(reduced: Sequence[Sequence[int]], basis: LatticeBasis) -> ReductionOutcome:
    """Pick the single reduced vector with component N+1 equal to +-2^nu N^4."""
    N = basis.N
    candidates = [list(v) for v in reduced if v[N] != 0]
    if len(candidates) != 1:
        raise LatticeStructureError(f"{len(candidates)} reduced vectors carry the pivot component, expected 1")
    v = candidates[0]
    if abs(v[N]) != basis.pivot:
        raise LatticeStructureError(f"pivot component {v[N]} is not +-2^{basis.nu} N^4")
    if v[N] < 0:
        v = [-c for c in v]
    z = v[N + 1]
    y = Fraction(z, 1 << Y_SHIFT)
    m, residuals = residuals_at(y, basis)
    return ReductionOutcome(reduced=[list(r) for r in reduced], v=v, z=z, y=y, m=m, residuals=residuals)


def initial_residual_norm(basis: LatticeBasis) -> mpmath.mpf:
    """Residual norm of the unreduced pivot vector b_0 (z = 0, m = 0)."""
    _, residuals = residuals_at(Fraction(0), basis, m=[0] * basis.N)
    return mpmath.fsum(r * r for r in residuals)
