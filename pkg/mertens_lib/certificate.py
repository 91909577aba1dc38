"""
Bound certificates: the lattice search pipeline and its re-verification.

A certificate stores y = z / 2^10 exactly together with every parameter that
produced it, so ``verify_certificate`` can re-evaluate h(y, N_eval) from the
same zeros file and compare.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import mpmath
import numpy as np

from mertens_lib.analytic import EXTRA_BITS, SUM_DPS, h_bound, ingham_h, ingham_h_many
from mertens_lib.errors import IntegrityError, ParameterError
from mertens_lib.lattice import (
    Y_SHIFT,
    build_basis,
    extract_y,
    initial_residual_norm,
    lll_reduce,
    verify_lll,
)
from mertens_lib.logger import get_logger
from mertens_lib.metrics import get_run_metrics
from mertens_lib.utils import atomic_write_text, utc_stamp
from mertens_lib.zeros import CosTerm, ZeroRecord, derive_terms, zeros_digest

CERTIFICATE_VERSION = "1"
REVERIFY_TOLERANCE = mpmath.mpf("1e-6")
STABILITY_TOLERANCE = mpmath.mpf("1e-8")
H_DIGITS = 20


class CertificateFormatError(IntegrityError):
    """Raised when a certificate file cannot be read back."""
    pass


def _decimal(value: mpmath.mpf, digits: int = H_DIGITS) -> str:
    return mpmath.nstr(value, digits, strip_zeros=False)


@dataclass(frozen=True)
class BoundCertificate:
    """lim inf q(x) <= h(y, N_eval) <= lim sup q(x) for the stored y."""

    y: Fraction
    N_reduce: int
    nu: int
    delta: str
    eta: str
    N_eval: int
    sign: str
    ordering: str
    h_value: str
    direction: str
    quality_ratio: str
    baseline_max: str
    zeros_digest: str
    zeros_count: int
    zeros_file: str = ""
    created: str = ""
    version: str = CERTIFICATE_VERSION

    def __post_init__(self) -> None:
        h = mpmath.mpf(self.h_value)
        if self.direction not in ("lower", "upper"):
            raise ParameterError(f"direction must be lower or upper, got {self.direction!r}")
        if (self.direction == "lower") != (h < 0):
            raise ParameterError(f"direction {self.direction} does not match h = {self.h_value}")
        if (self.y * (1 << Y_SHIFT)).denominator != 1:
            raise ParameterError(f"y = {self.y} is not a multiple of 2^-{Y_SHIFT}")

    @property
    def z(self) -> int:
        return int(self.y * (1 << Y_SHIFT))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["y"] = {"mantissa": str(self.z), "exponent": -Y_SHIFT}
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BoundCertificate":
        try:
            y = data["y"]
            fields = {k: v for k, v in data.items() if k != "y"}
            value = Fraction(int(y["mantissa"])) * Fraction(2) ** int(y["exponent"])
            return cls(y=value, **fields)
        except (KeyError, TypeError, ValueError) as exc:
            raise CertificateFormatError(f"bad certificate: {exc}") from exc


def save_certificate(path: Union[str, Path], cert: BoundCertificate) -> None:
    atomic_write_text(path, json.dumps(cert.to_dict(), indent=2) + "\n")


def load_certificate(path: Union[str, Path]) -> BoundCertificate:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"certificate {path} not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CertificateFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CertificateFormatError(f"{path}: expected a JSON object")
    return BoundCertificate.from_dict(data)


def baseline_max(terms: Sequence[CosTerm], N_eval: int, samples: int, seed: int = 0) -> float:
    """Largest |h(y, N_eval)| over uniform random y in [0, 2^10 * 2pi / gamma_1]."""
    if samples <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    top = float(2 * mpmath.pi / terms[0].gamma) * (1 << Y_SHIFT)
    ys = rng.uniform(0.0, top, size=samples)
    return float(np.max(np.abs(ingham_h_many(ys, N_eval, terms))))


def bound_search(records: Sequence[ZeroRecord], N: int = 25, nu: int = 64, sign: str = "plus",
                 delta: Union[float, str] = 0.99, eta: Union[float, str] = 0.501, N_eval: int = 200,
                 ordering: str = "by_gamma", baseline_samples: int = 10_000, seed: int = 0, *,
                 terms: Optional[List[CosTerm]] = None, zeros_file: str = "") -> BoundCertificate:
    """Build the basis, reduce it, extract y and certify h(y, N_eval)."""
    need = max(N, N_eval)
    if len(records) < need:
        raise ParameterError(f"need {need} zeros, file holds {len(records)}")
    if nu < 2 * N:
        raise ParameterError(f"nu must be >= 2N = {2 * N}, got {nu}")
    logger = get_logger()
    metrics = get_run_metrics()
    terms = derive_terms(records[:need]) if terms is None else terms[:need]

    with logger.phase("basis", N=N, nu=nu, sign=sign, ordering=ordering):
        basis = build_basis(terms, N, nu, sign, ordering)
    with logger.phase("lll", dimension=basis.dimension) as details:
        reduced = lll_reduce(basis, delta, eta)
        check = verify_lll(reduced, delta, eta)
        details["max_mu"] = float(check.max_mu)
    if not check.ok:
        raise IntegrityError(f"reduced basis fails the exact LLL recheck at vector {check.first_failure}")
    outcome = extract_y(reduced, basis)

    with logger.phase("certify", N_eval=N_eval) as details:
        h = ingham_h(outcome.y, N_eval, terms)
        with mpmath.workdps(SUM_DPS):
            ratio = h / h_bound(N_eval, terms)
        base = baseline_max(terms, N_eval, baseline_samples, seed)
        details.update(h=float(h), baseline_max=base)

    direction = "lower" if h < 0 else "upper"
    if (direction == "upper") != (sign == "plus"):
        logger.warning(f"sign={sign} search produced h = {float(h):.6f}; certificate records the {direction} side")
    with mpmath.workdps(SUM_DPS):
        logger.debug(f"residual norm {float(outcome.residual_norm):.6g} "
                     f"(unreduced {float(initial_residual_norm(basis)):.6g})")
    metrics.increment("certificates")

    cert = BoundCertificate(
        y=outcome.y, N_reduce=N, nu=nu, delta=str(delta), eta=str(eta), N_eval=N_eval,
        sign=sign, ordering=ordering, h_value=_decimal(h), direction=direction,
        quality_ratio=_decimal(ratio, 12), baseline_max=repr(base),
        zeros_digest=zeros_digest(records, need), zeros_count=need, zeros_file=zeros_file,
        created=utc_stamp())
    logger.info(f"h(y, {N_eval}) = {cert.h_value} with y = {cert.z}/2^{Y_SHIFT}",
                extra_data={"direction": direction, "quality_ratio": cert.quality_ratio})
    return cert


@dataclass
class CertificateCheck:
    recomputed: str
    difference: str
    digest_ok: bool
    stable: bool
    ok: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def verify_certificate(cert: BoundCertificate, records: Sequence[ZeroRecord]) -> CertificateCheck:
    """Re-evaluate h(y, N_eval) from ``records`` and compare with the stored value."""
    if len(records) < cert.zeros_count:
        raise ParameterError(f"certificate used {cert.zeros_count} zeros, file holds {len(records)}")
    digest_ok = zeros_digest(records, cert.zeros_count) == cert.zeros_digest
    terms = derive_terms(records[:cert.N_eval])
    h = ingham_h(cert.y, cert.N_eval, terms)
    h_fine = ingham_h(cert.y, cert.N_eval, terms, extra_bits=2 * EXTRA_BITS)
    with mpmath.workdps(SUM_DPS):
        difference = abs(h - mpmath.mpf(cert.h_value))
        stable = abs(h - h_fine) < STABILITY_TOLERANCE
    ok = digest_ok and stable and difference <= REVERIFY_TOLERANCE
    get_logger().info(f"Certificate {'verified' if ok else 'FAILED'}: h = {_decimal(h)}",
                      extra_data={"difference": float(difference), "digest_ok": digest_ok})
    return CertificateCheck(recomputed=_decimal(h), difference=_decimal(difference, 6),
                            digest_ok=digest_ok, stable=bool(stable), ok=bool(ok))
