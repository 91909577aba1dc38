"""
Zeta-zero files and the cosine terms derived from them.

File format:

    # precision=<digits> count=<n>
    <i> <gamma_i> <Re zeta'(rho_i)> <Im zeta'(rho_i)>

with decimal strings. Zeros are never computed here; they are ingested.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import mpmath

from mertens_lib.errors import IntegrityError, ParameterError
from mertens_lib.logger import get_logger

HEADER_RE = re.compile(r"^#\s*precision=(\d+)\s+count=(\d+)\s*$")
DECIMAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class ZeroFileError(IntegrityError):
    """Raised for a malformed zeros file."""
    pass


class NonMonotoneZerosError(IntegrityError):
    """Raised when gamma values do not strictly increase."""
    pass


class MultipleZeroError(IntegrityError):
    """Raised when |zeta'(rho)| is too small to treat the zero as simple."""
    pass


def significant_digits(text: str) -> int:
    mantissa = re.split(r"[eE]", text.strip().lstrip("+-"))[0].replace(".", "")
    return len(mantissa.lstrip("0"))


@dataclass(frozen=True)
class ZeroRecord:
    index: int
    gamma: str
    zeta_prime: Tuple[str, str]
    precision_digits: int

    def to_line(self) -> str:
        return f"{self.index} {self.gamma} {self.zeta_prime[0]} {self.zeta_prime[1]}"


@dataclass(frozen=True)
class CosTerm:
    """One term a * cos(gamma * t + psi) of the explicit formula."""
    index: int
    a: mpmath.mpf
    gamma: mpmath.mpf
    psi: mpmath.mpf
    digits: int


def parse_zeros(lines: Iterable[str], source: str = "<zeros>") -> List[ZeroRecord]:
    records: List[ZeroRecord] = []
    precision: Optional[int] = None
    declared_count: Optional[int] = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = HEADER_RE.match(line)
            if match and precision is None:
                precision, declared_count = int(match.group(1)), int(match.group(2))
            continue
        if precision is None:
            raise ZeroFileError(f"{source}:{lineno}: data before '# precision=<digits> count=<n>' header")
        parts = line.split()
        if len(parts) != 4 or not parts[0].isdigit() or not all(DECIMAL_RE.match(p) for p in parts[1:]):
            raise ZeroFileError(f"{source}:{lineno}: expected '<i> <gamma> <re> <im>', got {line!r}")
        index = int(parts[0])
        if index != len(records) + 1:
            raise ZeroFileError(f"{source}:{lineno}: index {index}, expected {len(records) + 1}")
        digits = significant_digits(parts[1])
        if digits < precision:
            raise ZeroFileError(f"{source}:{lineno}: gamma has {digits} digits, header declares {precision}")
        record = ZeroRecord(index=index, gamma=parts[1], zeta_prime=(parts[2], parts[3]),
                            precision_digits=digits)
        if records:
            with mpmath.workdps(digits + 5):
                if mpmath.mpf(record.gamma) <= mpmath.mpf(records[-1].gamma):
                    raise NonMonotoneZerosError(
                        f"{source}:{lineno}: gamma_{index} does not exceed gamma_{index - 1}")
        elif not 14 < float(record.gamma) < 15:
            raise ZeroFileError(f"{source}:{lineno}: first zero has gamma {record.gamma}, expected 14 < gamma < 15")
        records.append(record)
    if precision is None:
        raise ZeroFileError(f"{source}: missing '# precision=<digits> count=<n>' header")
    if declared_count is not None and declared_count != len(records):
        get_logger().warning(f"{source}: header declares {declared_count} zeros, found {len(records)}")
    return records


def load_zeros(path: Union[str, Path]) -> List[ZeroRecord]:
    """Parse a zeros file; gamma must strictly increase."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"zeros file {path} not found")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_zeros(fh, source=str(path))


def format_zeros(records: Sequence[ZeroRecord], precision: int) -> str:
    lines = [f"# precision={precision} count={len(records)}"]
    lines.extend(r.to_line() for r in records)
    return "\n".join(lines) + "\n"


def zeros_digest(records: Sequence[ZeroRecord], count: int) -> str:
    """SHA-256 over the first ``count`` records as written in the file."""
    digest = hashlib.sha256()
    for record in records[:count]:
        digest.update(record.to_line().encode("ascii"))
        digest.update(b"\n")
    return digest.hexdigest()


def derive_terms(records: Sequence[ZeroRecord], working_digits: Optional[int] = None) -> List[CosTerm]:
    """a = 1/|rho zeta'(rho)| and psi = -arg(rho zeta'(rho)) for rho = 1/2 + i gamma.

    With this sign q(x) ~ 2 * sum a * cos(gamma * log x + psi).
    """
    terms: List[CosTerm] = []
    for record in records:
        digits = max(record.precision_digits, working_digits or 0)
        with mpmath.workdps(digits + 10):
            rho = mpmath.mpc(mpmath.mpf(1) / 2, mpmath.mpf(record.gamma))
            zp = mpmath.mpc(mpmath.mpf(record.zeta_prime[0]), mpmath.mpf(record.zeta_prime[1]))
            if abs(zp) < mpmath.mpf(10) ** (-(digits // 2)):
                raise MultipleZeroError(f"|zeta'(rho_{record.index})| too small; zero too close to a multiple zero")
            w = rho * zp
            a = 1 / abs(w)
            psi = -mpmath.arg(w)
            if psi <= -mpmath.pi:
                psi = +mpmath.pi
        terms.append(CosTerm(index=record.index, a=a, gamma=rho.imag, psi=psi, digits=digits))
    return terms


def load_terms(path: Union[str, Path], count: Optional[int] = None) -> Tuple[List[ZeroRecord], List[CosTerm]]:
    records = load_zeros(path)
    if count is not None:
        if count > len(records):
            raise ParameterError(f"{path} holds {len(records)} zeros, {count} needed")
        records = records[:count]
    return records, derive_terms(records)
