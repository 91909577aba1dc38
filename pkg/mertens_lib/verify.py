"""
Known values and the cross-module verification suite behind ``verify``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from mertens_lib.analytic import q_tilde_many
from mertens_lib.checkpoint import inspect_checkpoint
from mertens_lib.combinatorial import IsolatedQuery, IsolatedResult, mertens_at, mertens_isolated
from mertens_lib.errors import IntegrityError, PrecisionError
from mertens_lib.logger import get_logger
from mertens_lib.scan import mertens_scan
from mertens_lib.sieve import mertens_table, theorem1_margin
from mertens_lib.zero_stats import ZeroList, count_zeros
from mertens_lib.zeros import CosTerm, derive_terms, load_zeros

# M(2^n) for n = 0..73
M_POWERS_OF_TWO = (
    1, 0, -1, -2, -1, -4, -1, -2, -1, -4,
    -4, 7, -19, 22, -32, 26, 14, -20, 24, -125,
    257, -362, 228, -10, 211, -1042, 329, 330, -1703, 6222,
    -10374, 9569, 1814, -10339, -3421, 8435, 38176, -28118, 38729, -135944,
    101597, 15295, -169338, 259886, -474483, 1726370, -3554573, -135443, 3282200, 1958235,
    -1735147, 6657834, -13927672, -11901414, 48662015, -48361472, 23952154, 51885062, -15415164, -89014828,
    -48425659, 220660381, -248107163, 580197744, -851764249,
    809210153, -1220538763, -925696220, 2092394726, -3748189801,
    9853266869, -12658250658, 9558471405, -6524408924,
)

# V(10^n) for n = 1..9
ZERO_COUNTS = (1, 6, 92, 406, 1549, 5361, 12546, 41908, 141121)

EXTREMA = (
    (6631245058, -31206),
    (7766842813, 50286),
    (15578669387, -51116),
    (19890188718, 60442),
    (22867694771, -62880),
)

# square-free n with nine distinct primes whose log-sum surplus is -7
MARGIN_WITNESS = (3, 11, 13, 53, 59, 61, 229, 241, 251)

QUICK_POWER = 24
FULL_POWER = 40
CROSS_LIMIT = 10**6
CROSS_SAMPLES = 25
QTILDE_N = 2000
QTILDE_SAMPLES = 50
QTILDE_LOW = 10**6
QTILDE_HIGH = 10**8
QTILDE_TOLERANCE = 0.15
QTILDE_AGREEMENT = 0.8


@dataclass
class Check:
    name: str
    expected: Any
    got: Any
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "expected": self.expected, "got": self.got, "pass": self.passed}


@dataclass
class VerificationReport:
    level: str
    checks: List[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, expected: Any, got: Any, passed: Optional[bool] = None) -> Check:
        check = Check(name, expected, got, expected == got if passed is None else passed)
        self.checks.append(check)
        if not check.passed:
            get_logger().error(f"Check failed: {name} (expected {expected}, got {got})")
        return check

    def names(self) -> List[str]:
        return [c.name for c in self.checks]

    def to_dict(self) -> Dict[str, Any]:
        return {"level": self.level, "pass": self.passed, "seconds": round(self.seconds, 3),
                "checks": [c.to_dict() for c in self.checks]}


def nested_reference(result: IsolatedResult, table: Optional[np.ndarray] = None) -> Optional[int]:
    """Independent value of M(x // 128) for an isolated run with ``nested``."""
    if result.nested_x is None:
        return None
    if result.nested_x < 1:
        return 0
    if table is not None and result.nested_x < len(table):
        return int(table[result.nested_x])
    return mertens_at(result.nested_x)


def _guarded(report: VerificationReport, name: str, fn: Callable[[], None]) -> None:
    try:
        fn()
    except (IntegrityError, PrecisionError, ValueError, FileNotFoundError) as exc:
        report.add(name, "no error", str(exc), passed=False)


def _cross_checks(report: VerificationReport, table: np.ndarray, threads: int) -> None:
    rng = np.random.default_rng(0)
    xs = sorted(set(int(v) for v in rng.integers(4, CROSS_LIMIT, size=CROSS_SAMPLES)) | {CROSS_LIMIT})
    bad = [x for x in xs if mertens_at(x, threads=threads) != int(table[x])]
    report.add(f"sieve=combinatorial at {len(xs)} x <= {CROSS_LIMIT}", [], bad)


def _power_checks(report: VerificationReport, top: int, table: np.ndarray, threads: int) -> None:
    for n in range(top + 1):
        x = 1 << n
        got = int(table[x]) if x < len(table) else mertens_at(x, threads=threads)
        report.add(f"M(2^{n})={M_POWERS_OF_TWO[n]}", M_POWERS_OF_TWO[n], got)


def _zero_count_checks(report: VerificationReport, top: int, threads: int) -> None:
    stats = mertens_scan(10 ** top, threads=threads)
    zeros = ZeroList.from_stats(stats)
    for k in range(1, top + 1):
        report.add(f"V(10^{k})={ZERO_COUNTS[k - 1]}", ZERO_COUNTS[k - 1], count_zeros(zeros, 10 ** k))


def _nested_check(report: VerificationReport, x: int, table: np.ndarray, threads: int) -> None:
    result = mertens_isolated(IsolatedQuery(x), threads=threads, nested=True)
    report.add(f"nested M({result.nested_x})", nested_reference(result, table), result.nested_M)


def _extremum_check(report: VerificationReport, threads: int) -> None:
    n, expected = EXTREMA[1]
    report.add(f"M({n})={expected}", expected, mertens_at(n, threads=threads))


def qtilde_accuracy(terms: Sequence[CosTerm], N: int, samples: int = QTILDE_SAMPLES,
                    low: int = QTILDE_LOW, high: int = QTILDE_HIGH, seed: int = 1,
                    threads: int = 1) -> Tuple[float, float]:
    """Max |q~(x) - M(x)/sqrt(x)| and the sign agreement over random x in [low, high]."""
    xs = np.random.default_rng(seed).integers(low, high, size=samples, endpoint=True)
    exact = np.array([mertens_at(int(x), threads=threads) for x in xs], dtype=np.float64)
    q = exact / np.sqrt(xs)
    estimate = q_tilde_many(np.log(xs.astype(np.float64)), N, terms)
    error = float(np.max(np.abs(estimate - q)))
    agreement = float(np.mean(np.sign(estimate) == np.sign(q)))
    get_logger().debug(f"q~ over {samples} x in [{low}, {high}]: max error {error:.4f}, agreement {agreement:.2f}")
    return error, agreement


def _qtilde_check(report: VerificationReport, zeros_path: Union[str, Path], threads: int) -> None:
    records = load_zeros(zeros_path)
    N = min(QTILDE_N, len(records))
    if N < QTILDE_N:
        get_logger().warning(f"{zeros_path} holds {len(records)} zeros; q~ tolerance is calibrated for {QTILDE_N}")
    error, agreement = qtilde_accuracy(derive_terms(records[:N]), N, threads=threads)
    report.add(f"|q~ - q| <= {QTILDE_TOLERANCE} (N={N})", QTILDE_TOLERANCE, round(error, 4),
               passed=error <= QTILDE_TOLERANCE)
    report.add(f"q~ sign agreement >= {QTILDE_AGREEMENT}", QTILDE_AGREEMENT, agreement,
               passed=agreement >= QTILDE_AGREEMENT)


def cmd_verify(level: str = "quick", zeros: Optional[Union[str, Path]] = None,
               checkpoint: Optional[Union[str, Path]] = None, threads: int = 1) -> VerificationReport:
    """Run the checks for ``level``; the report passes only if every check does."""
    logger = get_logger()
    started = time.perf_counter()
    report = VerificationReport(level=level)
    top_power = QUICK_POWER if level == "quick" else FULL_POWER

    with logger.phase("verify", level=level):
        table = mertens_table(1 << 20, threads=threads)
        report.add("margin of the nine-prime witness", -7, theorem1_margin(MARGIN_WITNESS))
        _guarded(report, "sieve=combinatorial", lambda: _cross_checks(report, table, threads))
        _guarded(report, "powers of two", lambda: _power_checks(report, top_power, table, threads))
        _guarded(report, "nested", lambda: _nested_check(report, 1 << QUICK_POWER, table, threads))
        _guarded(report, "zero counts", lambda: _zero_count_checks(report, 6 if level == "quick" else 7, threads))
        if level == "full":
            _guarded(report, "extremum", lambda: _extremum_check(report, threads))
            if zeros is None:
                report.add("q~ sampling", "zeros file", None, passed=False)
            else:
                _guarded(report, "q~ sampling", lambda: _qtilde_check(report, zeros, threads))
        if checkpoint is not None:
            try:
                restored = inspect_checkpoint(checkpoint)
                report.add("checkpoint integrity", "ok", "ok")
                logger.debug(f"checkpoint at block {restored.last_block}")
            except (IntegrityError, FileNotFoundError) as exc:
                report.add("checkpoint integrity", "ok", str(exc), passed=False)

    report.seconds = time.perf_counter() - started
    logger.info(f"Verification {'passed' if report.passed else 'FAILED'}: "
                f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks")
    return report
