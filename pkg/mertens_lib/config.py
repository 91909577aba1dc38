"""Command configuration: one dataclass per command plus the shared run options."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Union

from mertens_lib.errors import ParameterError
from mertens_lib.sieve import DEFAULT_BLOCK_LEN, VALIDITY_CEILING, check_block_len

THREADS_ENV = "MERTENS_THREADS"
DEFAULT_STRIDE = 10**8
DEFAULT_CHECKPOINT_EVERY = 16  # blocks between checkpoint writes


def default_threads() -> int:
    """Worker count from MERTENS_THREADS, else min(4, cpu count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV}={raw!r} is not an integer")
        if value < 1:
            raise ParameterError(f"{THREADS_ENV} must be >= 1, got {value}")
        return value
    return min(4, os.cpu_count() or 1)


def config_hash(fields: Mapping[str, Any]) -> bytes:
    """SHA-256 over the canonical JSON of the fields that determine results."""
    canonical = json.dumps(dict(fields), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).digest()


@dataclass
class SieveConfig:
    """Configuration for the full-range sieve."""
    limit: int
    block_len: int = DEFAULT_BLOCK_LEN
    stride: int = DEFAULT_STRIDE
    bucketed: bool = False
    checkpoint: Optional[str] = None
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY
    resume: bool = False
    max_blocks: Optional[int] = None

    def validate(self) -> None:
        if not 1 <= self.limit <= VALIDITY_CEILING:
            raise ParameterError(f"--limit must be in [1, 10**16], got {self.limit}")
        check_block_len(self.block_len)
        if self.stride < 1:
            raise ParameterError(f"--stride must be >= 1, got {self.stride}")
        if self.checkpoint_every < 1:
            raise ParameterError("--checkpoint-every must be >= 1")
        if self.resume and not self.checkpoint:
            raise ParameterError("--resume needs --checkpoint")
        if self.max_blocks is not None and self.max_blocks < 1:
            raise ParameterError("--max-blocks must be >= 1")


@dataclass
class MertensConfig:
    """Configuration for an isolated M(x) evaluation."""
    x: int
    u: Optional[int] = None
    verify_nested: bool = False
    engine: str = "numpy"

    def validate(self) -> None:
        if self.x < 1:
            raise ParameterError(f"--x must be >= 1, got {self.x}")
        if self.engine not in ("numpy", "walk"):
            raise ParameterError(f"unknown engine {self.engine!r}")


@dataclass
class BoundsConfig:
    """Configuration for the lattice bound search."""
    zeros: str
    N: int = 25
    nu: int = 64
    sign: str = "plus"
    delta: float = 0.99
    eta: float = 0.501
    eval_N: int = 200
    ordering: str = "by_gamma"
    baseline_samples: int = 10_000
    seed: int = 0

    def validate(self) -> None:
        if self.N < 1:
            raise ParameterError(f"--N must be >= 1, got {self.N}")
        if self.nu < 2 * self.N:
            raise ParameterError(f"--nu must be >= 2N = {2 * self.N}, got {self.nu}")
        if self.sign not in ("plus", "minus"):
            raise ParameterError(f"--sign must be plus or minus, got {self.sign!r}")
        if not 0.25 < self.delta < 1:
            raise ParameterError(f"--delta must be in (0.25, 1), got {self.delta}")
        if not 0.5 <= self.eta < self.delta ** 0.5:
            raise ParameterError(f"--eta must be in [0.5, sqrt(delta)), got {self.eta}")
        if self.eval_N < 1:
            raise ParameterError(f"--eval-N must be >= 1, got {self.eval_N}")
        if self.ordering not in ("by_gamma", "by_a_desc"):
            raise ParameterError(f"unknown ordering {self.ordering!r}")
        if self.baseline_samples < 0:
            raise ParameterError("--baseline-samples must be >= 0")


@dataclass
class QTildeConfig:
    """Configuration for the truncated explicit-formula estimator."""
    zeros: str
    N: int = 2000
    x: List[str] = field(default_factory=list)
    compare: bool = False

    def validate(self) -> None:
        if self.N < 0:
            raise ParameterError(f"--N must be >= 0, got {self.N}")
        if not self.x:
            raise ParameterError("qtilde needs at least one --x")


@dataclass
class ZeroStatsConfig:
    """Configuration for the zero statistics subcommands."""
    zeros: Optional[str]
    action: str
    x: Optional[int] = None
    m: Optional[int] = None
    g: Optional[int] = None
    csv: bool = False

    def validate(self) -> None:
        if self.action in ("vcount", "positivity") and (self.x is None or self.x < 1):
            raise ParameterError(f"{self.action} needs --x >= 1")
        if self.action == "gaps" and (self.m is None or self.m < 0):
            raise ParameterError("gaps needs --m >= 0")
        if self.action == "band" and (self.g is None or self.g < 1):
            raise ParameterError("band needs --g >= 1")


@dataclass
class VerifyConfig:
    """Configuration for the verification suite."""
    level: str = "quick"
    zeros: Optional[str] = None
    checkpoint: Optional[str] = None

    def validate(self) -> None:
        if self.level not in ("quick", "full"):
            raise ParameterError(f"--level must be quick or full, got {self.level!r}")


CommandConfig = Union[SieveConfig, MertensConfig, BoundsConfig, QTildeConfig, ZeroStatsConfig, VerifyConfig]


@dataclass
class RunConfig:
    """Command configuration plus thread count, logging and output options."""
    command: str
    params: Optional[CommandConfig] = None
    threads: int = field(default_factory=default_threads)
    log_file: Optional[str] = None
    json_log: Optional[str] = None
    log_level: str = "INFO"
    out: str = "-"

    def validate(self) -> None:
        if self.threads < 1:
            raise ParameterError(f"--threads must be >= 1, got {self.threads}")
        if self.params is not None:
            self.params.validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
