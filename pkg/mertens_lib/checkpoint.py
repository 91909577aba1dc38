"""
Binary checkpoints for long sieve runs.

Layout (little-endian):

    b"MRTS1"
    32-byte SHA-256 of the result-determining config
    limit, block_len, stride, last_block, n_last, M_last, max, min  (int64)
    extrema count, zero count, sample count                        (int64)
    extrema   (count x 2 int64)
    zeros     (int64), zero_mu (int8)
    samples   (count x 2 int64)
    CRC32 of everything above                                       (uint32)
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from mertens_lib.config import config_hash
from mertens_lib.errors import IntegrityError
from mertens_lib.stats import MertensStats, RunningState
from mertens_lib.utils import atomic_write_bytes

MAGIC = b"MRTS1"
HEADER = struct.Struct("<5s32s11q")
TRAILER = struct.Struct("<I")


class CheckpointIntegrityError(IntegrityError):
    """Raised for a truncated or corrupted checkpoint file."""
    pass


class CheckpointMismatchError(IntegrityError):
    """Raised when a checkpoint was written for a different configuration."""
    pass


@dataclass
class Checkpoint:
    digest: bytes
    block_len: int
    last_block: int
    stats: MertensStats

    @property
    def next_block(self) -> int:
        return self.last_block + 1


def scan_digest(limit: int, block_len: int, stride: int) -> bytes:
    return config_hash({"limit": limit, "block_len": block_len, "stride": stride})


def _pairs(rows) -> np.ndarray:
    return np.asarray(rows, dtype="<i8").reshape(-1, 2)


def encode_checkpoint(stats: MertensStats, block_len: int, last_block: int) -> bytes:
    r = stats.running
    header = HEADER.pack(
        MAGIC, scan_digest(stats.limit, block_len, stats.stride),
        stats.limit, block_len, stats.stride, last_block,
        r.n_last, r.M_last, r.max, r.min,
        len(stats.extrema), len(stats.zeros), len(stats.samples),
    )
    body = b"".join((
        header,
        _pairs(stats.extrema).tobytes(),
        np.asarray(stats.zeros, dtype="<i8").tobytes(),
        np.asarray(stats.zero_mu, dtype="i1").tobytes(),
        _pairs(stats.samples).tobytes(),
    ))
    return body + TRAILER.pack(zlib.crc32(body))


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < HEADER.size + TRAILER.size:
        raise CheckpointIntegrityError(f"checkpoint truncated ({len(data)} bytes)")
    if data[:len(MAGIC)] != MAGIC:
        raise CheckpointIntegrityError(f"bad checkpoint magic {data[:len(MAGIC)]!r}")

    body, (crc,) = data[:-TRAILER.size], TRAILER.unpack(data[-TRAILER.size:])
    (_, digest, limit, block_len, stride, last_block, n_last, M_last, hi, lo,
     n_ext, n_zero, n_samp) = HEADER.unpack_from(body)
    expected = HEADER.size + 16 * n_ext + 9 * n_zero + 16 * n_samp
    if min(n_ext, n_zero, n_samp) < 0 or len(body) != expected:
        raise CheckpointIntegrityError(f"checkpoint length {len(body)} does not match header ({expected})")
    if zlib.crc32(body) != crc:
        raise CheckpointIntegrityError("checkpoint CRC mismatch")

    pos = HEADER.size
    extrema = np.frombuffer(body, dtype="<i8", count=2 * n_ext, offset=pos).reshape(-1, 2)
    pos += 16 * n_ext
    zeros = np.frombuffer(body, dtype="<i8", count=n_zero, offset=pos)
    pos += 8 * n_zero
    zero_mu = np.frombuffer(body, dtype="i1", count=n_zero, offset=pos)
    pos += n_zero
    samples = np.frombuffer(body, dtype="<i8", count=2 * n_samp, offset=pos).reshape(-1, 2)

    stats = MertensStats(
        limit=limit, stride=stride,
        extrema=[(int(n), int(m)) for n, m in extrema],
        zeros=[int(n) for n in zeros],
        zero_mu=[int(v) for v in zero_mu],
        samples=[(int(n), int(m)) for n, m in samples],
        running=RunningState(n_last=n_last, M_last=M_last, max=hi, min=lo),
    )
    return Checkpoint(digest=digest, block_len=block_len, last_block=last_block, stats=stats)


def save_checkpoint(path: Union[str, Path], stats: MertensStats, block_len: int, last_block: int) -> None:
    atomic_write_bytes(path, encode_checkpoint(stats, block_len, last_block))


def load_checkpoint(path: Union[str, Path], limit: int, block_len: int, stride: int) -> Checkpoint:
    """Read a checkpoint and refuse it unless it was written for this exact run."""
    checkpoint = decode_checkpoint(Path(path).read_bytes())
    if checkpoint.digest != scan_digest(limit, block_len, stride):
        raise CheckpointMismatchError(
            f"checkpoint {path} was written for limit={checkpoint.stats.limit} "
            f"block_len={checkpoint.block_len} stride={checkpoint.stats.stride}")
    return checkpoint


def inspect_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Decode a checkpoint without a config check."""
    return decode_checkpoint(Path(path).read_bytes())
