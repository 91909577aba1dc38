"""
Full-range Mertens scans.

``mertens_scan`` sieves every block with all its primes; ``bucket_scan``
hands primes above the block length to a ``BucketSchedule``. Both fold the
same classified blocks through one ``StatsRecorder`` and therefore produce
identical statistics.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Optional, Union

from mertens_lib.checkpoint import load_checkpoint, save_checkpoint
from mertens_lib.config import DEFAULT_CHECKPOINT_EVERY, DEFAULT_STRIDE
from mertens_lib.errors import ParameterError
from mertens_lib.logger import get_logger
from mertens_lib.metrics import get_run_metrics
from mertens_lib.sieve import DEFAULT_BLOCK_LEN, block_count, iter_mobius_blocks
from mertens_lib.stats import MertensStats, StatsRecorder


def _scan(limit: int, stride: int, block_len: int, *, threads: int, bucketed: bool,
          bucket_threshold: Optional[int], checkpoint: Optional[Union[str, Path]],
          resume: bool, checkpoint_every: int, max_blocks: Optional[int],
          stop_event: Optional[threading.Event]) -> MertensStats:
    if stride < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")
    logger = get_logger()
    metrics = get_run_metrics()

    first_block = 0
    stats = MertensStats(limit=limit, stride=stride)
    if resume:
        if checkpoint is None:
            raise ParameterError("resume requested without a checkpoint path")
        restored = load_checkpoint(checkpoint, limit, block_len, stride)
        stats = restored.stats
        first_block = restored.next_block
        logger.info(f"Resuming at block {first_block} (n={stats.running.n_last}, M={stats.running.M_last})",
                    extra_data={"block": first_block, "n": stats.running.n_last})

    recorder = StatsRecorder(stats)
    total = block_count(limit, block_len)
    done = 0
    last_block = first_block - 1

    if first_block < total:
        blocks = iter_mobius_blocks(limit, block_len, threads=threads, first_block=first_block,
                                    bucketed=bucketed, bucket_threshold=bucket_threshold)
        try:
            for block in blocks:
                started = time.perf_counter()
                recorder.consume(block)
                metrics.record_phase("fold", time.perf_counter() - started, len(block.mu))
                last_block = block.index
                done += 1

                interrupted = (max_blocks is not None and done >= max_blocks) or \
                              (stop_event is not None and stop_event.is_set())
                if checkpoint is not None and (interrupted or done % checkpoint_every == 0):
                    save_checkpoint(checkpoint, stats, block_len, last_block)
                if logger.is_debug():
                    logger.debug(f"Block {block.index + 1}/{total} done, M({block.end}) = {stats.running.M_last}",
                                 extra_data={"block": block.index, "n": block.end, "M": stats.running.M_last})
                if interrupted and last_block + 1 < total:
                    logger.warning(f"Scan stopped after block {last_block}; resume from the checkpoint",
                                   extra_data={"block": last_block})
                    break
        finally:
            blocks.close()

    if checkpoint is not None and stats.complete:
        save_checkpoint(checkpoint, stats, block_len, last_block)
    metrics.increment("blocks", done)
    return stats


def mertens_scan(limit: int, stride: int = DEFAULT_STRIDE, block_len: int = DEFAULT_BLOCK_LEN, *,
                 threads: int = 1, checkpoint: Optional[Union[str, Path]] = None, resume: bool = False,
                 checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY, max_blocks: Optional[int] = None,
                 stop_event: Optional[threading.Event] = None) -> MertensStats:
    """Sieve [1, limit] block by block and record extrema, zeros and samples.

    Args:
        limit: last n to process
        stride: sample M(n) whenever stride divides n
        block_len: block length, a multiple of 13860
        threads: sieve workers; results do not depend on it
        checkpoint: optional checkpoint file, rewritten every ``checkpoint_every`` blocks
        resume: continue from ``checkpoint`` instead of starting at n = 1
        max_blocks: stop after this many blocks (the checkpoint is written first)
        stop_event: stop at the next block boundary once set

    Returns:
        MertensStats; ``running.M_last`` is M(limit) when the scan completed
    """
    return _scan(limit, stride, block_len, threads=threads, bucketed=False, bucket_threshold=None,
                 checkpoint=checkpoint, resume=resume, checkpoint_every=checkpoint_every,
                 max_blocks=max_blocks, stop_event=stop_event)


def bucket_scan(limit: int, block_len: int = DEFAULT_BLOCK_LEN, stride: int = DEFAULT_STRIDE, *,
                threads: int = 1, bucket_threshold: Optional[int] = None,
                checkpoint: Optional[Union[str, Path]] = None, resume: bool = False,
                checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY, max_blocks: Optional[int] = None,
                stop_event: Optional[threading.Event] = None) -> MertensStats:
    """Same result as ``mertens_scan``; primes above ``bucket_threshold``
    (default ``block_len``) are only touched in blocks they divide into."""
    return _scan(limit, stride, block_len, threads=threads, bucketed=True,
                 bucket_threshold=bucket_threshold, checkpoint=checkpoint, resume=resume,
                 checkpoint_every=checkpoint_every, max_blocks=max_blocks, stop_event=stop_event)
