import pytest

from mertens_lib.checkpoint import (
    CheckpointIntegrityError,
    CheckpointMismatchError,
    inspect_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from mertens_lib.scan import bucket_scan, mertens_scan
from mertens_lib.sieve import WHEEL_PERIOD

LIMIT = 12 * WHEEL_PERIOD + 17
STRIDE = 3000


def test_resume_produces_identical_stats(tmp_path):
    path = tmp_path / "run.ckpt"
    full = mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD)

    partial = mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD, checkpoint=path, max_blocks=5)
    assert not partial.complete
    assert inspect_checkpoint(path).last_block == 4

    resumed = mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD, checkpoint=path, resume=True)
    assert resumed == full


def test_bucketed_resume_matches_plain_scan(tmp_path):
    path = tmp_path / "bucket.ckpt"
    full = mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD)
    bucket_scan(LIMIT, block_len=WHEEL_PERIOD, stride=STRIDE, bucket_threshold=64,
                checkpoint=path, max_blocks=3)
    resumed = bucket_scan(LIMIT, block_len=WHEEL_PERIOD, stride=STRIDE, bucket_threshold=64,
                          checkpoint=path, resume=True)
    assert resumed == full


def test_checkpoint_round_trip_keeps_every_field(tmp_path):
    path = tmp_path / "round.ckpt"
    stats = mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD)
    save_checkpoint(path, stats, WHEEL_PERIOD, 12)
    restored = load_checkpoint(path, LIMIT, WHEEL_PERIOD, STRIDE)
    assert restored.stats == stats
    assert restored.next_block == 13


def test_truncated_checkpoint_is_rejected(tmp_path):
    path = tmp_path / "cut.ckpt"
    mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD, checkpoint=path, max_blocks=2)
    data = path.read_bytes()
    path.write_bytes(data[:-9])
    with pytest.raises(CheckpointIntegrityError):
        load_checkpoint(path, LIMIT, WHEEL_PERIOD, STRIDE)


def test_corrupted_checkpoint_is_rejected(tmp_path):
    path = tmp_path / "flip.ckpt"
    mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD, checkpoint=path, max_blocks=2)
    data = bytearray(path.read_bytes())
    data[100] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointIntegrityError):
        inspect_checkpoint(path)


def test_checkpoint_for_another_run_is_rejected(tmp_path):
    path = tmp_path / "other.ckpt"
    mertens_scan(LIMIT, stride=STRIDE, block_len=WHEEL_PERIOD, checkpoint=path, max_blocks=2)
    with pytest.raises(CheckpointMismatchError):
        mertens_scan(LIMIT, stride=STRIDE + 1, block_len=WHEEL_PERIOD, checkpoint=path, resume=True)


def test_missing_checkpoint_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        inspect_checkpoint(tmp_path / "absent.ckpt")
