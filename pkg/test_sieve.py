import numpy as np
import pytest

from conftest import brute_mobius, factor_mobius
from mertens_lib.errors import ParameterError
from mertens_lib.sieve import (
    DEFAULT_BLOCK_LEN,
    MAX_BLOCK_LEN,
    SQUAREFREE_FLAG,
    WHEEL_PERIOD,
    BlockPhase,
    LogTable,
    MissingPrimesError,
    SieveRangeError,
    check_block_len,
    classify,
    classify_block,
    iter_mobius_blocks,
    log_entry,
    mertens_table,
    mobius_table,
    presieve_wheel,
    primes_up_to,
    raw_block,
    sieve_block,
    sieving_bound,
    theorem1_margin,
)
from mertens_lib.verify import MARGIN_WITNESS


def _sieved(start: int, length: int, wheel: bool = True):
    block = raw_block(start, length, wheel=wheel)
    logs = LogTable.up_to(sieving_bound(block.end))
    return sieve_block(block, logs)


def test_log_entries_are_odd_floor_log2():
    assert [log_entry(p) for p in (2, 3, 5, 7, 11, 13, 1021, 1031)] == [1, 1, 3, 3, 3, 3, 9, 11]
    table = LogTable.up_to(10_000)
    assert np.all(table.entries & 1)
    assert list(table.primes[:5]) == [2, 3, 5, 7, 11]
    assert table.entries[list(table.primes).index(1031)] == 11


def test_primes_up_to():
    assert list(primes_up_to(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(primes_up_to(10**6)) == 78498
    assert len(primes_up_to(1)) == 0


def test_mobius_table_matches_brute_force_across_threshold_switch():
    limit = 1_200_000
    assert np.array_equal(mobius_table(limit), brute_mobius(limit))


def test_mobius_table_small_values():
    assert list(mobius_table(12)) == [0, 1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]


def test_mertens_table_known_values():
    M = mertens_table(10**6)
    assert M[10] == -1
    assert M[100] == 1
    assert M[1000] == 2
    assert M[10**4] == -23
    assert M[10**5] == -48
    assert M[10**6] == 212


def test_thread_count_does_not_change_result():
    assert np.array_equal(mobius_table(300_000, threads=1), mobius_table(300_000, threads=4))


@pytest.mark.parametrize("start", [1, 13_861, 999_999_001, 10**12 + 1])
def test_wheel_presieve_equals_plain_sieve(start):
    length = 2 * WHEEL_PERIOD
    wheeled = classify_block(_sieved(start, length, wheel=True))
    plain = classify_block(_sieved(start, length, wheel=False))
    assert np.array_equal(wheeled, plain)


def test_high_block_matches_factorisation():
    start = 10**12 + 1
    mu = classify_block(_sieved(start, 600))
    for offset in range(0, 600, 7):
        assert mu[offset] == factor_mobius(start + offset), start + offset


def test_scalar_classify_agrees_with_block_classify():
    block = _sieved(1_048_000, WHEEL_PERIOD)
    values = block.values.copy()
    mu = classify_block(block)
    for offset in range(0, WHEEL_PERIOD, 97):
        assert classify(int(values[offset]), block.start + offset) == mu[offset]


def test_wheel_pattern_marks_small_squares():
    pattern = presieve_wheel()
    assert pattern[4] == 0 and pattern[9] == 0 and pattern[36] == 0
    # 6 = 2 * 3: flag plus log entries 1 + 1
    assert pattern[6] == SQUAREFREE_FLAG | 2
    assert pattern[1] == SQUAREFREE_FLAG


def test_block_phases_are_enforced():
    block = raw_block(1, WHEEL_PERIOD)
    assert block.phase is BlockPhase.RAW
    with pytest.raises(ParameterError):
        classify_block(block)
    logged = sieve_block(block, LogTable.up_to(sieving_bound(block.end)))
    assert logged.phase is BlockPhase.LOGGED
    with pytest.raises(ParameterError):
        sieve_block(logged, LogTable.up_to(sieving_bound(block.end)))
    classify_block(logged)
    assert logged.phase is BlockPhase.CLASSIFIED


def test_missing_primes_are_rejected():
    block = raw_block(10**8, WHEEL_PERIOD)
    with pytest.raises(MissingPrimesError):
        sieve_block(block, LogTable.up_to(1000))


def test_margin_witness():
    assert theorem1_margin(MARGIN_WITNESS) == -7
    assert theorem1_margin([]) == 0
    with pytest.raises(ParameterError):
        theorem1_margin([3, 3])


def test_margin_lower_bound_below_threshold_switch():
    limit = 1 << 20
    logsum = np.zeros(limit + 1, dtype=np.int16)
    for p in primes_up_to(limit).tolist():
        logsum[p::p] += log_entry(p)
    n = np.arange(1, limit + 1)
    floor_log = np.array([int(v).bit_length() - 1 for v in n.tolist()], dtype=np.int16)
    squarefree = mobius_table(limit)[1:] != 0
    margins = (logsum[1:] - floor_log)[squarefree]
    assert int(margins.min()) >= -5
    assert theorem1_margin([3, 11, 13, 59]) == int(logsum[3 * 11 * 13 * 59] - floor_log[3 * 11 * 13 * 59 - 1])


def test_range_limits():
    with pytest.raises(SieveRangeError):
        next(iter_mobius_blocks(10**16 + 1, DEFAULT_BLOCK_LEN))
    with pytest.raises(SieveRangeError):
        classify(SQUAREFREE_FLAG, 10**16 + 1)
    with pytest.raises(ParameterError):
        check_block_len(1000)
    with pytest.raises(ParameterError):
        check_block_len(MAX_BLOCK_LEN + WHEEL_PERIOD)
    check_block_len(MAX_BLOCK_LEN)
    with pytest.raises(ParameterError):
        raw_block(0, 10)


def test_blocks_cover_range_in_order():
    blocks = list(iter_mobius_blocks(100_000, WHEEL_PERIOD, threads=3))
    assert [b.index for b in blocks] == list(range(len(blocks)))
    assert blocks[0].start == 1
    assert blocks[-1].end == 100_000
    for left, right in zip(blocks, blocks[1:]):
        assert right.start == left.end + 1
