import threading

import numpy as np
import pytest

from mertens_lib.errors import ParameterError
from mertens_lib.scan import bucket_scan, mertens_scan
from mertens_lib.sieve import WHEEL_PERIOD, mertens_table
from mertens_lib.stats import MertensStats

LIMIT = 30 * WHEEL_PERIOD + 1234


@pytest.fixture(scope="module")
def reference():
    return mertens_table(LIMIT)


def _expected_events(M: np.ndarray, stride: int):
    extrema, hi, lo = [], 0, 0
    for n in range(1, len(M)):
        m = int(M[n])
        if m > hi or m < lo:
            extrema.append((n, m))
        hi, lo = max(hi, m), min(lo, m)
    zeros = [int(n) for n in np.flatnonzero(M[1:] == 0) + 1]
    samples = [(n, int(M[n])) for n in range(stride, len(M), stride)]
    return extrema, zeros, samples


def test_scan_records_extrema_zeros_and_samples(reference):
    stats = mertens_scan(LIMIT, stride=10_000, block_len=WHEEL_PERIOD)
    extrema, zeros, samples = _expected_events(reference, 10_000)
    assert stats.complete
    assert stats.running.M_last == reference[LIMIT]
    assert stats.extrema == extrema
    assert stats.zeros == zeros
    assert stats.samples == samples
    assert stats.extrema[0] == (1, 1)


def test_zero_mu_is_mu_at_each_zero(reference):
    stats = mertens_scan(LIMIT, block_len=WHEEL_PERIOD)
    mu = np.diff(reference)
    assert stats.zero_mu == [int(mu[n - 1]) for n in stats.zeros]


def test_bucketed_scan_matches_plain_scan():
    plain = mertens_scan(LIMIT, stride=5000, block_len=WHEEL_PERIOD)
    bucketed = bucket_scan(LIMIT, block_len=WHEEL_PERIOD, stride=5000, bucket_threshold=64)
    assert bucketed == plain


def test_block_length_and_threads_do_not_change_stats():
    one = mertens_scan(LIMIT, stride=7777, block_len=WHEEL_PERIOD, threads=1)
    many = mertens_scan(LIMIT, stride=7777, block_len=4 * WHEEL_PERIOD, threads=4)
    assert one == many


def test_events_are_ordered_by_n():
    stats = mertens_scan(20_000, stride=1000, block_len=WHEEL_PERIOD)
    ns = [event["n"] for event in stats.events()]
    assert ns == sorted(ns)
    kinds = {event["kind"] for event in stats.events()}
    assert kinds == {"extremum", "zero", "sample"}
    summary = stats.summary()
    assert summary["kind"] == "summary"
    assert summary["zeros"] == len(stats.zeros)


def test_first_zero_counts():
    stats = mertens_scan(1000, block_len=WHEEL_PERIOD)
    assert len(stats.zeros) == 92
    assert stats.zeros[0] == 2


def test_stop_event_ends_scan_at_block_boundary():
    stop = threading.Event()
    stop.set()
    stats = mertens_scan(LIMIT, block_len=WHEEL_PERIOD, stop_event=stop)
    assert not stats.complete
    assert stats.running.n_last == WHEEL_PERIOD


def test_bad_parameters():
    with pytest.raises(ParameterError):
        mertens_scan(1000, stride=0, block_len=WHEEL_PERIOD)
    with pytest.raises(ParameterError):
        mertens_scan(1000, block_len=WHEEL_PERIOD, resume=True)


def test_stats_equality_is_by_value():
    assert MertensStats(limit=5, stride=1) == MertensStats(limit=5, stride=1)
