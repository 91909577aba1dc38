import json
import logging
import random
import threading
import time

import pytest

from mertens_lib.config import BoundsConfig, SieveConfig, config_hash, default_threads
from mertens_lib.errors import ParameterError
from mertens_lib.logger import RunLogger
from mertens_lib.metrics import RunMetrics
from mertens_lib.threadpool import ThreadPool, ordered_map
from mertens_lib.utils import atomic_write_text, icbrt


def _slow_square(n):
    time.sleep(random.random() / 200)
    return n * n


def test_pool_yields_in_submission_order():
    with ThreadPool(num_workers=4, queue_max=2, worker_type="test") as pool:
        assert list(pool.map_ordered(_slow_square, range(40))) == [n * n for n in range(40)]
        stats = pool.get_stats()
    assert stats["tasks_completed"] == 40
    assert stats["tasks_failed"] == 0


def test_pool_reraises_task_errors():
    def boom(n):
        if n == 3:
            raise ValueError("three")
        return n

    with ThreadPool(num_workers=2, queue_max=2) as pool:
        with pytest.raises(ValueError, match="three"):
            list(pool.map_ordered(boom, range(6)))


def test_ordered_map_runs_inline_for_one_thread():
    names = list(ordered_map(lambda _: threading.current_thread().name, range(3), threads=1))
    assert names == [threading.current_thread().name] * 3
    assert list(ordered_map(_slow_square, range(10), threads=3)) == [n * n for n in range(10)]


def test_submit_after_shutdown_is_refused():
    pool = ThreadPool(num_workers=1, queue_max=1)
    pool.shutdown()
    with pytest.raises(RuntimeError):
        pool.submit(_slow_square, 2)


def test_metrics_aggregate_phases_and_counters():
    metrics = RunMetrics()
    metrics.record_phase("fold", 0.5, 100)
    metrics.record_phase("fold", 1.5, 300)
    metrics.increment("blocks", 2)
    metrics.increment("blocks")
    assert metrics.counter("blocks") == 3
    assert metrics.counter("absent") == 0
    phases = metrics.get_phase_stats()["fold"]
    assert phases["runs"] == 2
    assert phases["items_per_second"] == pytest.approx(200.0)
    assert phases["max_seconds"] == 1.5
    summary = metrics.get_summary_stats()
    assert summary["phases_recorded"] == 2
    assert summary["counters"] == {"blocks": 3}
    assert "system" in summary


def test_json_log_records_extra_data(tmp_path):
    path = tmp_path / "run.jsonl"
    logger = RunLogger("mertens-test", json_log_file=str(path), level=logging.DEBUG)
    try:
        logger.info("block done", extra_data={"block": 7})
        with logger.phase("scan", limit=100) as details:
            details["zeros"] = 3
    finally:
        logger.close()
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert records[0]["message"] == "block done"
    assert records[0]["block"] == 7
    assert records[-1]["phase"] == "scan"
    assert records[-1]["zeros"] == 3
    assert records[-1]["seconds"] >= 0


def test_worker_tracking():
    logger = RunLogger("mertens-workers")
    try:
        logger.register_thread("sieve-0", "sieve")
        logger.update_thread_status("sieve-0", "busy")
        stats = logger.get_thread_stats()
        assert stats["busy_threads"] == 1
        assert stats["thread_types"] == {"sieve": 1}
        assert stats["threads"]["sieve-0"]["tasks"] == 1
        logger.unregister_thread("sieve-0")
        assert logger.get_thread_stats()["total_threads"] == 0
    finally:
        logger.close()


def test_default_threads_from_environment(monkeypatch):
    monkeypatch.setenv("MERTENS_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("MERTENS_THREADS", "many")
    with pytest.raises(ParameterError):
        default_threads()
    monkeypatch.delenv("MERTENS_THREADS")
    assert 1 <= default_threads() <= 4


def test_config_validation():
    SieveConfig(limit=10**6).validate()
    with pytest.raises(ParameterError):
        SieveConfig(limit=10**6, block_len=1000).validate()
    with pytest.raises(ParameterError):
        SieveConfig(limit=10**17).validate()
    with pytest.raises(ParameterError):
        SieveConfig(limit=10**6, resume=True).validate()
    with pytest.raises(ParameterError):
        BoundsConfig(zeros="z.txt", N=25, nu=40).validate()


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 32


def test_atomic_write(tmp_path, capsys):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]
    atomic_write_text("-", "to stdout")
    assert capsys.readouterr().out == "to stdout"


@pytest.mark.parametrize("n, root", [(0, 0), (1, 1), (7, 1), (8, 2), (26, 2), (27, 3),
                                     (10**18, 10**6), (10**18 - 1, 10**6 - 1), (2**63, 2**21)])
def test_icbrt(n, root):
    assert icbrt(n) == root
