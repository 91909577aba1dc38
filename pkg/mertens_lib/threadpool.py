"""
Thread Pool Implementation

A bounded worker pool used to sieve and classify blocks while a single
consumer folds the results in block order.

Key features:
- Bounded queue size so producers cannot run far ahead of the reducer
- Results handed back in submission order, independent of worker count
- Graceful shutdown with sentinel tasks
- Thread-safe task counting and statistics
- Integration with the logging system
"""

from __future__ import annotations

import threading
from collections import deque
from queue import Empty, Full, Queue
from threading import Event, Thread
from typing import Any, Callable, Deque, Iterable, Iterator, Optional, TypeVar

from mertens_lib.logger import get_logger

T = TypeVar("T")
R = TypeVar("R")


class TaskHandle:
    """Result slot for one submitted task."""

    __slots__ = ("_done", "_result", "_error")

    def __init__(self) -> None:
        self._done = Event()
        self._result: Any = None
        self._error: Optional[BaseException] = None

    def set_result(self, value: Any) -> None:
        self._result = value
        self._done.set()

    def set_error(self, error: BaseException) -> None:
        self._error = error
        self._done.set()

    def done(self) -> bool:
        return self._done.is_set()

    def result(self, timeout: Optional[float] = None) -> Any:
        """Block until the task finishes; re-raise the task's exception."""
        if not self._done.wait(timeout):
            raise TimeoutError("task did not finish in time")
        if self._error is not None:
            raise self._error
        return self._result


class ThreadPool:
    def __init__(self, num_workers: int = 4, queue_max: int = 8, worker_type: str = "worker"):
        """
        Initialize the thread pool.

        Args:
            num_workers: Number of worker threads to create
            queue_max: Maximum number of tasks waiting in the queue
            worker_type: Label used when registering workers with the logger
        """
        self._tasks: Queue[tuple[Optional[Callable[..., Any]], tuple, TaskHandle | None]] = Queue(maxsize=queue_max)
        self._stop = Event()
        self._logger = get_logger()
        self._worker_type = worker_type

        self._workers = [Thread(target=self._worker, daemon=True, name=f"{worker_type}-{i}")
                         for i in range(num_workers)]

        self._lock = threading.Lock()
        self._tasks_completed = 0
        self._tasks_failed = 0

        for w in self._workers:
            self._logger.register_thread(w.name, worker_type, {"queue_max": queue_max})
            w.start()

        self._logger.debug(f"Thread pool started with {num_workers} workers, queue max={queue_max}")

    def __enter__(self) -> "ThreadPool":
        return self

    def __exit__(self, *exc: object) -> None:
        self.shutdown(wait=True)

    @property
    def queue_max(self) -> int:
        return self._tasks.maxsize

    def submit(self, fn: Callable[..., Any], *args: Any) -> TaskHandle:
        """Queue a task, blocking while the queue is full."""
        handle = TaskHandle()
        while True:
            if self._stop.is_set():
                raise RuntimeError("thread pool is shut down")
            try:
                self._tasks.put((fn, args, handle), timeout=0.5)
                return handle
            except Full:
                continue

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> Iterator[R]:
        """Apply ``fn`` to every item on the workers, yielding results in input order.

        At most ``queue_max + num_workers`` results are pending at any time.
        """
        window = self._tasks.maxsize + len(self._workers)
        pending: Deque[TaskHandle] = deque()
        for item in items:
            pending.append(self.submit(fn, item))
            if len(pending) >= window:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()

    def shutdown(self, wait: bool = True) -> None:
        """Shutdown the thread pool gracefully.

        Sends sentinel values (None) to wake up workers and stop them.
        """
        if self._stop.is_set():
            return
        self._stop.set()

        for _ in self._workers:
            try:
                self._tasks.put_nowait((None, (), None))
            except Full:
                # workers also poll the stop event
                pass

        self._logger.debug("Thread pool stats", extra_data=self.get_stats())

        if wait:
            for w in self._workers:
                w.join(timeout=2.0)
                if w.is_alive():
                    self._logger.warning(f"Worker {w.name} did not shut down gracefully")
                else:
                    self._logger.unregister_thread(w.name)

        self._logger.debug("Thread pool shutdown complete")

    def get_stats(self) -> dict:
        """Get thread pool statistics in a thread-safe manner."""
        with self._lock:
            return {
                "tasks_completed": self._tasks_completed,
                "tasks_failed": self._tasks_failed,
                "queue_size": self._tasks.qsize(),
                "queue_max": self._tasks.maxsize,
                "workers_active": len([w for w in self._workers if w.is_alive()]),
            }

    def _worker(self) -> None:
        """Worker loop that processes tasks from the queue until shutdown."""
        worker_name = threading.current_thread().name

        while not self._stop.is_set():
            try:
                fn, args, handle = self._tasks.get(timeout=0.5)
            except Empty:
                continue

            if fn is None:
                self._tasks.task_done()
                break

            self._logger.update_thread_status(worker_name, "busy")
            try:
                result = fn(*args)
            except Exception as e:
                self._logger.error(f"Worker {worker_name} task failed: {e}")
                with self._lock:
                    self._tasks_failed += 1
                if handle is not None:
                    handle.set_error(e)
            else:
                with self._lock:
                    self._tasks_completed += 1
                if handle is not None:
                    handle.set_result(result)
            finally:
                self._logger.update_thread_status(worker_name, "idle")
                self._tasks.task_done()


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1,
                worker_type: str = "worker") -> Iterator[R]:
    """Run ``fn`` over ``items`` on a temporary pool, or inline for one thread."""
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    pool = ThreadPool(num_workers=threads, queue_max=2 * threads, worker_type=worker_type)
    try:
        yield from pool.map_ordered(fn, items)
    finally:
        pool.shutdown(wait=True)
