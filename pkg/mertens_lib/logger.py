"""
Run logging for the Mertens toolkit.

Provides timestamped console logging on stderr, optional text and JSON-lines
log files, worker thread tracking for the sieve pool, and a ``phase`` helper
that logs how long a named step took.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

LOG_FORMAT = "[%(asctime)s] [%(threadName)s] %(levelname)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class RunLogger:
    """Logger for long computations with worker tracking and JSON records."""

    def __init__(self, name: str = "mertens", log_file: Optional[str] = None,
                 json_log_file: Optional[str] = None, level: int = logging.INFO):
        """Initialize the run logger.

        Args:
            name: Logger name
            log_file: Optional file path for text logs
            json_log_file: Optional file path for JSON-lines logs
            level: Logging level (DEBUG, INFO, WARNING, ERROR)
        """
        self.name = name
        self.log_file = log_file
        self.json_log_file = json_log_file
        self.level = level

        self._workers: Dict[str, Dict[str, Any]] = {}
        self._worker_lock = threading.Lock()
        self._json_lock = threading.Lock()

        self._setup_logger()

        self._json_file_handle = None
        if json_log_file:
            self._setup_json_logging()

    def _setup_logger(self) -> None:
        self.logger = logging.getLogger(self.name)
        self.logger.setLevel(self.level)
        self.logger.propagate = False

        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)

        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

        # stderr keeps stdout free for result streams
        console_handler = logging.StreamHandler()
        console_handler.setLevel(self.level)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        if self.log_file:
            file_handler = logging.FileHandler(self.log_file, encoding="utf-8")
            file_handler.setLevel(self.level)
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

    def _setup_json_logging(self) -> None:
        try:
            Path(self.json_log_file).parent.mkdir(parents=True, exist_ok=True)
            self._json_file_handle = open(self.json_log_file, "a", encoding="utf-8")
        except OSError as e:
            self.logger.warning(f"Failed to open JSON log file {self.json_log_file}: {e}")
            self._json_file_handle = None

    def _log_json(self, level: str, message: str, extra_data: Optional[Dict[str, Any]] = None) -> None:
        record = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "thread_name": threading.current_thread().name,
            "level": level,
            "message": message,
            "logger": self.name,
        }
        if extra_data:
            record.update(extra_data)

        with self._json_lock:
            if not self._json_file_handle:
                return
            try:
                self._json_file_handle.write(json.dumps(record, default=str) + "\n")
                self._json_file_handle.flush()
            except (OSError, ValueError) as e:
                self.logger.error(f"Failed to write JSON log: {e}")

    def _emit(self, level: int, message: str, args: tuple,
              extra_data: Optional[Dict[str, Any]]) -> None:
        text = message % args if args else message
        self.logger.log(level, text)
        if self._json_file_handle and self.logger.isEnabledFor(level):
            self._log_json(logging.getLevelName(level), text, extra_data)

    def debug(self, message: str, *args, extra_data: Optional[Dict[str, Any]] = None) -> None:
        self._emit(logging.DEBUG, message, args, extra_data)

    def info(self, message: str, *args, extra_data: Optional[Dict[str, Any]] = None) -> None:
        self._emit(logging.INFO, message, args, extra_data)

    def warning(self, message: str, *args, extra_data: Optional[Dict[str, Any]] = None) -> None:
        self._emit(logging.WARNING, message, args, extra_data)

    def error(self, message: str, *args, extra_data: Optional[Dict[str, Any]] = None) -> None:
        self._emit(logging.ERROR, message, args, extra_data)

    def critical(self, message: str, *args, extra_data: Optional[Dict[str, Any]] = None) -> None:
        self._emit(logging.CRITICAL, message, args, extra_data)

    def is_debug(self) -> bool:
        return self.logger.isEnabledFor(logging.DEBUG)

    def register_thread(self, thread_name: str, thread_type: str = "worker",
                        additional_info: Optional[Dict[str, Any]] = None) -> None:
        """Register a worker thread for tracking.

        Args:
            thread_name: Name of the thread
            thread_type: Kind of work it does (sieve, reducer, main)
            additional_info: Extra fields shown in ``get_thread_stats``
        """
        with self._worker_lock:
            self._workers[thread_name] = {
                "type": thread_type,
                "start_time": time.time(),
                "status": "idle",
                "tasks": 0,
                "info": additional_info or {},
            }

    def unregister_thread(self, thread_name: str) -> None:
        with self._worker_lock:
            self._workers.pop(thread_name, None)

    def update_thread_status(self, thread_name: str, status: str,
                             additional_info: Optional[Dict[str, Any]] = None) -> None:
        with self._worker_lock:
            entry = self._workers.get(thread_name)
            if entry is None:
                return
            if status == "busy":
                entry["tasks"] += 1
            entry["status"] = status
            if additional_info:
                entry["info"].update(additional_info)

    def get_thread_stats(self) -> Dict[str, Any]:
        """Get a snapshot of tracked worker threads.

        Returns:
            Dictionary with totals, busy count, per-type counts and per-thread detail
        """
        with self._worker_lock:
            types: Dict[str, int] = {}
            for entry in self._workers.values():
                types[entry["type"]] = types.get(entry["type"], 0) + 1
            return {
                "total_threads": len(self._workers),
                "busy_threads": sum(1 for e in self._workers.values() if e["status"] == "busy"),
                "thread_types": types,
                "threads": {name: dict(entry) for name, entry in self._workers.items()},
            }

    @contextmanager
    def thread_context(self, thread_name: str, thread_type: str = "worker",
                       additional_info: Optional[Dict[str, Any]] = None) -> Iterator[None]:
        self.register_thread(thread_name, thread_type, additional_info)
        try:
            yield
        finally:
            self.unregister_thread(thread_name)

    @contextmanager
    def phase(self, name: str, **fields: Any) -> Iterator[Dict[str, Any]]:
        """Log the start and end of a named step with its wall time.

        The yielded dict may be filled by the caller; its content is attached
        to the closing JSON record.
        """
        details: Dict[str, Any] = dict(fields)
        self.debug(f"{name} started", extra_data={"phase": name, **fields})
        started = time.perf_counter()
        try:
            yield details
        finally:
            details["seconds"] = round(time.perf_counter() - started, 6)
            self.info(f"{name} finished in {details['seconds']:.3f}s",
                      extra_data={"phase": name, **details})

    def close(self) -> None:
        with self._json_lock:
            if self._json_file_handle:
                self._json_file_handle.close()
                self._json_file_handle = None
        for handler in self.logger.handlers[:]:
            handler.close()
            self.logger.removeHandler(handler)


_global_logger: Optional[RunLogger] = None


def get_logger() -> RunLogger:
    """Get or create the process-wide run logger."""
    global _global_logger
    if _global_logger is None:
        _global_logger = RunLogger("mertens", level=logging.WARNING)
    return _global_logger


def setup_logging(log_file: Optional[str] = None, json_log_file: Optional[str] = None,
                  level: int = logging.INFO) -> RunLogger:
    """Configure the process-wide run logger.

    Args:
        log_file: Optional file path for text logs
        json_log_file: Optional file path for JSON-lines logs
        level: Logging level

    Returns:
        Configured RunLogger instance
    """
    global _global_logger
    if _global_logger is not None:
        _global_logger.close()
    _global_logger = RunLogger("mertens", log_file, json_log_file, level)
    return _global_logger
