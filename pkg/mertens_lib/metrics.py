"""Run metrics: phase timings, block throughput and division counters."""

from __future__ import annotations

import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from datetime import datetime
from typing import Deque, Dict, Optional

try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False


@dataclass
class PhaseTiming:
    """Timing of one named step of a command."""
    name: str
    seconds: float
    items: int
    finished_at: datetime


class RunMetrics:
    """Thread-safe collector for per-phase timings and counters."""

    def __init__(self, max_history: int = 1000):
        self._lock = threading.Lock()
        self._phases: Deque[PhaseTiming] = deque(maxlen=max_history)
        self._totals: Dict[str, Dict[str, float]] = defaultdict(lambda: {
            "runs": 0, "seconds": 0.0, "items": 0, "max_seconds": 0.0,
        })
        self._counters: Dict[str, int] = defaultdict(int)
        self._start_time = time.time()

    def record_phase(self, name: str, seconds: float, items: int = 0) -> None:
        with self._lock:
            self._phases.append(PhaseTiming(name, seconds, items, datetime.now()))
            totals = self._totals[name]
            totals["runs"] += 1
            totals["seconds"] += seconds
            totals["items"] += items
            totals["max_seconds"] = max(totals["max_seconds"], seconds)

    def increment(self, counter: str, amount: int = 1) -> None:
        with self._lock:
            self._counters[counter] += amount

    def counter(self, name: str) -> int:
        with self._lock:
            return self._counters.get(name, 0)

    def get_system_metrics(self) -> Dict:
        """Get process resource usage if psutil is available."""
        if not PSUTIL_AVAILABLE:
            return {"error": "psutil not available"}
        try:
            process = psutil.Process()
            memory = process.memory_info()
            return {
                "memory": {
                    "rss": memory.rss,
                    "vms": memory.vms,
                    "percent": process.memory_percent(),
                },
                "cpu": {
                    "percent": process.cpu_percent(),
                    "count": psutil.cpu_count(),
                },
            }
        except Exception as e:
            return {"error": f"Failed to get system metrics: {e}"}

    def get_phase_stats(self) -> Dict[str, Dict[str, float]]:
        """Aggregate timings per phase name, with items per second where known."""
        with self._lock:
            result = {}
            for name, totals in self._totals.items():
                rate = totals["items"] / totals["seconds"] if totals["seconds"] > 0 else 0.0
                result[name] = {
                    "runs": totals["runs"],
                    "seconds": totals["seconds"],
                    "max_seconds": totals["max_seconds"],
                    "items": totals["items"],
                    "items_per_second": rate,
                }
            return result

    def get_summary_stats(self) -> Dict:
        with self._lock:
            summary = {
                "uptime_seconds": time.time() - self._start_time,
                "phases_recorded": len(self._phases),
                "counters": dict(self._counters),
            }
        summary["phases"] = self.get_phase_stats()
        summary["system"] = self.get_system_metrics()
        return summary


_run_metrics: Optional[RunMetrics] = None


def get_run_metrics() -> RunMetrics:
    """Get the global metrics collector instance."""
    global _run_metrics
    if _run_metrics is None:
        _run_metrics = RunMetrics()
    return _run_metrics
