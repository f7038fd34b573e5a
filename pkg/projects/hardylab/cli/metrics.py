"""
Run metrics: wall-clock time, peak memory and cache efficiency per command
"""

import time
import logging
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterator, List, Optional

import psutil

from ..core.caching import get_operator_cache

logger = logging.getLogger(__name__)


@dataclass
class CommandMetric:
    """Individual command metric"""
    command: str
    status: str
    wall_seconds: float
    peak_rss_mb: float
    cache_hit_ratio: float
    cache_entries: int
    error_code: Optional[str] = None


class RunMetricsCollector:
    """Collects one CommandMetric per executed command"""

    def __init__(self):
        self.metrics: List[CommandMetric] = []
        self.start_time = time.time()
        self.lock = threading.RLock()
        self._process = psutil.Process()
        self._peak_rss = 0.0

    def _rss_mb(self) -> float:
        try:
            return self._process.memory_info().rss / (1024 * 1024)
        except psutil.Error as e:
            logger.error(f"Failed to read process memory: {e}")
            return 0.0

    def _sample_peak_rss(self) -> float:
        """Running maximum of the sampled RSS"""
        current = self._rss_mb()
        with self.lock:
            self._peak_rss = max(self._peak_rss, current)
            return self._peak_rss

    def record(self, command: str, status: str, wall_seconds: float,
               error_code: Optional[str] = None) -> CommandMetric:
        stats = get_operator_cache().get_cache_stats()
        metric = CommandMetric(
            command=command,
            status=status,
            wall_seconds=wall_seconds,
            peak_rss_mb=self._sample_peak_rss(),
            cache_hit_ratio=float(stats.get("hit_ratio", 0.0)),
            cache_entries=int(stats.get("total_entries", 0)),
            error_code=error_code
        )
        with self.lock:
            self.metrics.append(metric)
        return metric

    @contextmanager
    def track(self, command: str) -> Iterator[Dict[str, Any]]:
        """Time a command; the caller may set state["status"] before leaving"""
        state: Dict[str, Any] = {"status": "ok", "error_code": None}
        self._sample_peak_rss()
        started = time.perf_counter()
        try:
            yield state
        except Exception as e:
            state["status"] = "error"
            state["error_code"] = getattr(e, "code", type(e).__name__)
            raise
        finally:
            metric = self.record(command, state["status"], time.perf_counter() - started, state["error_code"])
            logger.debug(f"Command {command}: {metric.wall_seconds:.3f}s, {metric.peak_rss_mb:.1f} MB")

    def get_summary(self) -> Dict[str, Any]:
        with self.lock:
            return {
                "uptime_seconds": time.time() - self.start_time,
                "commands": [asdict(metric) for metric in self.metrics],
                "total_wall_seconds": sum(metric.wall_seconds for metric in self.metrics),
                "peak_rss_mb": max((metric.peak_rss_mb for metric in self.metrics), default=0.0)
            }


_collector: Optional[RunMetricsCollector] = None


def get_metrics_collector() -> RunMetricsCollector:
    global _collector
    if _collector is None:
        _collector = RunMetricsCollector()
    return _collector
