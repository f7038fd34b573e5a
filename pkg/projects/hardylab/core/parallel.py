#!/usr/bin/env python3
"""
Per-cube parallel evaluation.

Cube-level work (characteristics, reducing operators, per-cube atoms) is
independent, so it is mapped over a thread pool. Results always come back
in input order so final reductions are deterministic.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

from .environment_utils import get_thread_count
from .errors import HardylabError

logger = logging.getLogger(__name__)


class CubeProcessor:
    """
    Maps a function over cubes with a thread pool, or inline when max_workers is 1
    """

    def __init__(self, max_workers: int = 1):
        self.max_workers = max(1, int(max_workers))
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers) if self.max_workers > 1 else None
        logger.debug(f"CubeProcessor initialized with {self.max_workers} workers")

    def map_cubes(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        items = list(items)
        if not items:
            return []
        if self.executor is None:
            return [fn(item) for item in items]
        try:
            return list(self.executor.map(fn, items))
        except HardylabError:
            raise
        except RuntimeError as e:
            logger.error(f"Error in parallel cube processing: {e}")
            # Fallback to sequential processing
            return [fn(item) for item in items]

    def shutdown(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None


_processor: Optional[CubeProcessor] = None
_processor_lock = threading.Lock()


def get_cube_processor() -> CubeProcessor:
    """Get the shared processor, creating it from HARDYLAB_THREADS on first use"""
    global _processor
    with _processor_lock:
        if _processor is None:
            _processor = CubeProcessor(get_thread_count())
        return _processor


def configure_processor(threads: Optional[int] = None) -> CubeProcessor:
    """Replace the shared processor with one of the requested size"""
    global _processor
    with _processor_lock:
        if _processor is not None:
            _processor.shutdown()
        _processor = CubeProcessor(get_thread_count(threads))
        return _processor
