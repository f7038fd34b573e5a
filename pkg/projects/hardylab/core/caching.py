#!/usr/bin/env python3
"""
Operator caching with content fingerprints.

Reducing operators are the expensive inner loop of every characteristic,
maximal operator and decomposition level. They are memoized under an md5
key built from the sampled weight, the exponent, the cube and the fitting
parameters.
"""

import hashlib
import json
import logging
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)


def array_fingerprint(values: np.ndarray) -> str:
    """md5 of an array's dtype, shape and bytes"""
    values = np.ascontiguousarray(values)
    digest = hashlib.md5()
    digest.update(str(values.dtype).encode())
    digest.update(str(values.shape).encode())
    digest.update(values.tobytes())
    return digest.hexdigest()


class OperatorCache:
    """
    Bounded in-memory cache for fitted operators
    """

    def __init__(self, max_entries: int = 8192):
        self.max_entries = max_entries
        self._cache: "OrderedDict[str, Any]" = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.lock = threading.RLock()

    def make_key(self, *parts: Any) -> str:
        """Generate a key from JSON-serializable parts"""
        data_str = json.dumps(list(parts), sort_keys=True, default=str)
        return hashlib.md5(data_str.encode()).hexdigest()

    def get(self, key: str) -> Optional[Any]:
        with self.lock:
            if key in self._cache:
                self.hits += 1
                self._cache.move_to_end(key)
                return self._cache[key]
            self.misses += 1
            return None

    def set(self, key: str, value: Any) -> None:
        with self.lock:
            self._cache[key] = value
            self._cache.move_to_end(key)
            while len(self._cache) > self.max_entries:
                self._cache.popitem(last=False)

    def get_or_compute(self, key: str, compute: Callable[[], Any]) -> Any:
        cached = self.get(key)
        if cached is not None:
            return cached
        value = compute()
        self.set(key, value)
        return value

    def invalidate_cache(self) -> int:
        """Drop every entry and reset statistics"""
        with self.lock:
            count = len(self._cache)
            self._cache.clear()
            self.hits = 0
            self.misses = 0
        logger.debug(f"Invalidated {count} cached operators")
        return count

    def get_cache_stats(self) -> Dict[str, Any]:
        with self.lock:
            lookups = self.hits + self.misses
            return {
                "total_entries": len(self._cache),
                "hits": self.hits,
                "misses": self.misses,
                "hit_ratio": self.hits / lookups if lookups else 0.0
            }


# Global operator cache instance
operator_cache = OperatorCache()


def get_operator_cache() -> OperatorCache:
    """Get the global operator cache instance"""
    return operator_cache
