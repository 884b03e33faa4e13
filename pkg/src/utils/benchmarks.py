"""
Performance measurement utilities for the pipeline stages.
Measures per-instance latency and stage throughput.
"""
import time
import statistics
import logging
from typing import Dict, List, Optional

import numpy as np

from .config import Config


class StageBenchmark:
    """Collects per-item latencies of one pipeline stage."""

    def __init__(self, name: str, total: Optional[int] = None):
        """Initialize stage benchmark.

        Args:
            name: Stage name used in log lines
            total: Expected number of items, for progress reporting
        """
        self.name = name
        self.total = total
        self.logger = logging.getLogger(name)
        self.latencies: List[float] = []
        self.start_time = time.perf_counter()
        self.last_log_time = time.time()

    def record(self, seconds: float) -> None:
        """Record one item latency and emit a progress line if due."""
        self.latencies.append(seconds)
        current_time = time.time()
        if current_time - self.last_log_time >= Config.PROGRESS_LOG_INTERVAL:
            elapsed = time.perf_counter() - self.start_time
            rate = len(self.latencies) / elapsed if elapsed > 0 else 0.0
            progress = f"{len(self.latencies)}/{self.total}" if self.total else str(len(self.latencies))
            self.logger.info(f"Progress: {progress} items, {rate:.2f} items/sec")
            self.last_log_time = current_time

    def summary(self) -> Dict[str, float]:
        """Latency statistics in seconds."""
        elapsed = time.perf_counter() - self.start_time
        if not self.latencies:
            return {'count': 0, 'elapsed': elapsed}
        return {
            'count': len(self.latencies),
            'elapsed': elapsed,
            'mean': statistics.mean(self.latencies),
            'median': statistics.median(self.latencies),
            'p95': float(np.percentile(self.latencies, 95)),
            'max': max(self.latencies),
            'items_per_sec': len(self.latencies) / elapsed if elapsed > 0 else 0.0
        }

    def log_summary(self) -> Dict[str, float]:
        """Log and return the latency statistics."""
        stats = self.summary()
        if stats['count']:
            self.logger.info(
                f"{stats['count']} items in {stats['elapsed']:.2f}s "
                f"(mean {stats['mean'] * 1e3:.1f} ms, median {stats['median'] * 1e3:.1f} ms, "
                f"p95 {stats['p95'] * 1e3:.1f} ms)"
            )
        return stats
