import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from conewave.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else CONEWAVE_THREADS, else the machine default."""
    if threads is not None:
        if threads < 1:
            raise ValueError(f"thread count must be positive, got {threads}")
        return threads
    if settings.CONEWAVE_THREADS:
        return max(1, settings.CONEWAVE_THREADS)
    return os.cpu_count() or 1


def batches(items: Sequence[T], batch_size: Optional[int] = None) -> List[Sequence[T]]:
    size = batch_size or settings.BATCH_SIZE
    return [items[i:i + size] for i in range(0, len(items), size)]


class BatchRunner:
    """Runs a function over fixed-size batches on a thread pool.

    Batch boundaries depend only on BATCH_SIZE and results come back in input order,
    so any reduction done by the caller is independent of the thread count.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = resolve_threads(threads)

    def map(self, func: Callable[[T], R], items: Sequence[T]) -> List[R]:
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [func(item) for item in items]
        chunks = batches(items)

        def run_chunk(chunk: Sequence[T]) -> List[R]:
            return [func(item) for item in chunk]

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results = list(pool.map(run_chunk, chunks))
        return [r for chunk in results for r in chunk]


def ordered_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    return BatchRunner(threads).map(func, items)
