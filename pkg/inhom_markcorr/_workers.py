import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)

THREADS_ENV = "MARKCORR_THREADS"


def worker_count(requested: Optional[int] = None) -> int:
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            limit = max(1, int(env))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    if requested is not None:
        limit = min(limit, max(1, requested))
    return limit


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Map ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    n = min(worker_count(workers), max(1, len(items)))
    if n == 1:
        return [fn(item) for item in items]
    logger.debug("mapping %d items over %d threads", len(items), n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
