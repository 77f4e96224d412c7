"""
Independent repetitions over split random streams.

Every task gets its own Generator derived from the caller's generator in a
fixed order, so the results do not depend on the number of threads.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple, TypeVar

import numpy as np

from .errors import ConfigError, RecoveryFailure

logger = logging.getLogger(__name__)

THREADS_ENV = "SPARSE_TONE_THREADS"

R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError as error:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from error
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1, got {count}")
    return count


def spawn_rngs(rng: np.random.Generator, n: int) -> List[np.random.Generator]:
    """n child generators from the seed sequence of rng (independent streams)."""
    return rng.spawn(n)


def run_repeats(task: Callable[[np.random.Generator], R], rng: np.random.Generator,
                n: int) -> List[R]:
    """Run task n times, each on its own stream; results keep task order."""
    streams = spawn_rngs(rng, n)
    workers = min(thread_count(), n)
    if workers <= 1:
        return [task(stream) for stream in streams]
    logger.debug(f"Running {n} repetitions on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, streams))


def run_repeats_tolerant(task: Callable[[np.random.Generator], R], rng: np.random.Generator,
                         n: int) -> Tuple[List[R], List[RecoveryFailure]]:
    """Like run_repeats, but recovery failures are collected instead of raised."""

    def guarded(stream):
        try:
            return task(stream), None
        except RecoveryFailure as failure:
            return None, failure

    outcomes = run_repeats(guarded, rng, n)
    results = [value for value, failure in outcomes if failure is None]
    failures = [failure for _, failure in outcomes if failure is not None]
    return results, failures
