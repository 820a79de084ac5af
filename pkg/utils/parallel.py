"""
Order-preserving parallel map with independent random streams.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from utils.errors import UsageError

logger = logging.getLogger(__name__)


def spawn_seeds(seed, count):
    """Child seed sequences of ``seed``; the same seed always yields the same children."""
    if seed is None:
        raise UsageError("a seed is required for stochastic work")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


def map_ordered(function, items, max_workers=None):
    """Apply ``function`` to every item, returning results in input order.

    With ``max_workers`` of 1 (or a single item) the work runs inline.
    """
    items = list(items)
    if max_workers == 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(function, items))
    logger.debug(f"Mapped {len(items)} items on up to {max_workers or 'default'} workers")
    return results
