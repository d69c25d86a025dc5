import hashlib
import logging
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np
from joblib import Parallel, delayed

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_SEED_MASK = (1 << 64) - 1


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """
    Derive an independent generator from a base seed and a path of labels.

    The same (seed, labels) always yields the same stream, and streams with
    different labels do not overlap.

    Args:
        seed: 64-bit base seed of the run
        labels: subsystem / restart labels, e.g. ("rho", size, restart)

    Returns:
        numpy Generator
    """
    digest = hashlib.sha256("/".join(str(label) for label in labels).encode("utf-8")).digest()
    spawn_key = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    sequence = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=spawn_key)
    return np.random.default_rng(sequence)


def parallel_map(func: Callable[[T], R], items: Iterable[T], n_jobs: Optional[int] = None) -> List[R]:
    """Map `func` over `items` with joblib threads; results keep item order."""
    items = list(items)
    if n_jobs is None:
        jobs = settings.WEIGHTFORGE_THREADS if settings.PARALLEL_ENABLED else 1
    else:
        jobs = n_jobs
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=jobs, prefer="threads")(delayed(func)(item) for item in items)


def best_by_value(results: Iterable, key: Callable) -> Optional[object]:
    """Max by key with first-index tie-break, so merging is schedule independent."""
    best = None
    best_value = -np.inf
    for result in results:
        value = key(result)
        if value > best_value:
            best, best_value = result, value
    return best
