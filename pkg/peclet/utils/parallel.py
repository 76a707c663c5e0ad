"""Order-preserving task execution, serial or on a process pool."""

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_tasks(func: Callable[[T], R], tasks: Iterable[T], workers: int = 1) -> list[R]:
    """Apply ``func`` to every task and return results in task order.

    ``func`` must be a module-level function and tasks picklable when
    ``workers > 1``. Serial and parallel runs return identical lists.
    """
    items: Sequence[T] = list(tasks)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.info("Running %d tasks on %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
