from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any, TypeVar

from ezbranch.utils.logger import get_logger

_logger = get_logger(__name__)

T = TypeVar("T")

CHUNK_SIZE = 512


def replica_chunks(runs: int, chunk_size: int = CHUNK_SIZE) -> list[range]:
    r"""Split ``range(runs)`` into contiguous chunks of fixed size.

    The chunking does not depend on the worker count.
    """
    return [range(s, min(s + chunk_size, runs)) for s in range(0, runs, chunk_size)]


def ordered_map(
    func: Callable[..., T],
    chunks: Sequence[range],
    *args: Any,
    workers: int = 1,
) -> list[T]:
    r"""Evaluate ``func(chunk, *args)`` for every chunk, in chunk order.

    Parameters
    ----------
    func : Callable
        Module-level (picklable) function taking a ``range`` of replica
        indices first.
    chunks : Sequence[range]
        Replica chunks, usually from ``replica_chunks``.
    *args : Any
        Extra positional arguments forwarded to ``func``.
    workers : int, default to 1
        Number of worker processes. ``1`` runs everything in-process.

    Returns
    -------
    list
        Results ordered like ``chunks`` regardless of completion order.
    """
    if workers <= 1 or len(chunks) <= 1:
        return [func(chunk, *args) for chunk in chunks]

    _logger.debug("dispatching %d chunks to %d workers", len(chunks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, chunk, *args) for chunk in chunks]
        return [f.result() for f in futures]
