"""Bounded-concurrency execution of independent solver runs."""

import asyncio
import logging
from typing import Any, Callable, List, Tuple, TypeVar

logger = logging.getLogger(__name__)

# Each run is CPU-bound numpy work on its own arrays; more workers than cores only adds contention.
MAX_CONCURRENT = 4

T = TypeVar("T")


async def execute_batch(
    items: List[Any],
    operation: Callable[[Any], T],
    max_concurrent: int = MAX_CONCURRENT,
) -> Tuple[List[Tuple[Any, T]], List[Tuple[Any, str]]]:
    """Run a blocking ``operation`` on every item in worker threads.

    Args:
        items: Inputs, one run each
        operation: Blocking function applied to each item
        max_concurrent: Maximum number of runs in flight

    Returns:
        Tuple of (success_list, failed_list), both in input order
        - success_list: (item, result) pairs
        - failed_list: (item, error_message) pairs
    """
    if not items:
        return [], []

    semaphore = asyncio.Semaphore(max(1, max_concurrent))

    async def limited_operation(item: Any) -> T:
        async with semaphore:
            return await asyncio.to_thread(operation, item)

    results = await asyncio.gather(
        *[limited_operation(item) for item in items],
        return_exceptions=True,
    )

    success = []
    failed = []

    for item, result in zip(items, results):
        if isinstance(result, Exception):
            logger.warning(f"Run for {item!r} failed: {result}")
            failed.append((item, str(result)))
        else:
            success.append((item, result))

    return success, failed


def format_batch_result(
    operation_name: str,
    success: List[Any],
    failed: List[Tuple[Any, str]],
    item_name: str = "runs",
    max_errors_shown: int = 5,
) -> str:
    """Summarize a batch as readable text."""
    result = f"{operation_name} complete: {len(success)} {item_name} succeeded\n"

    if failed:
        result += f"Failed: {len(failed)}\n"
        for item, error in failed[:max_errors_shown]:
            result += f"  - {item}: {error}\n"
        if len(failed) > max_errors_shown:
            result += f"  ... and {len(failed) - max_errors_shown} more\n"

    return result
