"""Worker pool for mapping pure computations over graphs and checks."""

import asyncio
import os
from enum import Enum
from typing import Any, Callable, List, Optional, Sequence, TypeVar

from .logging_config import get_logger

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "MONOCLUSTER_THREADS"


class ExecutionMode(Enum):
    """Execution modes for pool processing."""
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


def thread_limit(default: int = 4) -> int:
    """Worker cap from MONOCLUSTER_THREADS (values below 1 mean 1)."""
    raw = os.getenv(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got '{raw}'")


class WorkerPool:
    """Runs a function over items and returns results in input order.

    Parallel mode off-loads each call with ``asyncio.to_thread`` under a
    semaphore, so the reduction order never depends on completion order.
    """

    def __init__(
        self,
        execution_mode: ExecutionMode = ExecutionMode.PARALLEL,
        max_workers: Optional[int] = None,
        name: str = "pool",
    ):
        """Initialize the pool.

        Args:
            execution_mode: Sequential or parallel processing
            max_workers: Concurrency cap (defaults to MONOCLUSTER_THREADS or 4)
            name: Label used in log events
        """
        self.execution_mode = execution_mode
        self.max_workers = max_workers if max_workers is not None else thread_limit()
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be positive, got {self.max_workers}")
        if self.max_workers == 1:
            self.execution_mode = ExecutionMode.SEQUENTIAL
        self.logger = get_logger(f"WorkerPool({name})")

    async def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """Apply ``fn`` to every item.

        Raises:
            Exception: The first failure, in input order
        """
        items = list(items)
        self.logger.debug("mapping", items=len(items), mode=self.execution_mode.value)

        if self.execution_mode == ExecutionMode.SEQUENTIAL:
            return [fn(item) for item in items]

        semaphore = asyncio.Semaphore(self.max_workers)

        async def run_one(item: T) -> R:
            async with semaphore:
                return await asyncio.to_thread(fn, item)

        outputs: List[Any] = await asyncio.gather(
            *(run_one(item) for item in items), return_exceptions=True
        )
        for index, output in enumerate(outputs):
            if isinstance(output, Exception):
                self.logger.error("task failed", index=index, error=str(output))
                raise output
        return outputs

    def run_map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        """Synchronous wrapper around :meth:`map`."""
        if self.execution_mode == ExecutionMode.SEQUENTIAL:
            return [fn(item) for item in items]
        return asyncio.run(self.map(fn, items))

    def __repr__(self) -> str:
        return f"WorkerPool(mode={self.execution_mode.value}, workers={self.max_workers})"
