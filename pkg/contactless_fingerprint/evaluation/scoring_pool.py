"""Thread pool for embarrassingly parallel feature extraction and pair scoring.

- Runs a pure task over a list of inputs with up to max_workers threads
- Returns results in input order
- Reports each completion / failure through optional callbacks
- Logs failures with traceback and re-raises the first one once all tasks end
"""

import logging
import threading
import traceback
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar

from ..config import DEFAULT_MAX_WORKERS
from ..errors import ParameterError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ScoringPool:
    """Manages a pool of scoring threads."""

    def __init__(
        self,
        max_workers: int = DEFAULT_MAX_WORKERS,
        on_task_complete: Optional[Callable[[int, Any], None]] = None,
        on_task_failed: Optional[Callable[[int, BaseException], None]] = None,
    ):
        """Initialize scoring pool.

        Args:
            max_workers: Maximum concurrent threads
            on_task_complete: Callback (index, result) when a task succeeds
            on_task_failed: Callback (index, exception) when a task raises
        """
        if max_workers < 1:
            raise ParameterError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.on_task_complete = on_task_complete
        self.on_task_failed = on_task_failed

        self.lock = threading.Lock()
        self.completed = 0
        self.failed = 0

    def map(self, task: Callable[[T], R], items: Sequence[T], label: str = "task") -> List[R]:
        """Apply ``task`` to every item; results keep the order of ``items``."""
        results: List[Any] = [None] * len(items)
        errors: List[Optional[BaseException]] = [None] * len(items)

        def run(index: int, item: T):
            try:
                value = task(item)
            except Exception as e:
                errors[index] = e
                with self.lock:
                    self.failed += 1
                logger.error(f"{label} {index} failed: {e}", extra={"traceback": traceback.format_exc()})
                if self.on_task_failed:
                    self.on_task_failed(index, e)
                return
            results[index] = value
            with self.lock:
                self.completed += 1
            if self.on_task_complete:
                self.on_task_complete(index, value)

        if self.max_workers == 1 or len(items) <= 1:
            for index, item in enumerate(items):
                run(index, item)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                futures: List[Future] = [executor.submit(run, index, item) for index, item in enumerate(items)]
                for future in futures:
                    future.result()

        for error in errors:
            if error is not None:
                raise error
        logger.debug(f"Completed {len(items)} {label}s with {self.max_workers} workers")
        return results
