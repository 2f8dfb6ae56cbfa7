"""
Sweeper, used to evaluate independent parameter points concurrently (using threads).
"""

from __future__ import annotations
from typing import Any
from typing import Callable
from typing import Iterable
import concurrent.futures
import logging
import os

from zeromode.utils.misc import ZeroModeError

logger = logging.getLogger(__name__)


class Sweeper:
    """
    Sweeper class. Uses a thread pool to evaluate a function on a list of parameter points and
    calls a callback for each point once it is done. The heavy lifting happens inside LAPACK
    and sparse kernels, which release the GIL.
    """

    def __init__(self, max_workers: int | None = None):
        # One worker per core unless told otherwise
        self.max_workers = max_workers or os.cpu_count() or 1
        self.executor = concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers)

    def __enter__(self) -> Sweeper:
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

    def shutdown(self) -> None:
        self.executor.shutdown(wait=True)

    def evaluate_point(self, function: Callable, point: Any) -> tuple[bool, Any]:
        """Evaluate function at point; return (success, result or the raised error)."""
        try:
            result = function(point)
        # Library errors are reported per point, anything else is a bug and propagates
        except ZeroModeError as err:
            logger.debug('Point %r failed: %s', point, err)
            return (False, err)
        else:
            return (True, result)

    def evaluate_concurrently(self, function: Callable, points: Iterable, callback: Callable) -> list:
        """
        Submit one evaluation per point and call callback(index, success, payload) for each of
        them when finished. Returns the futures in input order.
        """
        futures = []
        for index, point in enumerate(points):
            future = self.executor.submit(self.evaluate_point, function, point)
            # Use of default arguments necessary here because lambdas are produced in a for loop!
            future.add_done_callback(lambda _, index=index, future=future:
                                     callback(index, future.result()[0], future.result()[1]))
            futures.append(future)
        return futures

    def map(self, function: Callable, points: Iterable) -> list:
        """
        Evaluate function on all points and return the results in input order. The first
        failure (in input order) is re-raised after all points have finished.
        """
        points = list(points)

        def point_done(index: int, success: bool, payload: Any) -> None:
            logger.info('Point %d/%d done%s', index + 1, len(points), '' if success else ' (failed)')

        futures = self.evaluate_concurrently(function, points, point_done)
        concurrent.futures.wait(futures)

        results = []
        for future in futures:
            success, payload = future.result()
            if not success:
                raise payload
            results.append(payload)
        return results
