import threading
import time

import pytest

from zeromode.utils.misc import ConvergenceError
from zeromode.utils.sweeper import Sweeper


def test_map_keeps_input_order():
    def slow_square(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    with Sweeper(4) as sweeper:
        assert sweeper.map(slow_square, range(5)) == [0, 1, 4, 9, 16]


def test_callback_sees_every_point():
    seen = []
    lock = threading.Lock()

    def record(index, success, payload):
        with lock:
            seen.append((index, success, payload))

    with Sweeper(2) as sweeper:
        futures = sweeper.evaluate_concurrently(lambda x: x + 1, [10, 20, 30], record)
        for future in futures:
            future.result()
    # Callbacks run right after each future finishes
    deadline = time.time() + 5
    while len(seen) < 3 and time.time() < deadline:
        time.sleep(0.01)
    assert sorted(seen) == [(0, True, 11), (1, True, 21), (2, True, 31)]


def test_first_failure_is_raised():
    def evaluate(x):
        if x % 2:
            raise ConvergenceError(f'point {x}')
        return x

    with Sweeper(3) as sweeper:
        with pytest.raises(ConvergenceError, match='point 1'):
            sweeper.map(evaluate, range(4))


def test_unexpected_errors_propagate():
    with Sweeper(1) as sweeper:
        with pytest.raises(ZeroDivisionError):
            sweeper.map(lambda x: 1 / x, [0])
