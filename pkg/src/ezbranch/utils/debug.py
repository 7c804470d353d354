import functools
import time

from ezbranch.utils.logger import get_logger

_logger = get_logger(__name__)


def time_exec(n_exec: int = 1, report_avg: bool = True):
    r"""Time the execution of a function and log the result at DEBUG level.

    The decorated function is executed ``n_exec`` times and the value of the
    last call is returned, so ``n_exec=1`` is transparent to the caller.
    """

    def _decorator(func):
        @functools.wraps(func)
        def _wrapper(*args, **kwargs):
            res = []
            ret = None
            for _ in range(n_exec):
                s = time.perf_counter()
                ret = func(*args, **kwargs)
                res.append((time.perf_counter() - s) * 1e3)

            if report_avg:
                _logger.debug(
                    "%s: average time %.3f ms over %d call(s)",
                    func.__qualname__,
                    sum(res) / n_exec,
                    n_exec,
                )
            return ret

        return _wrapper

    return _decorator
