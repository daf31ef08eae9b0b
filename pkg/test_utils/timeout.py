from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from functools import wraps


def timeout(sec: float = 3):
    """
    Fail a test that runs longer than sec seconds.

    The test body runs on a worker thread. A late body keeps running in the
    background, the interpreter still waits for it at exit.
    """
    def timeout_dec(func):
        @wraps(func)
        def test(*args, **kwargs):
            pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"timeout-{func.__name__}")
            future = pool.submit(func, *args, **kwargs)
            try:
                return future.result(timeout=sec)
            except FutureTimeout:
                raise TimeoutError(f"{func.__name__} timed out after {sec} seconds") from None
            finally:
                pool.shutdown(wait=False)
        return test
    return timeout_dec
