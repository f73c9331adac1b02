"""Backend selection for the hot numeric kernels.

Set ``ELECTROGP_NUMBA=0`` to force the pure-numpy kernels even when numba is
importable. ``ELECTROGP_THREADS`` caps numba and BLAS thread pools.
"""
import os
import warnings

_OFF = {"0", "false", "no", "off"}


def numba_requested():
    return os.environ.get("ELECTROGP_NUMBA", "1").strip().lower() not in _OFF


try:
    import numba

    # The TBB layer is only usable with recent TBB builds; try it last.
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    if numba_requested():
        warnings.warn("numba could not be imported; falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


def apply_thread_limit(value=None):
    """Cap internal parallelism; returns the applied limit or None."""
    value = value if value is not None else os.environ.get("ELECTROGP_THREADS")
    if not value:
        return None
    n = int(value)
    if n < 1:
        raise ValueError("ELECTROGP_THREADS must be a positive integer")
    if HAVE_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(n)
    except ImportError:
        pass
    return n
