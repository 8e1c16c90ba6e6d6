"""Backend selection for the numeric kernels.

The hot per-step filter kernels in ``_kernels`` are plain numpy code that
numba can compile in nopython mode.  By default they are JIT-compiled; set
the environment variable ``SVDKF_NUMBA=0`` before import to run the pure
numpy fallback instead (useful for debugging and for the backend benchmark
in ``benchmarks/compare_backends.py``).
"""

import os


def _numba_enabled() -> bool:
    flag = os.environ.get("SVDKF_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()

if NUMBA_ENABLED:
    from numba import njit as _njit

    def maybe_jit(func):
        # error_model='numpy' keeps IEEE semantics: x/0 yields inf/nan
        # instead of raising, which is what the divergence experiments
        # are designed to observe.
        return _njit(cache=True, error_model="numpy")(func)

else:

    def maybe_jit(func):
        return func
