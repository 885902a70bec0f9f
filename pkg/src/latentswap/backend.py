"""Kernel backend selection.

Hot array kernels (convolutions, the bilinear warp) exist twice: a numba
@njit implementation and a pure-numpy fallback. The active backend is chosen
once at import time from the LATENTSWAP_BACKEND environment variable:

  LATENTSWAP_BACKEND=numba   force numba (raises if numba cannot compile)
  LATENTSWAP_BACKEND=numpy   force the pure-numpy fallback
  unset                      numba when importable, else numpy

Both backends compute the same quantities; floating-point rounding may
differ between them because summation orders differ, so reproducibility
guarantees hold per backend. `benchmarks/bench_backends.py` compares them.
"""

import os

_VALID = ("numba", "numpy")


def _detect():
    choice = os.environ.get("LATENTSWAP_BACKEND", "").strip().lower()
    if choice and choice not in _VALID:
        raise RuntimeError(
            f"LATENTSWAP_BACKEND must be one of {_VALID}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError("LATENTSWAP_BACKEND=numba but numba is not importable")
        return "numpy"
    return "numba"


ACTIVE = _detect()


def active_backend():
    """Name of the kernel backend selected for this process."""
    return ACTIVE
