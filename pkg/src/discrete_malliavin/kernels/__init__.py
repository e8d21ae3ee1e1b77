"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The active backend is chosen once at import time from the environment variable
``DISCRETE_MALLIAVIN_BACKEND`` (``numba`` by default, ``numpy`` to disable the
JIT).  If numba cannot be imported the numpy path is used silently.  Both
backend modules stay importable for tests and benchmarks.
"""
import os
import warnings

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

ENV_FLAG = "DISCRETE_MALLIAVIN_BACKEND"

_requested = os.environ.get(ENV_FLAG, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    warnings.warn(f"{ENV_FLAG}={_requested!r} not recognised, using numba")
    _requested = "numba"

if _requested == "numba" and numba_backend is not None:
    BACKEND = "numba"
    _impl = numba_backend
else:
    BACKEND = "numpy"
    _impl = numpy_backend

KERNEL_NAMES = (
    "walsh_forward",
    "walsh_inverse",
    "weighted_sum",
    "marginalize_high",
    "finite_difference",
    "independent_of_bits_from",
    "kernel_apply",
)

walsh_forward = _impl.walsh_forward
walsh_inverse = _impl.walsh_inverse
weighted_sum = _impl.weighted_sum
marginalize_high = _impl.marginalize_high
finite_difference = _impl.finite_difference
independent_of_bits_from = _impl.independent_of_bits_from
kernel_apply = _impl.kernel_apply


def available_backends():
    return {"numpy": numpy_backend, **({"numba": numba_backend} if numba_backend else {})}
