"""Backend dispatch for the pairwise kernels.

The compiled extension is preferred when importable; set
``TDSELECTOR_BACKEND=python`` to force the numpy fallback (the benchmark and
the parity tests do this). ``active_backend()`` reports which one is live.
"""

import os

import numpy as np

_requested = os.environ.get("TDSELECTOR_BACKEND", "").strip().lower()

if _requested in ("python", "pure"):
    from tdselector import _kernels_py as _impl
elif _requested in ("compiled", "c"):
    from tdselector import _kernels_c as _impl  # ImportError here is deliberate
else:
    try:
        from tdselector import _kernels_c as _impl
    except ImportError:
        from tdselector import _kernels_py as _impl


def active_backend() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return _impl.BACKEND_NAME


def _as_matrix(x):
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def sqeuclidean_matrix(a, b):
    a, b = _as_matrix(a), _as_matrix(b)
    return _impl.pairwise_sqeuclidean(a, b)


def manhattan_matrix(a, b):
    a, b = _as_matrix(a), _as_matrix(b)
    return _impl.pairwise_manhattan(a, b)


def dot_matrix(a, b):
    a, b = _as_matrix(a), _as_matrix(b)
    return _impl.pairwise_dot(a, b)
