"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise
the numpy implementation in ``_pykernels`` is used. Set
``PARDG_BACKEND=python`` to force the fallback. Both backends produce
bitwise-identical results.
"""

import os

import numpy as np

from pardg import _pykernels

if os.environ.get("PARDG_BACKEND", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from pardg import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

cut_value = _impl.cut_value
cut_values = _impl.cut_values
cut_gradient = _impl.cut_gradient
brute_force_cut = _impl.brute_force_cut
quad_value = _impl.quad_value
quad_gradient = _impl.quad_gradient
quad_values = _impl.quad_values


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _pykernels}
    try:
        from pardg import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found


def seqsum(v):
    """Ascending-index sum of a vector (matches the kernels' summation order)."""
    v = np.asarray(v, dtype=np.float64)
    return float(np.cumsum(v)[-1]) if v.size else 0.0


def seqdot(a, b):
    return seqsum(np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64))
