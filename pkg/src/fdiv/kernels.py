"""Backend selection for the batch bisection kernel.

The compiled Cython extension is used when it imports and the generator can
be described to it; otherwise the numpy fallback runs.  Setting
``FDIV_PURE_PYTHON=1`` forces the fallback at import time.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("FDIV_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernel disabled by FDIV_PURE_PYTHON")
    from . import _kernel
except ImportError:
    _kernel = None

BACKEND = "compiled" if _kernel is not None else "python"
BACKENDS = ("compiled", "python") if _kernel is not None else ("python",)


def bisect_rows(g, theta, q, lo, hi, tol, max_iter, fixed, backend=None):
    """Bisect each row; returns ``(tau, iterations, lo, hi)``.

    ``theta`` and ``q`` are ``(b, k)`` float arrays (``q`` may be a
    broadcast view), ``lo`` / ``hi`` the per-row brackets.
    """
    backend = backend or BACKEND
    params = g.kernel_params()
    if backend == "compiled" and _kernel is not None and params is not None:
        code, alpha, scale, offset = params
        lo = np.array(lo, dtype=float)
        hi = np.array(hi, dtype=float)
        tau = np.empty_like(lo)
        iters = np.empty(lo.shape, dtype=np.int64)
        _kernel.bisect_rows(np.asarray(theta, dtype=float), np.asarray(q, dtype=float),
                            code, alpha, scale, offset, float(g.fprime_at_zero),
                            lo, hi, float(tol), int(max_iter), bool(fixed), tau, iters)
        return tau, iters, lo, hi
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return _fallback.bisect_rows(g, np.asarray(theta, dtype=float), np.asarray(q, dtype=float),
                                 lo, hi, tol, max_iter, fixed)
