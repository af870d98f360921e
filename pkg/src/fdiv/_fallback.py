"""Pure numpy batch bisection, used when the compiled kernel is unavailable.

Same iteration as the compiled kernel, vectorized across rows: rows that
have met the stopping rule are frozen while the others keep halving.
"""
import numpy as np


def row_residuals(g, theta, q, tau):
    with np.errstate(all="ignore"):
        p = q * g.clamped_fstar_prime(theta - tau[:, None])
    return p.sum(axis=1) - 1.0


def bisect_rows(g, theta, q, lo, hi, tol, max_iter, fixed):
    """Return ``(tau, iterations, lo, hi)`` for every row of ``theta``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    tau = 0.5 * (lo + hi)
    phi = row_residuals(g, theta, q, tau)
    iters = np.zeros(tau.shape, dtype=np.int64)
    active = np.ones(tau.shape, dtype=bool)
    for _ in range(max_iter):
        if not fixed:
            active &= ~(np.abs(phi) <= tol)
        if not active.any():
            break
        neg = phi < 0
        hi = np.where(active & neg, tau, hi)
        lo = np.where(active & ~neg, tau, lo)
        new_tau = 0.5 * (lo + hi)
        iters += active
        if not fixed:
            stalled = active & ((new_tau == lo) | (new_tau == hi))
        tau = np.where(active, new_tau, tau)
        if not fixed:
            active &= ~stalled
        idx = np.flatnonzero(active)
        if idx.size:
            phi[idx] = row_residuals(g, theta[idx], q[idx], tau[idx])
    return tau, iters, lo, hi
