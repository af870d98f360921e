# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch bisection for the dual root equation.

Each row solves ``sum_j q_j f*'(max(theta_j - tau, f'(0))) = 1`` for ``tau``
inside a precomputed bracket.  The generator is passed as an integer code
for the base conjugate derivative plus an affine map ``v -> scale * v +
offset`` (covers temperature scaling and linear shifts).
"""
from libc.math cimport exp, log, log1p, sqrt, fabs, INFINITY

cdef enum:
    KL = 0
    GKL = 1
    RKL = 2
    JEFFREYS = 3
    JS = 4
    HELLINGER = 5
    CHI2 = 6
    RCHI2 = 7
    ALPHA = 8


cdef double lambert_w0(double z) noexcept nogil:
    cdef double w, ew, r, step
    cdef int i
    if z == 0.0:
        return 0.0
    if z == INFINITY:
        return INFINITY
    if z < 2.718281828459045:
        w = log1p(z)
    else:
        w = log(z) - log(log(z))
    for i in range(40):
        ew = exp(w)
        r = w * ew - z
        if r == 0.0:
            break
        step = r / (ew * (w + 1.0) - (w + 2.0) * r / (2.0 * w + 2.0))
        w -= step
        if fabs(step) <= 1e-12 * fabs(w):
            break
    return w


cdef double lambert_w_of_exp(double x) noexcept nogil:
    cdef double w
    cdef int i
    if x <= 700.0:
        return lambert_w0(exp(x))
    w = x - log(x)
    for i in range(8):
        w -= (w + log(w) - x) / (1.0 + 1.0 / w)
    return w


cdef inline double base_fstar_prime(int code, double alpha, double v) noexcept nogil:
    cdef double z
    if code == KL:
        return exp(v - 1.0)
    elif code == GKL:
        return exp(v)
    elif code == RKL:
        return -1.0 / v
    elif code == JEFFREYS:
        return 1.0 / lambert_w_of_exp(1.0 - v)
    elif code == JS:
        return 1.0 / (2.0 * exp(-v) - 1.0)
    elif code == HELLINGER:
        return 1.0 / ((1.0 - v) * (1.0 - v))
    elif code == CHI2:
        return v
    elif code == RCHI2:
        return 1.0 / sqrt(-2.0 * v)
    else:
        z = (alpha - 1.0) * v
        if z <= -1.0:
            return 0.0 if alpha > 1.0 else INFINITY
        return exp(log1p(z) / (alpha - 1.0))


cdef double row_residual(const double[:, :] theta, const double[:, :] q, Py_ssize_t i,
                         int code, double alpha, double scale, double offset,
                         double fprime0, double tau) noexcept nogil:
    cdef Py_ssize_t j, k = theta.shape[1]
    cdef double v, total = 0.0
    for j in range(k):
        v = theta[i, j] - tau
        if v > fprime0:
            total += q[i, j] * base_fstar_prime(code, alpha, scale * v + offset)
    return total - 1.0


def bisect_rows(const double[:, :] theta, const double[:, :] q,
                int code, double alpha, double scale, double offset, double fprime0,
                double[::1] lo, double[::1] hi, double tol, long max_iter, bint fixed,
                double[::1] tau_out, long[::1] iters_out):
    """Bisect every row of ``theta`` in place of ``tau_out`` / ``iters_out``.

    ``lo`` and ``hi`` are overwritten with the final brackets.
    """
    cdef Py_ssize_t i, b = theta.shape[0]
    cdef double tau, phi, a, c
    cdef long it
    with nogil:
        for i in range(b):
            a = lo[i]
            c = hi[i]
            tau = 0.5 * (a + c)
            phi = row_residual(theta, q, i, code, alpha, scale, offset, fprime0, tau)
            it = 0
            while it < max_iter:
                if not fixed and fabs(phi) <= tol:
                    break
                if phi < 0:
                    c = tau
                else:
                    a = tau
                tau = 0.5 * (a + c)
                it += 1
                if not fixed and (tau == a or tau == c):
                    break
                phi = row_residual(theta, q, i, code, alpha, scale, offset, fprime0, tau)
            lo[i] = a
            hi[i] = c
            tau_out[i] = tau
            iters_out[i] = it


def fstar_prime(int code, double alpha, double v):
    """Scalar base conjugate derivative, exposed for testing."""
    return base_fstar_prime(code, alpha, v)


def lambert_w(double z):
    return lambert_w0(z)
