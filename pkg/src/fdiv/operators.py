"""f-softmax and f-softargmax over the probability simplex.

For a generator ``f`` and reference measure ``q``

    softmax_f(theta; q)    = max_{p in simplex} <p, theta> - D_f(p, q)
    softargmax_f(theta; q) = the maximizer

Both come out of the dual root ``tau*`` (see :mod:`fdiv.solver`):

    p_j       = q_j f*'(max(theta_j - tau*, f'(0)))
    softmax_f = tau* + sum_j q_j f*(max(theta_j - tau*, f'(0)))

By default ``p`` is divided by its sum afterwards (``SolverConfig.renormalize``).

Logits equal to ``-inf`` mask their class: the entry is removed before
solving and gets ``p_j = 0`` back.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import solver
from .generators import DomainError, Generator, as_reference, divergence_grad_q, scaled
from .solver import DEFAULT_CONFIG, SolverConfig

# a coordinate is in the support when theta_j - tau* exceeds f'(0) by this much
SUPPORT_MARGIN = 1e-12
KINK_WIDTH = 1e-9


class KinkWarning(RuntimeWarning):
    """A Jacobian was requested exactly where the support changes."""


@dataclass(frozen=True)
class OperatorResult:
    p: np.ndarray
    tau_star: float
    softmax_value: float
    iterations: int
    support: np.ndarray
    converged: bool = True


def _split_mask(g: Generator, theta: np.ndarray):
    if np.any(np.isnan(theta)) or np.any(np.isposinf(theta)):
        raise ValueError("logits must be finite or -inf")
    masked = np.isneginf(theta)
    if masked.all():
        raise ValueError("every logit is -inf; nothing to normalize")
    if masked.any() and math.isinf(g.f_at_zero):
        raise DomainError(f"{g.name} has f(0) = +inf, so masked (-inf) logits would give an "
                          "infinite divergence")
    return masked


def _softmax_value(g: Generator, theta, q, tau):
    terms = q * g.clamped_fstar(theta - tau)
    return float(tau + np.sum(terms))


def f_softargmax(g: Generator, theta, q=None, cfg: SolverConfig = DEFAULT_CONFIG) -> OperatorResult:
    """f-softargmax of ``theta`` with its dual multiplier and softmax value.

    >>> from fdiv.generators import make_generator
    >>> f_softargmax(make_generator("kl"), [0.0, 0.0], [2.0, 1.0]).p.round(6)
    array([0.666667, 0.333333])
    """
    theta = np.asarray(theta, dtype=float)
    ref = as_reference(q, theta.size)
    masked = _split_mask(g, theta)
    keep = ~masked
    th, qk = theta[keep], ref.q[keep]
    res = solver.bisect(g, th, qk, cfg)
    tau = res.tau
    p = np.zeros(theta.size)
    if th.size == 1:
        p[keep] = 1.0
    else:
        pk = qk * g.clamped_fstar_prime(th - tau)
        p[keep] = pk / pk.sum() if cfg.renormalize else pk
    value = _softmax_value(g, th, qk, tau) - float(np.sum(ref.q[masked])) * g.f_at_zero \
        if masked.any() else _softmax_value(g, th, qk, tau)
    support = np.zeros(theta.size, dtype=bool)
    support[keep] = th - tau > g.fprime_at_zero + SUPPORT_MARGIN
    return OperatorResult(p, tau, value, res.iterations, support, res.converged)


def f_softmax(g: Generator, theta, q=None, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Optimal value of the regularized maximization."""
    return f_softargmax(g, theta, q, cfg).softmax_value


def temperature_softargmax(g: Generator, theta, q=None, beta: float = 1.0,
                           cfg: SolverConfig = DEFAULT_CONFIG) -> OperatorResult:
    """f-softargmax for the divergence scaled by ``beta``: logits divided by ``beta``."""
    if not beta > 0:
        raise ValueError(f"temperature must be positive, got {beta!r}")
    return f_softargmax(g, np.asarray(theta, dtype=float) / beta, q, cfg)


def temperature_softmax(g: Generator, theta, q=None, beta: float = 1.0,
                        cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    if not beta > 0:
        raise ValueError(f"temperature must be positive, got {beta!r}")
    return beta * f_softmax(g, np.asarray(theta, dtype=float) / beta, q, cfg)


def scaled_softargmax(g: Generator, theta, q=None, beta: float = 1.0,
                      cfg: SolverConfig = DEFAULT_CONFIG) -> OperatorResult:
    """Same quantity as :func:`temperature_softargmax`, solved with ``beta * f`` directly."""
    return f_softargmax(scaled(g, beta), theta, q, cfg)


def grad_softmax_theta(g: Generator, theta, q=None, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Gradient of the f-softmax in ``theta`` (Danskin): the f-softargmax."""
    return f_softargmax(g, theta, q, cfg).p


def grad_softmax_q(g: Generator, theta, q=None, cfg: SolverConfig = DEFAULT_CONFIG,
                   result: Optional[OperatorResult] = None) -> np.ndarray:
    """Gradient of the f-softmax in ``q``: ``-grad_q D_f(p*, q)``.

    Components with ``p*_j = 0`` equal ``-f(0+)``.
    """
    theta = np.asarray(theta, dtype=float)
    ref = as_reference(q, theta.size)
    if result is None:
        result = f_softargmax(g, theta, ref, cfg)
    return -divergence_grad_q(g, result.p, ref)


def softargmax_vjp(g: Generator, result: OperatorResult, theta, q, cotangent,
                   cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Vector-Jacobian product of the f-softargmax by implicit differentiation.

    Differentiating ``sum_j q_j f*'(theta_j - tau) = 1`` gives
    ``d tau / d theta = h / sum(h)`` with ``h_j = q_j f*''(theta_j - tau*)``
    on the support and ``0`` elsewhere, hence the symmetric Jacobian
    ``J = diag(h) - h h^T / sum(h)``.  Only a scalar division is needed.

    Coordinates sitting on the support boundary (within ``1e-9``) are kept
    on the smooth branch and reported with a :class:`KinkWarning`.
    """
    theta = np.asarray(theta, dtype=float)
    ref = as_reference(q, theta.size)
    c = np.asarray(cotangent, dtype=float)
    if c.shape != theta.shape:
        raise ValueError("cotangent must match theta")
    finite = ~np.isneginf(theta)
    v = np.where(finite, theta - result.tau_star, -np.inf)
    gap = v - g.fprime_at_zero
    if math.isfinite(g.fprime_at_zero):
        kink = finite & (np.abs(gap) < KINK_WIDTH)
        if kink.any():
            warnings.warn(f"support change at coordinates {np.flatnonzero(kink).tolist()}; "
                          "using the smooth branch", KinkWarning, stacklevel=2)
        active = finite & ((gap > SUPPORT_MARGIN) | kink)
    else:
        active = finite
    h = np.zeros(theta.size)
    if active.any():
        h[active] = ref.q[active] * np.asarray(g.fstar_second(np.maximum(v[active], g.fprime_at_zero)))
    total = h.sum()
    if total == 0 or not np.isfinite(total):
        return np.zeros_like(h)
    return h * c - h * (h @ c) / total


# ---------------------------------------------------------------------------
# Batches


@dataclass
class BatchResult:
    """Row-wise results; rows listed in ``errors`` hold NaN."""

    p: np.ndarray
    tau_star: np.ndarray
    softmax_value: np.ndarray
    iterations: np.ndarray
    support: np.ndarray
    errors: List[Optional[str]] = field(default_factory=list)

    def __len__(self):
        return self.p.shape[0]

    def __getitem__(self, i) -> OperatorResult:
        if self.errors[i] is not None:
            raise ValueError(f"row {i} failed: {self.errors[i]}")
        return OperatorResult(self.p[i], float(self.tau_star[i]), float(self.softmax_value[i]),
                              int(self.iterations[i]), self.support[i])

    @property
    def ok(self) -> np.ndarray:
        return np.array([e is None for e in self.errors], dtype=bool)


def _row_error(g: Generator, row: np.ndarray) -> Optional[str]:
    try:
        _split_mask(g, row)
    except ValueError as exc:
        return str(exc)
    return None


def batch_softargmax(g: Generator, thetas, q=None, cfg: SolverConfig = DEFAULT_CONFIG,
                     backend: Optional[str] = None) -> BatchResult:
    """f-softargmax of every row of a ``(b, k)`` array.

    Invalid rows are flagged in ``errors`` without aborting the batch.
    ``backend`` picks the bisection kernel ("compiled" or "python").
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    b, k = thetas.shape
    ref = as_reference(q, k)
    errors = [_row_error(g, row) for row in thetas]
    ok = np.array([e is None for e in errors], dtype=bool)
    p = np.full((b, k), np.nan)
    tau = np.full(b, np.nan)
    value = np.full(b, np.nan)
    iters = np.zeros(b, dtype=np.int64)
    support = np.zeros((b, k), dtype=bool)
    if ok.any():
        th = thetas[ok]
        t, it, _, _ = solver.bisect_batch(g, th, ref.q, cfg, backend=backend)
        v = th - t[:, None]
        with np.errstate(all="ignore"):
            pp = ref.q * g.clamped_fstar_prime(v)
            vals = t + (ref.q * g.clamped_fstar(v)).sum(axis=1)
        if cfg.renormalize:
            pp = pp / pp.sum(axis=1, keepdims=True)
        single = (~np.isneginf(th)).sum(axis=1) == 1
        if single.any():
            pp[single] = np.where(np.isneginf(th[single]), 0.0, 1.0)
        p[ok], tau[ok], value[ok], iters[ok] = pp, t, vals, it
        support[ok] = v > g.fprime_at_zero + SUPPORT_MARGIN
    return BatchResult(p, tau, value, iters, support, errors)
