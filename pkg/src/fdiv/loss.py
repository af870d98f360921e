"""Fenchel-Young losses generated by f-divergences.

    loss(theta, y; q) = softmax_f(theta; q) + D_f(y, q) - <theta, y>

The loss is convex in ``theta``, nonnegative, and vanishes exactly when the
f-softargmax of ``theta`` equals ``y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .generators import DomainError, Generator, as_reference, divergence, divergence_grad_q
from .operators import batch_softargmax, f_softargmax
from .solver import DEFAULT_CONFIG, SolverConfig

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class LossResult:
    value: float
    grad_theta: np.ndarray
    p_star: np.ndarray
    grad_q: Optional[np.ndarray] = None


def check_labels(g: Generator, y, k: Optional[int] = None) -> np.ndarray:
    """Validate a target distribution; it is never renormalized."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or (k is not None and y.size != k):
        raise ValueError(f"labels must be a vector of length {k}, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y < -SIMPLEX_TOL):
        raise ValueError("labels must be finite and nonnegative")
    if abs(y.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"labels must sum to 1 (got {y.sum()!r}); renormalize upstream")
    if math.isinf(g.f_at_zero) and np.any(y <= 0):
        raise DomainError(f"{g.name} needs strictly positive soft labels: D_f(y, q) is "
                          "infinite when some y_j = 0")
    return np.maximum(y, 0.0)


def fy_loss(g: Generator, theta, y, q=None, cfg: SolverConfig = DEFAULT_CONFIG,
            with_grad_q: bool = False) -> LossResult:
    """Loss value, its gradient in ``theta`` and optionally in ``q``.

    Parameters
    ----------
    g : Generator
    theta : array_like
        Logits; ``-inf`` entries mask classes.
    y : array_like
        Target on the simplex (tolerance ``1e-9``).
    q : array_like, optional
        Reference measure, uniform ones by default.
    with_grad_q : bool
        Also return the gradient with respect to ``q``.

    Examples
    --------
    >>> from fdiv.generators import make_generator
    >>> round(fy_loss(make_generator("kl"), [0.0, 0.0], [1.0, 0.0]).value, 6)
    0.693147
    """
    theta = np.asarray(theta, dtype=float)
    ref = as_reference(q, theta.size)
    y = check_labels(g, y, theta.size)
    res = f_softargmax(g, theta, ref, cfg)
    masked = np.isneginf(theta)
    if np.any(masked & (y > 0)):
        raise DomainError("a masked class carries label mass; the loss is infinite")
    inner = float(np.dot(np.where(masked, 0.0, theta), y))
    value = res.softmax_value + divergence(g, y, ref) - inner
    grad_q = fy_loss_grad_q(g, theta, y, ref, cfg, result=res) if with_grad_q else None
    return LossResult(float(value), res.p - y, res.p, grad_q)


def fy_loss_grad_theta(g: Generator, theta, y, q=None, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``p* - y``."""
    return fy_loss(g, theta, y, q, cfg).grad_theta


def fy_loss_grad_q(g: Generator, theta, y, q=None, cfg: SolverConfig = DEFAULT_CONFIG,
                   result=None) -> np.ndarray:
    """``grad_q D_f(y, q) - grad_q D_f(p*, q)``.

    Components where ``y_j = 0`` or ``p*_j = 0`` use ``f(0+)`` for the
    corresponding term.
    """
    theta = np.asarray(theta, dtype=float)
    ref = as_reference(q, theta.size)
    y = check_labels(g, y, theta.size)
    if result is None:
        result = f_softargmax(g, theta, ref, cfg)
    return divergence_grad_q(g, y, ref) - divergence_grad_q(g, result.p, ref)


@dataclass
class BatchLoss:
    mean: float
    values: np.ndarray
    grad_theta: np.ndarray
    p_star: np.ndarray
    errors: List[Optional[str]]


def fy_loss_batch(g: Generator, thetas, ys, q=None, cfg: SolverConfig = DEFAULT_CONFIG,
                  backend=None) -> BatchLoss:
    """Row-wise losses and their mean.

    Rows that fail validation get NaN and an error message; the mean is
    taken over the remaining rows (NaN if none remain).
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if ys.shape != thetas.shape:
        raise ValueError(f"labels shape {ys.shape} does not match logits {thetas.shape}")
    ref = as_reference(q, thetas.shape[1])
    res = batch_softargmax(g, thetas, ref, cfg, backend=backend)
    errors = list(res.errors)
    values = np.full(len(thetas), np.nan)
    for i, (th, y) in enumerate(zip(thetas, ys)):
        if errors[i] is not None:
            continue
        try:
            y = check_labels(g, y, th.size)
            masked = np.isneginf(th)
            if np.any(masked & (y > 0)):
                raise DomainError("a masked class carries label mass; the loss is infinite")
            values[i] = res.softmax_value[i] + divergence(g, y, ref) \
                - float(np.dot(np.where(masked, 0.0, th), y))
        except ValueError as exc:
            errors[i] = str(exc)
    ok = np.array([e is None for e in errors])
    grad = np.where(ok[:, None], res.p - ys, np.nan)
    mean = float(values[ok].mean()) if ok.any() else float("nan")
    return BatchLoss(mean, values, grad, res.p, errors)
