"""Bracketed bisection for the one-dimensional dual root equation.

The f-softargmax over the simplex reduces to finding the multiplier ``tau``
solving

    phi(tau) = sum_j q_j f*'(max(theta_j - tau, f'(0))) - 1 = 0,

where ``phi`` is non-increasing and changes sign on the bracket

    tau_min = theta_max - f'(1 / q_max),   tau_max = theta_max - f'(1 / sum(q))

with ``q_max`` the weight of the (first) largest logit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .generators import DomainError, Generator, as_reference

# endpoint residuals worse than this get the bracket widened before bisecting
_ENDPOINT_SLACK = 1e-9
_WIDEN_ULPS = 64


class StopMode(str, enum.Enum):
    RESIDUAL = "residual"
    FIXED = "fixed"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule for the bisection.

    In ``RESIDUAL`` mode the loop stops once ``|phi(tau)| <= tolerance`` or
    after ``max_iterations`` halvings.  ``FIXED`` mode always performs
    exactly ``max_iterations`` halvings, which keeps batched runs branch-free
    and bit-reproducible.  With ``renormalize`` the operators divide the
    recovered probabilities by their sum, removing the ``O(tolerance)``
    mass error left by the stopping rule.
    """

    tolerance: float = 1e-8
    max_iterations: int = 100
    mode: StopMode = StopMode.RESIDUAL
    renormalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", StopMode(self.mode))
        if not (self.tolerance > 0):
            raise ValueError("tolerance must be positive")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")

    @property
    def fixed(self) -> bool:
        return self.mode is StopMode.FIXED

    @classmethod
    def fixed_iterations(cls, n: int, renormalize: bool = True) -> "SolverConfig":
        return cls(max_iterations=n, mode=StopMode.FIXED, renormalize=renormalize)


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class Bracket:
    tau_min: float
    tau_max: float

    @property
    def width(self) -> float:
        return self.tau_max - self.tau_min

    def __contains__(self, tau) -> bool:
        return self.tau_min <= tau <= self.tau_max


class BisectionResult(NamedTuple):
    tau: float
    iterations: int
    bracket: Bracket
    converged: bool


def _prepare(theta, q):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError("theta must be a non-empty vector")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite here; strip masked entries first")
    return theta, as_reference(q, theta.size)


def _residual(g: Generator, theta, q, tau: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.sum(q * g.clamped_fstar_prime(theta - tau))) - 1.0


def _raw_bracket(g: Generator, theta: np.ndarray, q: np.ndarray, total: float):
    j = int(np.argmax(theta))
    top = theta[j]
    lo = top - float(g.fprime(1.0 / q[j]))
    hi = top - float(g.fprime(1.0 / total))
    return lo, hi


def _widen(g, theta, q, lo, hi):
    """Push endpoints outward when rounding flipped the residual sign."""
    if _residual(g, theta, q, lo) < -_ENDPOINT_SLACK:
        cand = lo - _WIDEN_ULPS * math.ulp(lo)
        if np.max(theta) - cand < g.conjugate_domain_sup:
            lo = cand
    if _residual(g, theta, q, hi) > _ENDPOINT_SLACK:
        hi = hi + _WIDEN_ULPS * math.ulp(hi)
    return lo, hi


def bracket(g: Generator, theta, q=None) -> Bracket:
    """Interval guaranteed to contain the root of the dual equation."""
    theta, ref = _prepare(theta, q)
    lo, hi = _raw_bracket(g, theta, ref.q, ref.total)
    if theta.size > 1:
        lo, hi = _widen(g, theta, ref.q, lo, hi)
    return Bracket(float(lo), float(hi))


def residual(g: Generator, theta, q, tau: float) -> float:
    """``phi(tau) = sum_j q_j f*'(max(theta_j - tau, f'(0))) - 1``.

    Raises :class:`DomainError` when some ``theta_j - tau`` leaves the domain
    of ``f*'`` (only possible for ``tau`` below the bracket and generators
    with a bounded conjugate domain).
    """
    theta, ref = _prepare(theta, q)
    v = theta - tau
    if np.any(v >= g.conjugate_domain_sup):
        raise DomainError(f"tau={tau!r} puts theta - tau outside the conjugate domain of "
                          f"{g.name} (needs < {g.conjugate_domain_sup!r})")
    return _residual(g, theta, ref.q, tau)


def bisect(g: Generator, theta, q=None, cfg: SolverConfig = DEFAULT_CONFIG) -> BisectionResult:
    """Solve the dual root equation by bisection on the bracket.

    Follows the classic halving rule: a negative residual moves the upper
    end, anything else the lower end.  A single class short-circuits to
    ``theta_1 - f'(1 / q_1)``.
    """
    theta, ref = _prepare(theta, q)
    q = ref.q
    br = bracket(g, theta, ref)
    if theta.size == 1:
        return BisectionResult(br.tau_min, 0, br, True)
    lo, hi = br.tau_min, br.tau_max
    tau = 0.5 * (lo + hi)
    phi = _residual(g, theta, q, tau)
    it = 0
    fixed = cfg.fixed
    while it < cfg.max_iterations:
        if not fixed and abs(phi) <= cfg.tolerance:
            break
        if phi < 0:
            hi = tau
        else:
            lo = tau
        tau = 0.5 * (lo + hi)
        it += 1
        if not fixed and (tau == lo or tau == hi):
            break
        phi = _residual(g, theta, q, tau)
    converged = fixed or abs(phi) <= cfg.tolerance or tau == lo or tau == hi
    return BisectionResult(float(tau), it, br, bool(converged))


def bisection_trace(g: Generator, theta, q=None, iterations: int = 60):
    """Iterates ``tau_0 .. tau_iterations`` of fixed-iteration bisection.

    ``tau_0`` is the bracket midpoint; ``tau_t`` the midpoint after ``t``
    halvings, so ``|tau_t - tau*| <= width / 2**(t + 1)``.
    """
    theta, ref = _prepare(theta, q)
    br = bracket(g, theta, ref)
    lo, hi = br.tau_min, br.tau_max
    taus = np.empty(iterations + 1)
    tau = 0.5 * (lo + hi)
    taus[0] = tau
    for t in range(1, iterations + 1):
        if _residual(g, theta, ref.q, tau) < 0:
            hi = tau
        else:
            lo = tau
        tau = 0.5 * (lo + hi)
        taus[t] = tau
    return taus, br


# ---------------------------------------------------------------------------
# Batches


def batch_brackets(g: Generator, theta: np.ndarray, q: np.ndarray):
    """Per-row brackets for a ``(b, k)`` array that may contain ``-inf``.

    Masked entries are excluded from the total weight.  Returns ``lo, hi``.
    """
    rows = np.arange(theta.shape[0])
    j = np.argmax(theta, axis=1)
    top = theta[rows, j]
    total = np.where(np.isneginf(theta), 0.0, q).sum(axis=1)
    with np.errstate(all="ignore"):
        lo = top - np.asarray(g.fprime(1.0 / q[rows, j]), dtype=float)
        hi = top - np.asarray(g.fprime(1.0 / total), dtype=float)
        r_lo = kernels._fallback.row_residuals(g, theta, q, lo)
        r_hi = kernels._fallback.row_residuals(g, theta, q, hi)
    fix_lo = r_lo < -_ENDPOINT_SLACK
    if fix_lo.any():
        cand = lo - _WIDEN_ULPS * np.spacing(np.abs(lo))
        ok = top - cand < g.conjugate_domain_sup
        lo = np.where(fix_lo & ok, cand, lo)
    fix_hi = r_hi > _ENDPOINT_SLACK
    hi = np.where(fix_hi, hi + _WIDEN_ULPS * np.spacing(np.abs(hi)), hi)
    return lo, hi


def bisect_batch(g: Generator, theta, q, cfg: SolverConfig = DEFAULT_CONFIG, backend=None):
    """Bisect a ``(b, k)`` batch of valid rows.

    ``q`` is either a shared ``(k,)`` vector or per-row ``(b, k)`` weights.
    Rows must have at least one finite entry; ``-inf`` entries are masked.
    Returns ``(tau, iterations, lo, hi)`` arrays, where ``lo, hi`` is the
    starting bracket.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    q = np.broadcast_to(np.asarray(q, dtype=float), theta.shape)
    lo, hi = batch_brackets(g, theta, q)
    single = (~np.isneginf(theta)).sum(axis=1) == 1
    tau, iters, _, _ = kernels.bisect_rows(g, theta, q, lo, hi, cfg.tolerance,
                                           cfg.max_iterations, cfg.fixed, backend=backend)
    tau = np.where(single, lo, tau)
    iters = np.where(single, 0, iters)
    return tau, iters, lo, hi
