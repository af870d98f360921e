"""Brute-force reference solvers used to validate the operators.

Everything here works on the primal problem

    max_{p in simplex} <p, theta> - D_f(p, q)

using only ``f`` and ``f'``.  None of it touches the conjugate, the dual
root or the bisection bracket, so agreement with :mod:`fdiv.operators` is
a genuine cross-check.  These routines favour simplicity over speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .generators import Generator, as_reference

# gradients are evaluated at max(p, BOUNDARY_CLAMP)
BOUNDARY_CLAMP = 1e-12


class AscentError(RuntimeError):
    """Projected ascent could not find a non-decreasing step."""

    def __init__(self, step: int, rows):
        super().__init__(f"ascent violation at step {step} for rows {list(rows)}")
        self.step = step
        self.rows = list(rows)


@dataclass(frozen=True)
class OracleConfig:
    """Settings for the grid and projected-ascent oracles.

    Attributes
    ----------
    grid_resolution : int, optional
        Steps per unit on the simplex grid; defaults to 2000 for ``k = 2``
        and 300 for ``k = 3``.
    pgd_steps : int
        Maximum number of projected ascent steps.
    pgd_step_size : float
        Initial step, halved until the objective does not decrease.
    metric : {"euclidean", "diagonal"}
        Geometry of the ascent step.  ``"euclidean"`` is plain projected
        gradient ascent.  ``"diagonal"`` rescales the gradient by the inverse
        of the (diagonal) Hessian ``f''(p / q) / q`` and projects in the
        matching weighted norm, i.e. a projected Newton step.
    stop_tol : float
        Stop once no coordinate moves by more than this.
    """

    grid_resolution: Optional[int] = None
    pgd_steps: int = 5000
    pgd_step_size: float = 1e-2
    metric: str = "euclidean"
    stop_tol: float = 1e-15

    def __post_init__(self):
        if self.grid_resolution is not None and self.grid_resolution < 1:
            raise ValueError("grid_resolution must be positive")
        if self.pgd_steps < 1 or not self.pgd_step_size > 0:
            raise ValueError("pgd_steps and pgd_step_size must be positive")
        if self.metric not in ("euclidean", "diagonal"):
            raise ValueError(f"unknown metric {self.metric!r}")

    @classmethod
    def newton(cls, steps: int = 500) -> "OracleConfig":
        """Diagonal-metric ascent with unit initial step."""
        return cls(pgd_steps=steps, pgd_step_size=1.0, metric="diagonal")

    def resolution(self, k: int) -> int:
        if self.grid_resolution is not None:
            return self.grid_resolution
        return 2000 if k == 2 else 300


DEFAULT_ORACLE = OracleConfig()


# ---------------------------------------------------------------------------
# Projections


def _project_rows(v: np.ndarray):
    """Sort-and-threshold projection of each row; returns ``(p, tau)``."""
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, v.shape[1] + 1)
    r = np.count_nonzero(u - css / ind > 0, axis=1)
    tau = css[np.arange(v.shape[0]), r - 1] / r
    return np.maximum(v - tau[:, None], 0.0), tau


def euclidean_simplex_projection(v, check: bool = True) -> np.ndarray:
    """Closest point of the probability simplex to ``v`` in Euclidean norm.

    The result is certified by its optimality conditions: with threshold
    ``tau``, ``p_j = max(v_j - tau, 0)`` and ``sum(p) = 1``.

    >>> euclidean_simplex_projection([0.5, 0.0])
    array([0.75, 0.25])
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("projection needs finite input")
    p, tau = _project_rows(np.atleast_2d(v))
    if check:
        _check_kkt(np.atleast_2d(v), p, tau)
    return p.reshape(v.shape)


def _check_kkt(v, p, tau):
    scale = np.maximum(1.0, np.abs(v).max(axis=1))
    err_sum = np.abs(p.sum(axis=1) - 1.0)
    err_form = np.abs(p - np.maximum(v - tau[:, None], 0.0)).max(axis=1)
    bad = (err_sum > 1e-12 * v.shape[1] * scale) | (err_form > 0) | (p.max(axis=1) <= 0)
    if bad.any():
        raise RuntimeError(f"projection optimality check failed on rows {np.flatnonzero(bad).tolist()}")


def weighted_simplex_projection(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Rows of ``argmin_p sum_j w_j (p_j - z_j)^2 / 2`` over the simplex.

    The minimizer is ``p_j = max(z_j - nu / w_j, 0)``; ``nu`` is located by
    sorting the breakpoints ``z_j w_j``.
    """
    z = np.atleast_2d(z)
    w = np.broadcast_to(w, z.shape)
    bp = z * w
    order = np.argsort(-bp, axis=1)
    zs = np.take_along_axis(z, order, axis=1)
    ws = np.take_along_axis(w, order, axis=1)
    bps = np.take_along_axis(bp, order, axis=1)
    nu = (np.cumsum(zs, axis=1) - 1.0) / np.cumsum(1.0 / ws, axis=1)
    # active prefix: breakpoint above the threshold implied by that prefix
    r = np.count_nonzero(bps > nu, axis=1)
    r = np.maximum(r, 1)
    nu_star = nu[np.arange(z.shape[0]), r - 1]
    return np.maximum(z - nu_star[:, None] / w, 0.0)


# ---------------------------------------------------------------------------
# Objective


def _objective(g: Generator, p, theta, q):
    with np.errstate(all="ignore"):
        vals = np.asarray(g.f(p / q), dtype=float)
    return (p * theta).sum(axis=-1) - (q * vals).sum(axis=-1)


def _fsecond(g: Generator, u):
    # the curvature only shapes the step; its accuracy does not move the fixed point
    h = 1e-4
    with np.errstate(all="ignore"):
        d = (np.asarray(g.fprime(u * (1 + h))) - np.asarray(g.fprime(u * (1 - h)))) / (2 * h * u)
    return np.where(np.isfinite(d) & (d > 0), d, 1.0)


def oracle_grid(g: Generator, theta, q=None, cfg: OracleConfig = DEFAULT_ORACLE) -> np.ndarray:
    """Best point of a uniform simplex grid (``k`` in {2, 3}).

    Generators with ``f(0) = +inf`` only see the interior of the grid.
    """
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    if k not in (2, 3):
        raise ValueError(f"grid oracle supports k = 2 or 3, got k = {k}")
    ref = as_reference(q, k)
    n = cfg.resolution(k)
    lo = 1 if math.isinf(g.f_at_zero) else 0
    i = np.arange(lo, n + 1 - lo)
    if k == 2:
        pts = np.stack([i, n - i], axis=1) / n
    else:
        a, b = np.meshgrid(i, i, indexing="ij")
        c = n - a - b
        keep = c >= lo
        pts = np.stack([a[keep], b[keep], c[keep]], axis=1) / n
    vals = _objective(g, pts, theta, ref.q)
    return pts[int(np.nanargmax(vals))]


def oracle_pgd_batch(g: Generator, thetas, q=None, cfg: OracleConfig = DEFAULT_ORACLE,
                     history: bool = False):
    """Projected ascent on each row of a ``(b, k)`` logit array.

    ``q`` is shared ``(k,)`` or per-row ``(b, k)``.  Every accepted step is
    non-decreasing in the objective.  A row where ~60 halvings of the step
    cannot increase the objective is optimal up to rounding and is frozen;
    if its objective is not finite, :class:`AscentError` reports the step.
    With ``history=True`` the per-step objective values are returned too.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    b, k = thetas.shape
    if k > 32:
        raise ValueError("projected-ascent oracle is limited to k <= 32")
    q = np.broadcast_to(np.asarray(as_reference(q, k).q if np.ndim(q) <= 1 else q, dtype=float),
                        thetas.shape)
    p = q / q.sum(axis=1, keepdims=True)
    obj = _objective(g, p, thetas, q)
    trace = [obj.copy()] if history else None
    diagonal = cfg.metric == "diagonal"
    live = np.ones(b, dtype=bool)
    for step in range(cfg.pgd_steps):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        pc = np.maximum(p[idx], BOUNDARY_CLAMP)
        u = pc / q[idx]
        with np.errstate(all="ignore"):
            grad = thetas[idx] - np.asarray(g.fprime(u))
        if diagonal:
            hess = _fsecond(g, u) / q[idx]
        eta = np.full(idx.size, cfg.pgd_step_size)
        new_p = p[idx].copy()
        new_obj = obj[idx].copy()
        pending = np.arange(idx.size)
        for _ in range(60):
            if pending.size == 0:
                break
            e = eta[pending, None]
            if diagonal:
                cand = weighted_simplex_projection(p[idx[pending]] + e * grad[pending] / hess[pending],
                                                   hess[pending])
            else:
                cand, _ = _project_rows(p[idx[pending]] + e * grad[pending])
            cobj = _objective(g, cand, thetas[idx[pending]], q[idx[pending]])
            ok = cobj >= obj[idx[pending]]
            new_p[pending[ok]] = cand[ok]
            new_obj[pending[ok]] = cobj[ok]
            eta[pending[~ok]] *= 0.5
            pending = pending[~ok]
        if pending.size:
            # no halving of the step increases the objective: optimal up to rounding
            bad = ~np.isfinite(obj[idx[pending]])
            if bad.any():
                raise AscentError(step, idx[pending][bad])
            live[idx[pending]] = False
        moved = np.abs(new_p - p[idx]).max(axis=1)
        p[idx] = new_p
        obj[idx] = new_obj
        live[idx[moved <= cfg.stop_tol]] = False
        if history:
            trace.append(obj.copy())
    if history:
        return p, np.array(trace)
    return p


def oracle_pgd(g: Generator, theta, q=None, cfg: OracleConfig = DEFAULT_ORACLE) -> np.ndarray:
    """Projected gradient ascent oracle for a single logit vector."""
    return oracle_pgd_batch(g, np.asarray(theta, dtype=float)[None], q, cfg)[0]


def finite_difference_grad(fn: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(fn(x + h e_j) - fn(x - h e_j)) / (2h)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e.flat[j] = h
        out.flat[j] = (fn(x + e) - fn(x - e)) / (2 * h)
    return out
