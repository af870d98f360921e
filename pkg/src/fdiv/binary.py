"""Binary (k = 2) f-sigmoid and f-softplus.

With logits ``(0, s)`` and prior ``q = (q0, q1)``:

    softplus_f(s; q) = softmax_f((0, s); q)
    sigmoid_f(s; q)  = [softargmax_f((0, s); q)]_1

Closed forms are provided for KL, reverse KL and Jensen-Shannon; squared
Hellinger reduces to a quartic whose physical root is found inside the
bisection bracket.  Other generators use the general solver.

All closed-form functions accept scalars or arrays for ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import generators as G
from .generators import Generator
from .operators import f_softargmax
from .solver import DEFAULT_CONFIG, SolverConfig

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BinaryPrior:
    q0: float = 1.0
    q1: float = 1.0

    def __post_init__(self):
        for name in ("q0", "q1"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def of(cls, prior) -> "BinaryPrior":
        if prior is None:
            return cls()
        if isinstance(prior, BinaryPrior):
            return prior
        q0, q1 = prior
        return cls(float(q0), float(q1))

    def swapped(self) -> "BinaryPrior":
        return BinaryPrior(self.q1, self.q0)

    def as_array(self) -> np.ndarray:
        return np.array([self.q0, self.q1])


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# KL


def kl_sigmoid(s, prior=None):
    """``q1 e^s / (q0 + q1 e^s)``, written as a logistic of a shifted score."""
    pr = BinaryPrior.of(prior)
    z = np.asarray(s, dtype=float) + math.log(pr.q1) - math.log(pr.q0)
    # split by sign so the exponential never overflows
    with np.errstate(over="ignore"):
        e = np.exp(-np.abs(z))
        out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _out(out)


def kl_softplus(s, prior=None):
    """``log(q0 + q1 e^s)``."""
    pr = BinaryPrior.of(prior)
    return _out(np.logaddexp(math.log(pr.q0), math.log(pr.q1) + np.asarray(s, dtype=float)))


# ---------------------------------------------------------------------------
# Reverse KL


def _rkl_h(g, c):
    # 0.5 * (g + sqrt(g^2 + c)), rationalized for negative g
    r = np.hypot(g, np.sqrt(c))
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = c / (2.0 * (r + np.abs(g)))
    return np.where(g >= 0, 0.5 * (g + r), neg)


def _rkl_roots(s, pr: BinaryPrior):
    """``(tau*, tau* - s)``, both strictly positive."""
    s = np.asarray(s, dtype=float)
    g = pr.q1 - pr.q0 + s
    c = 4.0 * pr.q0 * pr.q1
    return pr.q0 + _rkl_h(g, c), pr.q1 + _rkl_h(-g, c)


def rkl_sigmoid(s, prior=None):
    """Reverse-KL sigmoid ``q1 / (tau* - s)``.

    ``tau*`` is the larger root of ``tau^2 - (q0 + q1 + s) tau + q0 s = 0``;
    both ``tau*`` and ``tau* - s`` are evaluated without cancellation.
    """
    pr = BinaryPrior.of(prior)
    _, t1 = _rkl_roots(s, pr)
    return _out(pr.q1 / t1)


def rkl_softplus(s, prior=None):
    pr = BinaryPrior.of(prior)
    t0, t1 = _rkl_roots(s, pr)
    return _out(t0 - pr.q0 * np.log(t0) - pr.q1 * np.log(t1) - (pr.q0 + pr.q1))


# ---------------------------------------------------------------------------
# Jensen-Shannon


def _js_taus(s, pr: BinaryPrior):
    """``(tau*, tau* - s)`` in log-sum-exp form.

    The dual root solves a quadratic in ``exp(tau)``.  Both shifted roots
    share the correction ``log1p(sqrt(disc)) - 2 log 2`` and differ only in
    which exponential is factored out, so neither suffers cancellation.
    """
    s = np.asarray(s, dtype=float)
    a, b = math.log1p(pr.q0), math.log1p(pr.q1)
    l0 = np.logaddexp(a, s + b)
    l1 = np.logaddexp(a - s, b)
    disc = 1.0 - 4.0 * (1.0 + pr.q0 + pr.q1) * np.exp(-(l0 + l1))
    r = np.log1p(np.sqrt(np.maximum(disc, 0.0))) - 2.0 * _LOG2
    return l0 + r, l1 + r


def js_sigmoid(s, prior=None):
    """Jensen-Shannon sigmoid ``q1 / (2 exp(tau* - s) - 1)``."""
    pr = BinaryPrior.of(prior)
    s = np.asarray(s, dtype=float)
    _, t1 = _js_taus(s, pr)
    with np.errstate(over="ignore"):
        small = pr.q1 / (2.0 * np.exp(t1) - 1.0)
    # for s >= 0 write the denominator as q1 + eps with eps ~ exp(-s) free of
    # cancellation, so the saturation towards 1 stays monotone
    q0, q1 = pr.q0, pr.q1
    es = np.exp(-np.maximum(s, 0.0))
    a1 = (1.0 + q1) + (1.0 + q0) * es
    delta = 4.0 * (1.0 + q0 + q1) * es / a1**2
    w = np.sqrt(1.0 - delta)
    num = 2.0 * q0 * q1 + (1.0 + q0) ** 2 * es * (1.0 + w) - (1.0 + q0) * (1.0 + q1) * delta / (1.0 + w)
    large = q1 / (q1 + es * num / (a1 * (1.0 + w)))
    return _out(np.where(s >= 0, large, small))


def js_softplus(s, prior=None):
    pr = BinaryPrior.of(prior)
    t0, t1 = _js_taus(s, pr)
    return _out(t0 - pr.q0 * np.log(2.0 - np.exp(-t0)) - pr.q1 * np.log(2.0 - np.exp(-t1)))


# ---------------------------------------------------------------------------
# Squared Hellinger


def hellinger_quartic_coefficients(s: float, prior=None):
    """Coefficients ``(a, b, c, d, e)`` of the quartic in ``x = tau + 1``."""
    pr = BinaryPrior.of(prior)
    return (1.0, -2.0 * s, s * s - pr.q0 - pr.q1, 2.0 * s * pr.q0, -pr.q0 * s * s)


def _hellinger_near(s, pr: BinaryPrior, max_iter=200):
    """Solve the quartic for the denominator of the larger logit.

    The quartic ``x^2 (x-s)^2 - q0 (x-s)^2 - q1 x^2 = 0`` is rewritten in
    ``t = min(x, x - s)``, the distance from the larger logit to ``tau + 1``:
    ``qn / t^2 + qf / (t + |s|)^2 = 1``.  This rational form is convex and
    decreasing in ``t``, so safeguarded Newton from inside the bracket
    ``[sqrt(qn), sqrt(q0 + q1)]`` cannot pick a spurious root.
    Returns ``(x, x - s)``.
    """
    s = np.asarray(s, dtype=float)
    pos = s >= 0
    qn = np.where(pos, pr.q1, pr.q0)
    qf = np.where(pos, pr.q0, pr.q1)
    gap = np.abs(s)
    lo = np.sqrt(qn)
    hi = np.full_like(lo, math.sqrt(pr.q0 + pr.q1))
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        u = t + gap
        phi = qn / t**2 + qf / u**2 - 1.0
        lo = np.where(phi > 0, t, lo)
        hi = np.where(phi < 0, t, hi)
        dphi = -2.0 * (qn / t**3 + qf / u**3)
        step = t - phi / dphi
        inside = (step > lo) & (step < hi)
        new = np.where(inside, step, 0.5 * (lo + hi))
        done = (new == t) | (phi == 0) | (hi - lo <= 4 * np.spacing(hi))
        t = np.where(phi == 0, t, new)
        if np.all(done):
            break
    else:
        raise RuntimeError(f"squared-Hellinger root did not converge: s={s!r}, bracket=({lo}, {hi})")
    far = t + gap
    x = np.where(pos, far, t)
    xs = np.where(pos, t, far)
    return x, xs


def hellinger_sigmoid(s, prior=None):
    """Squared-Hellinger sigmoid ``q1 / (x - s)^2`` with ``x`` the physical quartic root.

    The probability of the lower logit is computed directly and the other
    one as its complement, which keeps the saturation monotone.
    """
    pr = BinaryPrior.of(prior)
    s = np.asarray(s, dtype=float)
    x, xs = _hellinger_near(s, pr)
    return _out(np.where(s >= 0, 1.0 - pr.q0 / x**2, pr.q1 / xs**2))


def hellinger_softplus(s, prior=None):
    pr = BinaryPrior.of(prior)
    x, xs = _hellinger_near(s, pr)
    # f*(v) = v / (1 - v) = 1 / (1 - v) - 1 and 1 - v is x or x - s
    return _out(x - 1.0 + pr.q0 * (1.0 / x - 1.0) + pr.q1 * (1.0 / xs - 1.0))


# ---------------------------------------------------------------------------
# Dispatch

CLOSED_FORMS = {
    G._KL: (kl_sigmoid, kl_softplus),
    G._ReverseKL: (rkl_sigmoid, rkl_softplus),
    G._JensenShannon: (js_sigmoid, js_softplus),
    G._SquaredHellinger: (hellinger_sigmoid, hellinger_softplus),
}


def has_closed_form(g: Generator) -> bool:
    return type(g) in CLOSED_FORMS


def _generic(g, s, pr, cfg):
    res = f_softargmax(g, np.array([0.0, float(s)]), pr.as_array(), cfg)
    return float(res.p[1]), res.softmax_value


def f_sigmoid_generic(g: Generator, s, prior=None, cfg: SolverConfig = DEFAULT_CONFIG,
                      closed_form: bool = True):
    """Second coordinate of the f-softargmax of ``(0, s)``.

    Uses a closed form when one exists for ``g`` and ``closed_form`` is set;
    otherwise solves the k = 2 problem with the general operator.
    """
    pr = BinaryPrior.of(prior)
    if closed_form and has_closed_form(g):
        return CLOSED_FORMS[type(g)][0](s, pr)
    if np.ndim(s):
        return np.array([_generic(g, v, pr, cfg)[0] for v in np.ravel(s)]).reshape(np.shape(s))
    return _generic(g, s, pr, cfg)[0]


def f_softplus_generic(g: Generator, s, prior=None, cfg: SolverConfig = DEFAULT_CONFIG,
                       closed_form: bool = True):
    """f-softmax of ``(0, s)``."""
    pr = BinaryPrior.of(prior)
    if closed_form and has_closed_form(g):
        return CLOSED_FORMS[type(g)][1](s, pr)
    if np.ndim(s):
        return np.array([_generic(g, v, pr, cfg)[1] for v in np.ravel(s)]).reshape(np.shape(s))
    return _generic(g, s, pr, cfg)[1]


def bradley_terry_prob(g: Generator, theta_i: float, theta_j: float, prior=None,
                       cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Probability that item ``i`` beats item ``j``: the f-sigmoid of the score gap."""
    return f_sigmoid_generic(g, theta_i - theta_j, prior, cfg)
