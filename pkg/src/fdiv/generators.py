"""Catalog of f-divergence generators and the divergences built on them.

A generator is a convex function ``f`` with ``f(1) = 0``.  Everything the
solvers need is exposed as vectorized methods on :class:`Generator`:
``f``, ``fprime``, the convex conjugate ``fstar`` and its first two
derivatives, plus the boundary limits ``f(0+)``, ``f'(0+)`` and the upper
end of the conjugate's domain.

Extended reals are plain IEEE infinities.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray, list]


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class Divergence(str, enum.Enum):
    KL = "kl"
    GENERALIZED_KL = "generalized-kl"
    REVERSE_KL = "reverse-kl"
    JEFFREYS = "jeffreys"
    JENSEN_SHANNON = "jensen-shannon"
    SQUARED_HELLINGER = "squared-hellinger"
    CHI_SQUARE = "chi-square"
    REVERSE_CHI_SQUARE = "reverse-chi-square"
    ALPHA = "alpha"


_ALIASES = {
    "gkl": Divergence.GENERALIZED_KL,
    "rkl": Divergence.REVERSE_KL,
    "js": Divergence.JENSEN_SHANNON,
    "hellinger": Divergence.SQUARED_HELLINGER,
    "chi2": Divergence.CHI_SQUARE,
    "pearson": Divergence.CHI_SQUARE,
    "reverse-chi2": Divergence.REVERSE_CHI_SQUARE,
    "neyman": Divergence.REVERSE_CHI_SQUARE,
}


@dataclass(frozen=True)
class GeneratorKind:
    """Catalog tag, plus ``alpha`` for the alpha family."""

    tag: Divergence
    alpha: Optional[float] = None

    def __post_init__(self):
        tag = parse_divergence(self.tag) if isinstance(self.tag, str) else self.tag
        object.__setattr__(self, "tag", tag)
        if tag is Divergence.ALPHA:
            if self.alpha is None:
                raise ValueError("the alpha divergence needs an alpha value")
            alpha = float(self.alpha)
            if not (alpha > 0 and math.isfinite(alpha)):
                raise ValueError(f"alpha must be a finite positive number, got {self.alpha!r}")
            object.__setattr__(self, "alpha", alpha)
        elif self.alpha is not None:
            raise ValueError(f"{tag.value} takes no alpha parameter")

    def __str__(self):
        if self.tag is Divergence.ALPHA:
            return f"alpha({self.alpha:g})"
        return self.tag.value


def parse_divergence(name: str) -> Divergence:
    key = name.strip().lower().replace("_", "-")
    if key in _ALIASES:
        return _ALIASES[key]
    try:
        return Divergence(key)
    except ValueError:
        names = ", ".join(d.value for d in Divergence)
        raise ValueError(f"unknown divergence {name!r}; expected one of {names}") from None


@dataclass(frozen=True)
class ReferenceMeasure:
    """Strictly positive class weights ``q`` with their total cached."""

    q: np.ndarray
    total: float

    @classmethod
    def of(cls, q: ArrayLike) -> "ReferenceMeasure":
        arr = np.array(q, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("reference measure must have at least one entry")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("reference measure entries must be finite and strictly positive")
        arr.setflags(write=False)
        return cls(arr, float(arr.sum()))

    @classmethod
    def uniform(cls, k: int) -> "ReferenceMeasure":
        return cls.of(np.ones(k))

    def __len__(self):
        return self.q.size


def as_reference(q, k: int) -> ReferenceMeasure:
    """Coerce ``q`` (None, array or :class:`ReferenceMeasure`) for ``k`` classes."""
    if q is None:
        return ReferenceMeasure.uniform(k)
    ref = q if isinstance(q, ReferenceMeasure) else ReferenceMeasure.of(q)
    if len(ref) != k:
        raise ValueError(f"reference measure has {len(ref)} entries, expected {k}")
    return ref


# ---------------------------------------------------------------------------
# Lambert W


def lambert_w0(z: ArrayLike, tol: float = 1e-12, max_iter: int = 40):
    """Principal branch of the Lambert W function for ``z >= 0``.

    Halley iteration on ``w * exp(w) - z`` started from ``log1p(z)`` below
    ``e`` and from ``log(z) - log(log(z))`` above it.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("lambert_w0 is only implemented for z >= 0 (principal branch)")
    big = z >= math.e
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(big, np.log(np.where(big, z, math.e)) - np.log(np.log(np.where(big, z, math.e))),
                     np.log1p(np.where(big, 0.0, z)))
        finite = np.isfinite(z)
        for _ in range(max_iter):
            ew = np.exp(w)
            r = w * ew - z
            wp1 = w + 1.0
            step = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
            step = np.where(finite & (r != 0), step, 0.0)
            w = w - step
            if np.all(np.abs(step) <= tol * np.abs(w)):
                break
    w = np.where(finite, w, np.inf)
    return w[()] if w.ndim == 0 else w


def _lambert_w_of_exp(x: np.ndarray) -> np.ndarray:
    """``W(exp(x))`` without overflowing ``exp`` for large ``x``."""
    x = np.asarray(x, dtype=float)
    small = x <= 700.0
    out = np.empty_like(x)
    if np.any(small):
        out[small] = lambert_w0(np.exp(x[small]))
    if np.any(~small):
        # w + log(w) = x, Newton from w = x - log(x)
        xs = x[~small]
        w = xs - np.log(xs)
        for _ in range(8):
            w = w - (w + np.log(w) - xs) / (1.0 + 1.0 / w)
        out[~small] = w
    return out


# ---------------------------------------------------------------------------
# Generators


def _xlogx(u):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u == 0, 0.0, u * np.log(np.where(u == 0, 1.0, u)))


def _out(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


class Generator:
    """A convex generator ``f`` together with its conjugate.

    Subclasses implement the underscore methods on float arrays; the public
    methods coerce input, silence floating-point warnings (boundary values
    evaluate to their limits) and unwrap 0-d results.

    Attributes
    ----------
    name : str
        Human readable identifier.
    kind : GeneratorKind or None
        Catalog tag; ``None`` for derived generators (scaled, shifted).
    fprime_at_zero : float
        ``lim_{u -> 0+} f'(u)``, possibly ``-inf``.
    conjugate_domain_sup : float
        Supremum of ``dom f*``, possibly ``+inf``.
    fstar_at_sup : float
        ``lim f*(v)`` as ``v`` approaches ``conjugate_domain_sup``.
    """

    name: str = "generator"
    kind: Optional[GeneratorKind] = None
    fprime_at_zero: float = -math.inf
    conjugate_domain_sup: float = math.inf
    fstar_at_sup: float = math.inf
    fstar_second_is_analytic: bool = True

    # -- public vectorized API ------------------------------------------------
    def f(self, u):
        with np.errstate(all="ignore"):
            return _out(self._f(np.asarray(u, dtype=float)))

    def fprime(self, u):
        with np.errstate(all="ignore"):
            return _out(self._fprime(np.asarray(u, dtype=float)))

    def fstar(self, v):
        with np.errstate(all="ignore"):
            return _out(self._fstar(np.asarray(v, dtype=float)))

    def fstar_prime(self, v):
        with np.errstate(all="ignore"):
            return _out(self._fstar_prime(np.asarray(v, dtype=float)))

    def fstar_second(self, v):
        with np.errstate(all="ignore"):
            return _out(self._fstar_second(np.asarray(v, dtype=float)))

    @property
    def f_at_zero(self) -> float:
        """``lim_{u -> 0+} f(u)``, possibly ``+inf``."""
        return float(self.f(0.0))

    @property
    def conjugate_domain_closed(self) -> bool:
        """Whether ``f*`` is finite at the (finite) right end of its domain."""
        return math.isfinite(self.conjugate_domain_sup) and math.isfinite(self.fstar_at_sup)

    @property
    def is_sparse_capable(self) -> bool:
        return math.isfinite(self.fprime_at_zero)

    # -- clamped forms used by the solvers -------------------------------------
    def clamped_fstar_prime(self, v):
        """``f*'(max(v, f'(0)))``, exactly zero on the clamped branch."""
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            val = self._fstar_prime(np.maximum(v, self.fprime_at_zero))
        return np.where(v > self.fprime_at_zero, val, 0.0)

    def clamped_fstar(self, v):
        """``f*(max(v, f'(0)))``; equals ``-f(0)`` on the clamped branch."""
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            val = self._fstar(np.maximum(v, self.fprime_at_zero))
        return np.where(v > self.fprime_at_zero, val, -self.f_at_zero)

    # -- defaults ---------------------------------------------------------------
    def _fstar_second(self, v):
        # central difference of f*' when no closed form is known
        h = 1e-6 * np.maximum(1.0, np.abs(v))
        return (self._fstar_prime(v + h) - self._fstar_prime(v - h)) / (2 * h)

    def kernel_params(self):
        """``(code, alpha, scale, offset)`` for the compiled kernel, or None.

        The compiled kernel evaluates ``f*'(v)`` as
        ``base_code_fstar_prime(scale * v + offset)``.
        """
        return None

    def __repr__(self):
        return f"<Generator {self.name}>"


class _KL(Generator):
    name = "kl"
    kind = GeneratorKind(Divergence.KL)

    def _f(self, u):
        return np.where(u < 0, np.inf, _xlogx(np.maximum(u, 0.0)))

    def _fprime(self, u):
        return np.log(u) + 1.0

    def _fstar(self, v):
        return np.exp(v - 1.0)

    _fstar_prime = _fstar
    _fstar_second = _fstar

    def kernel_params(self):
        return (0, 0.0, 1.0, 0.0)


class _GeneralizedKL(Generator):
    name = "generalized-kl"
    kind = GeneratorKind(Divergence.GENERALIZED_KL)

    def _f(self, u):
        return np.where(u < 0, np.inf, _xlogx(np.maximum(u, 0.0)) - (u - 1.0))

    def _fprime(self, u):
        return np.log(u)

    def _fstar(self, v):
        return np.expm1(v)

    def _fstar_prime(self, v):
        return np.exp(v)

    _fstar_second = _fstar_prime

    def kernel_params(self):
        return (1, 0.0, 1.0, 0.0)


class _ReverseKL(Generator):
    name = "reverse-kl"
    kind = GeneratorKind(Divergence.REVERSE_KL)
    conjugate_domain_sup = 0.0

    def _f(self, u):
        return np.where(u < 0, np.inf, -np.log(u))

    def _fprime(self, u):
        return -1.0 / u

    def _fstar(self, v):
        return -1.0 - np.log(-v)

    def _fstar_prime(self, v):
        return -1.0 / v

    def _fstar_second(self, v):
        return 1.0 / (v * v)

    def kernel_params(self):
        return (2, 0.0, 1.0, 0.0)


class _Jeffreys(Generator):
    name = "jeffreys"
    kind = GeneratorKind(Divergence.JEFFREYS)

    def _f(self, u):
        return np.where(u < 0, np.inf, np.where(u == 1, 0.0, (u - 1.0) * np.log(u)))

    def _fprime(self, u):
        return np.log(u) + 1.0 - 1.0 / u

    def _w(self, v):
        return _lambert_w_of_exp(1.0 - v)

    def _fstar(self, v):
        w = self._w(v)
        return 1.0 / w - np.log(w) - 1.0

    def _fstar_prime(self, v):
        return 1.0 / self._w(v)

    def _fstar_second(self, v):
        w = self._w(v)
        return 1.0 / (w * (1.0 + w))

    def kernel_params(self):
        return (3, 0.0, 1.0, 0.0)


class _JensenShannon(Generator):
    """Generator as printed; the divergence it induces is twice JS."""

    name = "jensen-shannon"
    kind = GeneratorKind(Divergence.JENSEN_SHANNON)
    conjugate_domain_sup = math.log(2.0)

    def _f(self, u):
        up = np.maximum(u, 0.0)
        val = _xlogx(up) - (up + 1.0) * np.log((up + 1.0) / 2.0)
        return np.where(u < 0, np.inf, val)

    def _fprime(self, u):
        return np.log(2.0 * u / (u + 1.0))

    def _fstar(self, v):
        return -np.log(2.0 - np.exp(v))

    def _fstar_prime(self, v):
        return 1.0 / (2.0 * np.exp(-v) - 1.0)

    def _fstar_second(self, v):
        e = 2.0 * np.exp(-v)
        return e / (e - 1.0) ** 2

    def kernel_params(self):
        return (4, 0.0, 1.0, 0.0)


class _SquaredHellinger(Generator):
    """Generator as printed; the divergence it induces is twice SH."""

    name = "squared-hellinger"
    kind = GeneratorKind(Divergence.SQUARED_HELLINGER)
    conjugate_domain_sup = 1.0

    def _f(self, u):
        return np.where(u < 0, np.inf, (np.sqrt(np.maximum(u, 0.0)) - 1.0) ** 2)

    def _fprime(self, u):
        return 1.0 - 1.0 / np.sqrt(u)

    def _fstar(self, v):
        return v / (1.0 - v)

    def _fstar_prime(self, v):
        return 1.0 / (1.0 - v) ** 2

    def _fstar_second(self, v):
        return 2.0 / (1.0 - v) ** 3

    def kernel_params(self):
        return (5, 0.0, 1.0, 0.0)


class _ChiSquare(Generator):
    """``f(u) = (u^2 - 1) / 2``, the variant with ``f'(0) = 0``."""

    name = "chi-square"
    kind = GeneratorKind(Divergence.CHI_SQUARE)
    fprime_at_zero = 0.0

    def _f(self, u):
        return 0.5 * (u * u - 1.0)

    def _fprime(self, u):
        return u.copy()

    def _fstar(self, v):
        return 0.5 * (v * v + 1.0)

    def _fstar_prime(self, v):
        return v.copy()

    def _fstar_second(self, v):
        return np.ones_like(v)

    def kernel_params(self):
        return (6, 0.0, 1.0, 0.0)


class _ReverseChiSquare(Generator):
    name = "reverse-chi-square"
    kind = GeneratorKind(Divergence.REVERSE_CHI_SQUARE)
    conjugate_domain_sup = 0.0
    fstar_at_sup = 0.5

    def _f(self, u):
        return np.where(u < 0, np.inf, 0.5 * (1.0 / u - 1.0))

    def _fprime(self, u):
        return -0.5 / (u * u)

    def _fstar(self, v):
        return np.where(v > 0, np.nan, 0.5 - np.sqrt(-2.0 * v))

    def _fstar_prime(self, v):
        return 1.0 / np.sqrt(-2.0 * v)

    def _fstar_second(self, v):
        return (-2.0 * v) ** -1.5

    def kernel_params(self):
        return (7, 0.0, 1.0, 0.0)


class _Alpha(Generator):
    """Alpha family with ``f'(u) = log_alpha(u)``.

    Public construction requires ``alpha > 0``.  Negative ``alpha`` is only
    created internally by :func:`reverse` (the reverse of ``alpha > 1`` is
    ``1 - alpha``); the same closed forms hold there.
    """

    def __init__(self, alpha: float):
        self.alpha = a = float(alpha)
        if a == 1.0:
            raise ValueError("alpha = 1 is the generalized KL generator")
        self.name = f"alpha({a:g})"
        self.kind = GeneratorKind(Divergence.ALPHA, a) if a > 0 else None
        if a > 1:
            self.fprime_at_zero = -1.0 / (a - 1.0)
            self.conjugate_domain_sup = math.inf
            self.fstar_at_sup = math.inf
        else:
            self.fprime_at_zero = -math.inf
            self.conjugate_domain_sup = 1.0 / (1.0 - a)
            self.fstar_at_sup = math.inf if a > 0 else -1.0 / a

    def _f(self, u):
        a = self.alpha
        up = np.maximum(u, 0.0)
        val = (np.expm1(a * np.log(up)) - a * (up - 1.0)) / (a * (a - 1.0))
        return np.where(u < 0, np.inf, val)

    def _fprime(self, u):
        a = self.alpha
        return np.expm1((a - 1.0) * np.log(u)) / (a - 1.0)

    def _log_z(self, v):
        # log(1 + (alpha - 1) v), -inf where the base is clamped at zero
        a = self.alpha
        z = (a - 1.0) * v
        return np.where(z > -1.0, np.log1p(np.maximum(z, -1.0)), -np.inf)

    def _fstar(self, v):
        a = self.alpha
        return np.expm1(a / (a - 1.0) * self._log_z(v)) / a

    def _fstar_prime(self, v):
        a = self.alpha
        return np.exp(self._log_z(v) / (a - 1.0))

    def _fstar_second(self, v):
        a = self.alpha
        lz = self._log_z(v)
        if a > 1:
            return np.where(np.isneginf(lz), 0.0, np.exp((2.0 - a) / (a - 1.0) * lz))
        return np.exp((2.0 - a) / (a - 1.0) * lz)

    def kernel_params(self):
        return (8, self.alpha, 1.0, 0.0)


class _Shifted(Generator):
    """``f(u) + c (u - 1)``; same divergence on the simplex up to a constant."""

    def __init__(self, base: Generator, c: float):
        self.base, self.c = base, float(c)
        self.name = f"{base.name}{self.c:+g}*(u-1)"
        self.fprime_at_zero = base.fprime_at_zero + self.c
        self.conjugate_domain_sup = base.conjugate_domain_sup + self.c
        self.fstar_at_sup = base.fstar_at_sup + self.c
        self.fstar_second_is_analytic = base.fstar_second_is_analytic

    def _f(self, u):
        return self.base._f(u) + self.c * (u - 1.0)

    def _fprime(self, u):
        return self.base._fprime(u) + self.c

    def _fstar(self, v):
        return self.base._fstar(v - self.c) + self.c

    def _fstar_prime(self, v):
        return self.base._fstar_prime(v - self.c)

    def _fstar_second(self, v):
        return self.base._fstar_second(v - self.c)

    def kernel_params(self):
        p = self.base.kernel_params()
        if p is None:
            return None
        code, alpha, scale, offset = p
        return (code, alpha, scale, offset - scale * self.c)


class _Scaled(Generator):
    """``beta * f``: the generator behind a temperature ``beta``."""

    def __init__(self, base: Generator, beta: float):
        self.base, self.beta = base, float(beta)
        self.name = f"{self.beta:g}*{base.name}"
        b = self.beta
        self.fprime_at_zero = b * base.fprime_at_zero
        self.conjugate_domain_sup = b * base.conjugate_domain_sup
        self.fstar_at_sup = b * base.fstar_at_sup
        self.fstar_second_is_analytic = base.fstar_second_is_analytic

    def _f(self, u):
        return self.beta * self.base._f(u)

    def _fprime(self, u):
        return self.beta * self.base._fprime(u)

    def _fstar(self, v):
        return self.beta * self.base._fstar(v / self.beta)

    def _fstar_prime(self, v):
        return self.base._fstar_prime(v / self.beta)

    def _fstar_second(self, v):
        return self.base._fstar_second(v / self.beta) / self.beta

    def kernel_params(self):
        p = self.base.kernel_params()
        if p is None:
            return None
        code, alpha, scale, offset = p
        return (code, alpha, scale / self.beta, offset)


_CATALOG = {
    Divergence.KL: _KL,
    Divergence.GENERALIZED_KL: _GeneralizedKL,
    Divergence.REVERSE_KL: _ReverseKL,
    Divergence.JEFFREYS: _Jeffreys,
    Divergence.JENSEN_SHANNON: _JensenShannon,
    Divergence.SQUARED_HELLINGER: _SquaredHellinger,
    Divergence.CHI_SQUARE: _ChiSquare,
    Divergence.REVERSE_CHI_SQUARE: _ReverseChiSquare,
}


def make_generator(kind: Union[GeneratorKind, Divergence, str], alpha: Optional[float] = None) -> Generator:
    """Build a catalog generator.

    >>> float(make_generator("kl").f(1.0))
    0.0
    >>> round(float(make_generator("alpha", 1.5).f(4.0)), 4)
    3.3333
    """
    if not isinstance(kind, GeneratorKind):
        kind = GeneratorKind(kind, alpha)
    elif alpha is not None and alpha != kind.alpha:
        raise ValueError("alpha given twice with different values")
    if kind.tag is Divergence.ALPHA:
        if kind.alpha == 1.0:
            g = _GeneralizedKL()
            g.kind, g.name = kind, "alpha(1)"
            return g
        return _Alpha(kind.alpha)
    return _CATALOG[kind.tag]()


def all_generators(alphas=(1.5,)) -> list:
    """One instance of every catalog entry (alpha family at ``alphas``)."""
    gens = [cls() for cls in _CATALOG.values()]
    gens.extend(make_generator(Divergence.ALPHA, a) for a in alphas)
    return gens


def scaled(g: Generator, beta: float) -> Generator:
    """Generator of ``beta * D_f`` (temperature scaling)."""
    if not beta > 0:
        raise ValueError(f"temperature must be positive, got {beta!r}")
    if beta == 1.0:
        return g
    if isinstance(g, _Scaled):
        return scaled(g.base, g.beta * beta)
    return _Scaled(g, beta)


def shifted(g: Generator, c: float) -> Generator:
    """Generator ``f(u) + c (u - 1)``."""
    if c == 0.0:
        return g
    if isinstance(g, _Shifted):
        return shifted(g.base, g.c + c)
    return _Shifted(g, c)


def reverse(g: Generator) -> Generator:
    """Generator ``u f(1/u)`` of the reversed divergence.

    Every catalog entry reverses in closed form: KL and reverse KL swap,
    Jeffreys, Jensen-Shannon and squared Hellinger are self-reverse, alpha
    maps to ``1 - alpha`` and the remaining entries differ from a catalog
    generator by a linear term ``c (u - 1)``.
    """
    if isinstance(g, _Shifted):
        return shifted(reverse(g.base), -g.c)
    if isinstance(g, _Scaled):
        return scaled(reverse(g.base), g.beta)
    if isinstance(g, _Alpha):
        return _Alpha(1.0 - g.alpha)
    tag = g.kind.tag if g.kind is not None else None
    if tag is Divergence.KL:
        return _ReverseKL()
    if tag is Divergence.REVERSE_KL:
        return _KL()
    if tag in (Divergence.JEFFREYS, Divergence.JENSEN_SHANNON, Divergence.SQUARED_HELLINGER):
        return g
    if tag in (Divergence.GENERALIZED_KL, Divergence.ALPHA):
        # u (1/u log(1/u) - (1/u - 1)) = -log u + (u - 1)
        return shifted(_ReverseKL(), 1.0)
    if tag is Divergence.CHI_SQUARE:
        # (1/u - u) / 2 = reverse-chi-square - (u - 1) / 2
        return shifted(_ReverseChiSquare(), -0.5)
    if tag is Divergence.REVERSE_CHI_SQUARE:
        return shifted(_ChiSquare(), -0.5)
    raise TypeError(f"cannot reverse {g!r}")


# ---------------------------------------------------------------------------
# Checked evaluation


def _check_conjugate_domain(g: Generator, v: np.ndarray, closed: bool) -> None:
    sup = g.conjugate_domain_sup
    if np.any(np.isnan(v)):
        raise DomainError(f"NaN argument to the conjugate of {g.name}")
    bad = v > sup if closed else v >= sup
    if np.any(bad):
        op = "<=" if closed else "<"
        raise DomainError(f"argument {float(np.max(v))!r} outside the conjugate domain of "
                          f"{g.name}: requires v {op} {sup!r}")


def eval_conjugate(g: Generator, v: ArrayLike):
    """``f*(v)`` with a domain check."""
    arr = np.asarray(v, dtype=float)
    _check_conjugate_domain(g, arr, g.conjugate_domain_closed)
    if g.conjugate_domain_closed:
        return _out(np.where(arr == g.conjugate_domain_sup, g.fstar_at_sup, g.fstar(arr)))
    return g.fstar(arr)


def eval_conjugate_prime(g: Generator, v: ArrayLike):
    """``f*'(v)`` with a domain check.

    This is the catalog formula itself; nonnegativity of probabilities comes
    from the ``max(v, f'(0))`` clamp applied by the solvers (for chi-square
    ``f*'(v) = v`` is negative below zero).
    """
    arr = np.asarray(v, dtype=float)
    _check_conjugate_domain(g, arr, False)
    return g.fstar_prime(arr)


# ---------------------------------------------------------------------------
# Divergences


def _check_pair(p, q):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("expected a vector")
    ref = as_reference(q, p.size)
    if np.any(np.isnan(p)) or np.any(p < 0):
        raise ValueError("divergence arguments must be nonnegative")
    return p, ref


def divergence(g: Generator, p: ArrayLike, q) -> float:
    """``D_f(p, q) = sum_j q_j f(p_j / q_j)``.

    Zero entries of ``p`` contribute ``q_j f(0+)``, which is ``+inf`` for
    generators that blow up at the boundary.
    """
    p, ref = _check_pair(p, q)
    terms = ref.q * np.asarray(g.f(p / ref.q))
    return float(np.sum(terms))


def negentropy(g: Generator, p: ArrayLike) -> float:
    """``D_f(p, 1)``: Shannon / Gini / Tsallis negentropy up to a constant."""
    p = np.asarray(p, dtype=float)
    return divergence(g, p, np.ones(p.size))


def divergence_grad_q(g: Generator, p: ArrayLike, q) -> np.ndarray:
    """Gradient of ``D_f(p, q)`` in ``q``: ``f(u) - u f'(u)`` at ``u = p / q``.

    At ``p_j = 0`` the limit ``f(0+)`` is used.
    """
    p, ref = _check_pair(p, q)
    u = p / ref.q
    with np.errstate(all="ignore"):
        grad = np.asarray(g.f(u)) - u * np.asarray(g.fprime(u))
    return np.where(p == 0, g.f_at_zero, grad)
