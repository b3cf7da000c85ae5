"""The generalized Weierstrass function and quantities built from it.

``alpha`` is the unique bounded solution of ``v = alpha o f - Df * alpha``,
evaluated through the series ``alpha(y) = -sum_{n>=1} v(f^{n-1} y) / Df^n(y)``.
All functions accept scalars or numpy arrays for ``x`` (and ``h``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dynamics import DEFAULT_GRID, TWO_PI, CircleMapSpec, DerivativeBounds, derivative_bounds


@dataclass(frozen=True)
class ObservableSpec:
    """``v(x) = c0 + sum_k c_k cos(2 pi k x) + s_k sin(2 pi k x)``."""

    mean_coeff: float = 0.0
    harmonics: tuple = ()
    name: str = ""

    def __post_init__(self):
        terms = tuple((int(k), float(c), float(s)) for k, c, s in self.harmonics)
        for k, _, _ in terms:
            if k < 1:
                raise ValueError(f"harmonic index must be positive, got {k}")
        object.__setattr__(self, "mean_coeff", float(self.mean_coeff))
        object.__setattr__(self, "harmonics", terms)

    @cached_property
    def _coeffs(self):
        if not self.harmonics:
            z = np.zeros(0)
            return z, z, z
        arr = np.asarray(self.harmonics, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    @property
    def sup_bound(self) -> float:
        return abs(self.mean_coeff) + float(sum(abs(c) + abs(s) for _, c, s in self.harmonics))

    def v(self, x):
        k, c, s = self._coeffs
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.mean_coeff)
        for kk, cc, ss in zip(k, c, s):
            th = TWO_PI * kk * x
            out = out + cc * np.cos(th) + ss * np.sin(th)
        return out

    def dv(self, x):
        k, c, s = self._coeffs
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for kk, cc, ss in zip(k, c, s):
            w = TWO_PI * kk
            th = w * x
            out = out + w * (ss * np.cos(th) - cc * np.sin(th))
        return out

    def to_dict(self) -> dict:
        return {
            "mean_coeff": self.mean_coeff,
            "harmonics": [list(t) for t in self.harmonics],
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObservableSpec":
        return cls(
            mean_coeff=data.get("mean_coeff", 0.0),
            harmonics=tuple(tuple(t) for t in data.get("harmonics", ())),
            name=data.get("name", ""),
        )


@dataclass(frozen=True)
class TruncationPolicy:
    tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("truncation tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


def terms_needed(sup_v: float, b: float, tol: float) -> int:
    """Smallest ``N >= 1`` with ``sup_v * b**-N / (b - 1) <= tol``."""
    if sup_v == 0.0:
        return 1
    n = math.ceil(math.log(sup_v / (tol * (b - 1.0))) / math.log(b))
    return max(n, 1)


@dataclass(frozen=True)
class SystemHandle:
    """A certified (map, observable) pair plus evaluation settings.

    Build with :func:`make_system`, which certifies expansion first.
    """

    map: CircleMapSpec
    observable: ObservableSpec
    bounds: DerivativeBounds
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    hoelder_eps: float = 0.5

    def __post_init__(self):
        if not self.bounds.b > 1.0:
            raise ValueError("SystemHandle requires certified bounds with b > 1")
        if not 0.0 < self.hoelder_eps < 1.0:
            raise ValueError("hoelder_eps must lie in (0, 1)")
        if self.n_terms > self.policy.max_terms:
            raise ValueError(
                f"truncation needs {self.n_terms} terms for tol={self.policy.tol:g}, "
                f"above max_terms={self.policy.max_terms}"
            )

    @cached_property
    def n_terms(self) -> int:
        return terms_needed(self.observable.sup_bound, self.bounds.b, self.policy.tol)

    def with_policy(self, policy: TruncationPolicy) -> "SystemHandle":
        return SystemHandle(self.map, self.observable, self.bounds, policy, self.hoelder_eps)


def make_system(
    fmap: CircleMapSpec,
    observable: ObservableSpec,
    policy: TruncationPolicy | None = None,
    *,
    hoelder_eps: float = 0.5,
    grid_size: int = DEFAULT_GRID,
) -> SystemHandle:
    bounds = derivative_bounds(fmap, grid_size)
    return SystemHandle(fmap, observable, bounds, policy or TruncationPolicy(), hoelder_eps)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def alpha(sys: SystemHandle, x, *, n_terms: int | None = None):
    """Truncated series for alpha with compensated summation."""
    fmap, obs = sys.map, sys.observable
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    n_terms = sys.n_terms if n_terms is None else n_terms
    dfn = np.ones_like(y)
    total = np.zeros_like(y)
    comp = np.zeros_like(y)
    for _ in range(n_terms):
        dfn = dfn * fmap.df(y)
        term = -obs.v(y) / dfn - comp
        t = total + term
        comp = (t - total) - term
        total = t
        y = np.mod(fmap.f(y), 1.0)
    return _out(total)


def cohomological_residual(sys: SystemHandle, x):
    """``v(x) - alpha(f(x)) + Df(x) alpha(x)``; zero up to truncation error."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    fmap = sys.map
    r = sys.observable.v(x) - alpha(sys, fmap.f(x)) + fmap.df(x) * alpha(sys, x)
    return _out(r)


def phi(sys: SystemHandle, x):
    """``-(v'(x) + alpha(x) D2f(x)) / Df(x)``."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    fmap = sys.map
    num = sys.observable.dv(x)
    if not fmap.is_linear:
        num = num + np.asarray(alpha(sys, x)) * fmap.d2f(x)
    return _out(-num / fmap.df(x))


def orbit_phi(sys: SystemHandle, x0, n: int, *, rng=None, jitter: float = 2.0**-43):
    """``phi(f^i x0)`` for ``i < n``, shape ``x0.shape + (n,)``.

    alpha along the orbit is obtained by the backward recursion
    ``alpha(x_i) = (alpha(x_{i+1}) - v(x_i)) / Df(x_i)`` started from zero
    ``n_terms`` steps past the end, which matches the truncated series.

    If ``rng`` is given, each forward step is perturbed by a uniform kick of
    size ``jitter``.  The result is a pseudo-orbit, shadowed by a true orbit;
    this keeps long orbits of maps such as ``x -> 2x`` from collapsing onto
    dyadic rationals in floating point.
    """
    fmap, obs = sys.map, sys.observable
    x0 = np.mod(np.asarray(x0, dtype=float), 1.0)
    linear = fmap.is_linear
    length = n if linear else n + sys.n_terms
    xs = np.empty(x0.shape + (length,))
    y = x0
    for i in range(length):
        xs[..., i] = y
        y = fmap.f(y)
        if rng is not None:
            y = y + rng.uniform(-jitter, jitter, size=y.shape)
        y = np.mod(y, 1.0)
    head = xs[..., :n]
    num = obs.dv(head)
    if not linear:
        a = np.zeros(x0.shape)
        alphas = np.empty(x0.shape + (n,))
        for i in range(length - 1, -1, -1):
            xi = xs[..., i]
            a = (a - obs.v(xi)) / fmap.df(xi)
            if i < n:
                alphas[..., i] = a
        num = num + alphas * fmap.d2f(head)
    return -num / fmap.df(head)


def stopping_time(sys: SystemHandle, x, h):
    """``N(x, h)``: the ``N >= 0`` with ``1/|Df^{N+1}(x)| <= |h| < 1/|Df^N(x)|``."""
    fmap = sys.map
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    ah = np.abs(np.asarray(h, dtype=float))
    if np.any((ah <= 0) | (ah >= 1)):
        raise ValueError("stopping_time requires 0 < |h| < 1")
    y, ah = np.broadcast_arrays(y, ah)
    y = y.copy()
    prod = np.ones(y.shape)
    n = np.zeros(y.shape, dtype=np.int64)
    active = np.ones(y.shape, dtype=bool)
    while True:
        prod = prod * np.abs(fmap.df(y))
        active &= prod * ah < 1.0
        if not active.any():
            break
        n += active
        y = np.mod(fmap.f(y), 1.0)
    return int(n) if n.ndim == 0 else n


def birkhoff_sum_phi(sys: SystemHandle, x, n):
    """``sum_{i<n} phi(f^i x)``; ``n`` may be an array matching ``x``."""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=np.int64)
    if np.any(n < 0):
        raise ValueError("n must be non-negative")
    x, n = np.broadcast_arrays(x, n)
    n_max = int(n.max()) if n.size else 0
    if n_max == 0:
        return _out(np.zeros(x.shape))
    vals = orbit_phi(sys, x, n_max)
    mask = np.arange(n_max) < n[..., None]
    return _out(np.where(mask, vals, 0.0).sum(axis=-1))


def _check_h(h, upper_inclusive=False):
    ah = np.abs(np.asarray(h, dtype=float))
    bad = (ah <= 0) | ((ah > 1) if upper_inclusive else (ah >= 1))
    if np.any(bad):
        raise ValueError("increment size must satisfy 0 < |h| < 1" if not upper_inclusive
                         else "increment size must satisfy 0 < |h| <= 1")


def increment(sys: SystemHandle, x, h):
    """``alpha(x + h) - alpha(x)``."""
    _check_h(h)
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    return _out(np.asarray(alpha(sys, x + h)) - np.asarray(alpha(sys, x)))


def residual_ratio(sys: SystemHandle, x, h):
    """``(alpha(x+h) - alpha(x) - h * S_{N(x,h)} phi(x)) / h``."""
    _check_h(h)
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    n = stopping_time(sys, x, h)
    s = np.asarray(birkhoff_sum_phi(sys, x, n))
    inc = np.asarray(increment(sys, x, h))
    return _out((inc - h * s) / h)


def second_difference(sys: SystemHandle, x, h):
    """``alpha(x+h) + alpha(x-h) - 2 alpha(x)``."""
    _check_h(h, upper_inclusive=True)
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    a = np.asarray
    return _out(a(alpha(sys, x + h)) + a(alpha(sys, x - h)) - 2.0 * a(alpha(sys, x)))


def zygmund_ratio(sys: SystemHandle, x, h):
    """``|second_difference| / |h|``; bounded for every admissible system."""
    return _out(np.abs(np.asarray(second_difference(sys, x, h))) / np.abs(h))


def omega_ratio(sys: SystemHandle, x, h):
    """``second_difference / |h|**(1 + hoelder_eps)``."""
    return _out(np.asarray(second_difference(sys, x, h)) / np.abs(h) ** (1.0 + sys.hoelder_eps))


def scale_maxima(quantity, sys: SystemHandle, ks, n_x: int, seed: int = 0) -> np.ndarray:
    """``max |quantity(sys, x, 2**-k)|`` over ``n_x`` uniform ``x`` for each ``k``.

    A fresh point set is drawn per scale from a stream keyed by ``(seed, k)``.
    """
    out = []
    for k in ks:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(k),)))
        x = rng.random(n_x)
        out.append(float(np.max(np.abs(quantity(sys, x, 2.0 ** -int(k))))))
    return np.asarray(out)
