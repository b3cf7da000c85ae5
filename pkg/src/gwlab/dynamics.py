"""Expanding circle maps given as trigonometric lifts.

A map is stored as the lift ``f(x) = d*x + g(x)`` on the real line, where ``g``
is a 1-periodic trigonometric polynomial.  All derivatives are evaluated in
closed form from the harmonic coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BudgetExceeded, ConvergenceFailure, NotExpanding

TWO_PI = 2.0 * math.pi

DEFAULT_GRID = 2**16


def _harmonic_arrays(harmonics):
    if not harmonics:
        z = np.zeros(0)
        return z, z, z
    arr = np.asarray(harmonics, dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2]


@dataclass(frozen=True)
class CircleMapSpec:
    """Degree-``d`` lift ``f(x) = d*x + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)``.

    ``perturbation`` is a sequence of ``(k, cos_coeff, sin_coeff)`` triples.
    """

    degree: int
    perturbation: tuple = ()
    name: str = ""

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 2:
            raise ValueError(f"degree must be an integer >= 2, got {self.degree!r}")
        terms = tuple((int(k), float(a), float(b)) for k, a, b in self.perturbation)
        for k, _, _ in terms:
            if k < 1:
                raise ValueError(f"harmonic index must be positive, got {k}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "perturbation", terms)

    @cached_property
    def _coeffs(self):
        return _harmonic_arrays(self.perturbation)

    @property
    def is_linear(self) -> bool:
        return all(a == 0.0 and b == 0.0 for _, a, b in self.perturbation)

    @property
    def amplitude_bound(self) -> float:
        """Upper bound for ``sup |g|``."""
        return float(sum(abs(a) + abs(b) for _, a, b in self.perturbation))

    @property
    def lipschitz_df(self) -> float:
        """Upper bound for the Lipschitz constant of ``Df`` (i.e. ``sup |g''|``)."""
        return float(sum((TWO_PI * k) ** 2 * (abs(a) + abs(b)) for k, a, b in self.perturbation))

    def g(self, x):
        k, a, b = self._coeffs
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for kk, aa, bb in zip(k, a, b):
            th = TWO_PI * kk * x
            out = out + aa * np.cos(th) + bb * np.sin(th)
        return out

    def f(self, x):
        x = np.asarray(x, dtype=float)
        return self.degree * x + self.g(x)

    def df(self, x):
        k, a, b = self._coeffs
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, float(self.degree))
        for kk, aa, bb in zip(k, a, b):
            w = TWO_PI * kk
            th = w * x
            out = out + w * (bb * np.cos(th) - aa * np.sin(th))
        return out

    def d2f(self, x):
        k, a, b = self._coeffs
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for kk, aa, bb in zip(k, a, b):
            w = TWO_PI * kk
            th = w * x
            out = out - w * w * (aa * np.cos(th) + bb * np.sin(th))
        return out

    def step(self, x):
        """One iterate on the circle: ``f(x) mod 1``."""
        return np.mod(self.f(x), 1.0)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "perturbation": [list(t) for t in self.perturbation],
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircleMapSpec":
        return cls(
            degree=data["degree"],
            perturbation=tuple(tuple(t) for t in data.get("perturbation", ())),
            name=data.get("name", ""),
        )


@dataclass(frozen=True)
class DerivativeBounds:
    b: float
    B: float
    grid_size: int


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    word: tuple = field(default=())


def eval_map(spec: CircleMapSpec, x):
    """Return ``(f(x), Df(x), D2f(x))`` for the lift; scalars in, floats out."""
    f, df, d2f = spec.f(x), spec.df(x), spec.d2f(x)
    if np.ndim(f) == 0:
        return float(f), float(df), float(d2f)
    return f, df, d2f


def derivative_bounds(spec: CircleMapSpec, grid_size: int = DEFAULT_GRID) -> DerivativeBounds:
    """Certified bounds ``b <= |Df| <= B``.

    The grid extrema are widened by ``Lip(Df)/grid_size`` so that the lower
    bound holds everywhere, not only at grid points.

    Raises
    ------
    NotExpanding
        if the certified lower bound is ``<= 1``.
    """
    if grid_size < 1024:
        raise ValueError("grid_size must be at least 1024")
    xs = np.arange(grid_size, dtype=float) / grid_size
    df = np.abs(spec.df(xs))
    margin = spec.lipschitz_df / grid_size
    b = float(df.min() - margin)
    B = float(df.max() + margin)
    if b <= 1.0:
        raise NotExpanding(
            f"map {spec.name or spec.degree!r} is not expanding: certified inf|Df| = {b:.6g} <= 1"
        )
    return DerivativeBounds(b=b, B=B, grid_size=int(grid_size))


def inverse_lift(spec: CircleMapSpec, t, max_iter: int = 100):
    """Solve ``f(x) = t`` on the real line (``f`` is an increasing bijection of R).

    Safeguarded Newton iteration, bracketed by ``|g| <= amplitude_bound``.
    """
    t = np.asarray(t, dtype=float)
    d = spec.degree
    if spec.is_linear:
        return t / d
    G = spec.amplitude_bound
    lo = (t - G) / d
    hi = (t + G) / d
    x = t / d
    active = np.ones(t.shape, dtype=bool)
    for _ in range(max_iter):
        r = spec.f(x) - t
        lo = np.where(r < 0, x, lo)
        hi = np.where(r > 0, x, hi)
        x_new = x - r / spec.df(x)
        bad = (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        step = np.abs(x_new - x)
        x = np.where(active, x_new, x)
        active &= ~((step <= 4e-16 * np.maximum(1.0, np.abs(x))) | (r == 0))
        if not active.any():
            return x
    raise ConvergenceFailure(f"inverse_lift did not converge in {max_iter} iterations")


def inverse_branches(spec: CircleMapSpec, y: float) -> np.ndarray:
    """The ``d`` preimages in ``[0, 1)`` of ``y`` under the circle map, sorted."""
    y = float(y) % 1.0
    g0 = float(spec.g(0.0))
    # targets y + n lying in f([0, 1)) = [g0, g0 + d)
    n0 = math.ceil(g0 - y)
    targets = y + np.arange(n0, n0 + spec.degree, dtype=float)
    xs = np.mod(inverse_lift(spec, targets), 1.0)
    return np.sort(xs)


def _circle_dist(a, b):
    d = np.abs(np.mod(a - b, 1.0))
    return np.minimum(d, 1.0 - d)


def _divisors(p):
    return [q for q in range(1, p) if p % q == 0]


def _words(d, p):
    # all words of length p over {0..d-1}, lexicographic
    idx = np.arange(d**p)
    out = np.empty((idx.size, p), dtype=np.int64)
    for j in range(p - 1, -1, -1):
        out[:, j] = idx % d
        idx = idx // d
    return out


def _orbit_chain(spec, words, x):
    # z_p = x, z_j = f^{-1}(w_j + z_{j+1}); returns array (n, p+1) with z_0..z_p
    n, p = words.shape
    z = np.empty((n, p + 1))
    z[:, p] = x
    for j in range(p - 1, -1, -1):
        z[:, j] = inverse_lift(spec, words[:, j] + z[:, j + 1])
    return z


def periodic_orbits(
    spec: CircleMapSpec,
    p_max: int,
    *,
    word_cap: int = 2**20,
    max_iter: int = 200,
    step_tol: float = 1e-14,
    dedup_tol: float = 1e-9,
) -> list[PeriodicOrbit]:
    """All periodic orbits of exact period ``p <= p_max``.

    Every word ``w`` in ``{0..d-1}^p`` defines the contraction
    ``x -> f^{-1}(w_0 + f^{-1}(w_1 + ... f^{-1}(w_{p-1} + x)))`` of the real line,
    whose fixed point projects to a period-``p`` point of the circle map.
    Orbits are returned sorted by ``(period, first point)`` with points rotated
    so that the smallest comes first.
    """
    if not 1 <= p_max <= 16:
        raise ValueError("p_max must lie in [1, 16]")
    d = spec.degree
    total = sum(d**p for p in range(1, p_max + 1))
    if total > word_cap:
        raise BudgetExceeded(f"{total} words needed for p_max={p_max}, cap is {word_cap}")

    orbits = []
    for p in range(1, p_max + 1):
        words = _words(d, p)
        x = np.full(words.shape[0], 0.5)
        for _ in range(max_iter):
            x_new = _orbit_chain(spec, words, x)[:, 0]
            step = np.max(np.abs(x_new - x))
            x = x_new
            if step < step_tol:
                break
        else:
            raise ConvergenceFailure(f"period-{p} fixed-point iteration did not converge")
        z = _orbit_chain(spec, words, x)[:, :p]
        pts = np.mod(z, 1.0)
        pts[pts > 1.0 - 1e-13] = 0.0

        exact = np.ones(words.shape[0], dtype=bool)
        for q in _divisors(p):
            exact &= _circle_dist(pts[:, 0], pts[:, q]) > dedup_tol
        cand = np.flatnonzero(exact)
        if cand.size == 0:
            continue
        rot = np.argmin(pts[cand], axis=1)
        keys = pts[cand, rot]
        order = np.argsort(keys, kind="stable")
        group_start = 0
        for pos in range(1, order.size + 1):
            if pos < order.size and keys[order[pos]] - keys[order[group_start]] <= dedup_tol:
                continue
            members = order[group_start:pos]
            best = members[np.argmin(cand[members])]
            i, r = cand[best], rot[best]
            orbits.append(
                PeriodicOrbit(
                    period=p,
                    points=tuple(float(v) for v in np.roll(pts[i], -r)),
                    word=tuple(int(v) for v in np.roll(words[i], -r)),
                )
            )
            group_start = pos
    orbits.sort(key=lambda o: (o.period, o.points[0]))
    return orbits


def count_periodic_points(d: int, p: int) -> int:
    """Number of points of exact period ``p`` for a degree-``d`` expanding map."""
    total = 0
    for q in range(1, p + 1):
        if p % q == 0:
            total += _mobius(p // q) * (d**q - 1)
    return total


def _mobius(n):
    if n == 1:
        return 1
    result, m, f = 1, n, 2
    while f * f <= m:
        if m % f == 0:
            m //= f
            if m % f == 0:
                return 0
            result = -result
        f += 1
    if m > 1:
        result = -result
    return result


__all__ = [
    "CircleMapSpec",
    "DerivativeBounds",
    "PeriodicOrbit",
    "eval_map",
    "derivative_bounds",
    "inverse_lift",
    "inverse_branches",
    "periodic_orbits",
    "count_periodic_points",
]
