"""Invariant density, Lyapunov exponent and the dynamical variance of phi.

The absolutely continuous invariant probability is approximated by Ulam's
method: the cell-to-cell transition matrix is assembled exactly from the
preimages of the cell boundaries, and its stationary vector is found by
power iteration.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dynamics import CircleMapSpec, inverse_lift
from .errors import ConvergenceFailure, DegenerateDynamics, NonSummableWarning
from .weierstrass import SystemHandle, orbit_phi, phi

DEFAULT_CELLS = 2**14
MC_BLOCK = 4096


@dataclass(frozen=True)
class UlamDensity:
    m: int
    weights: np.ndarray = field(repr=False)
    residual: float
    matrix: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def density(self) -> np.ndarray:
        return self.weights * self.m

    @property
    def left_endpoints(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m


@dataclass(frozen=True)
class LyapunovResult:
    L: float
    ell: float


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2: float
    sigma: float
    method: str
    terms_or_samples: int
    diagnostics: list = field(default_factory=list, repr=False)
    stderr: float = 0.0


def ulam_matrix(fmap: CircleMapSpec, m: int) -> sp.csr_matrix:
    """Row-stochastic ``P[i, j] = Leb(cell_i & f^{-1} cell_j) / Leb(cell_i)``."""
    g0 = float(fmap.g(0.0))
    j0 = math.ceil(g0 * m)
    targets = (j0 + np.arange(fmap.degree * m + 1)) / m
    targets = targets[(targets >= g0) & (targets < g0 + fmap.degree)]
    pre = inverse_lift(fmap, targets)
    cuts = np.concatenate([pre, np.arange(m + 1) / m])
    cuts = np.unique(np.clip(cuts, 0.0, 1.0))
    left, right = cuts[:-1], cuts[1:]
    length = right - left
    keep = length > 0
    left, length = left[keep], length[keep]
    mid = left + 0.5 * length
    i = np.minimum((mid * m).astype(np.int64), m - 1)
    j = np.mod(np.floor(fmap.f(mid) * m).astype(np.int64), m)
    P = sp.coo_matrix((length * m, (i, j)), shape=(m, m)).tocsr()
    P.sum_duplicates()
    return P


def invariant_density(
    fmap: CircleMapSpec,
    m: int = DEFAULT_CELLS,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> UlamDensity:
    """Stationary vector of the Ulam matrix by power iteration from uniform."""
    if m < 2**10 or m & (m - 1):
        raise ValueError("m must be a power of two >= 1024")
    P = ulam_matrix(fmap, m)
    PT = P.T.tocsr()
    w = np.full(m, 1.0 / m)
    change = np.inf
    for _ in range(max_iter):
        w_new = PT @ w
        w_new /= w_new.sum()
        change = float(np.abs(w_new - w).sum())
        w = w_new
        if change <= tol:
            break
    else:
        raise ConvergenceFailure(f"Ulam power iteration: L1 change {change:.3g} after {max_iter} steps")
    w = np.maximum(w, 0.0)
    w /= w.sum()
    return UlamDensity(m=m, weights=w, residual=change, matrix=P)


def integrate(rho: UlamDensity, g, s: int = 4) -> float:
    """``int g d(mu)`` with ``g`` averaged over ``s`` points per cell.

    ``g`` is a vectorised callable or a length-``m`` table of cell averages.
    """
    if callable(g):
        offs = (np.arange(s) + 0.5) / s
        pts = (np.arange(rho.m)[:, None] + offs[None, :]) / rho.m
        cell = np.asarray(g(pts), dtype=float).mean(axis=1)
    else:
        cell = np.asarray(g, dtype=float)
        if cell.shape != (rho.m,):
            raise ValueError("table must have one value per cell")
    return float(np.dot(rho.weights, cell))


def lyapunov(fmap: CircleMapSpec, rho: UlamDensity) -> LyapunovResult:
    L = integrate(rho, lambda x: np.log(np.abs(fmap.df(x))))
    if not L > 0:
        raise DegenerateDynamics(f"Lyapunov exponent {L} is not positive")
    return LyapunovResult(L=L, ell=1.0 / math.sqrt(L))


def mean_phi(sys: SystemHandle, rho: UlamDensity) -> float:
    return integrate(rho, lambda x: phi(sys, x))


def _clamp(sigma2, tol=1e-9):
    if -tol <= sigma2 < 0.0:
        return 0.0
    return sigma2


def transfer_matrix(fmap: CircleMapSpec, m: int) -> sp.csr_matrix:
    """Transfer operator on values at the cell midpoints.

    ``(L psi)(y) = sum_{f(x) = y} psi(x) / Df(x)`` with ``psi`` between nodes
    given by periodic four-point Lagrange interpolation.
    """
    nodes = (np.arange(m) + 0.5) / m
    g0 = float(fmap.g(0.0))
    rows, cols, vals = [], [], []
    for shift in range(-1, fmap.degree + 1):
        t = nodes + shift
        ok = (t >= g0) & (t < g0 + fmap.degree)
        x = inverse_lift(fmap, t[ok])
        weight = 1.0 / np.abs(fmap.df(x))
        u = np.mod(x, 1.0) * m - 0.5
        base = np.floor(u)
        fr = u - base
        base = base.astype(np.int64)
        lag = (
            -fr * (fr - 1) * (fr - 2) / 6.0,
            (fr + 1) * (fr - 1) * (fr - 2) / 2.0,
            -(fr + 1) * fr * (fr - 2) / 2.0,
            (fr + 1) * fr * (fr - 1) / 6.0,
        )
        r = np.flatnonzero(ok)
        for off, c in zip(range(-1, 3), lag):
            rows.append(r)
            cols.append(np.mod(base + off, m))
            vals.append(c * weight)
    T = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )
    return T.tocsr()


def variance_green_kubo(
    sys: SystemHandle,
    rho: UlamDensity,
    n_max: int = 64,
    term_tol: float = 1e-10,
) -> VarianceEstimate:
    """``sigma^2 = C_0 + 2 sum_{n>=1} C_n`` with ``C_n = int phî . phî o f^n d(mu)``.

    Correlations are computed as ``int phî . L^n(phî rho) dm`` on the cell
    midpoints, with the density taken from ``rho``.  Summation stops once
    three consecutive ``|C_n|`` fall below ``term_tol``.
    """
    if n_max > 100:
        raise ValueError("n_max must be <= 100")
    m = rho.m
    nodes = rho.midpoints
    vals = np.asarray(phi(sys, nodes))
    centred = vals - float(np.dot(rho.weights, vals))
    psi = centred * rho.density
    T = transfer_matrix(sys.map, m)
    corr = [float(np.dot(centred, psi)) / m]
    small = 0
    for _ in range(n_max):
        psi = T @ psi
        c = float(np.dot(centred, psi)) / m
        corr.append(c)
        small = small + 1 if abs(c) < term_tol else 0
        if small >= 3:
            break
    else:
        warnings.warn(
            f"correlations still above {term_tol:g} after {n_max} lags", NonSummableWarning
        )
    sigma2 = _clamp(corr[0] + 2.0 * sum(corr[1:]))
    return VarianceEstimate(
        sigma2=sigma2,
        sigma=math.sqrt(max(sigma2, 0.0)),
        method="green_kubo",
        terms_or_samples=len(corr) - 1,
        diagnostics=corr,
    )


def finite_horizon_variance(gk: VarianceEstimate, n: int) -> float:
    """``int (S_n phî)^2 / n d(mu)`` predicted from Green-Kubo correlations.

    Equals ``C_0 + 2 sum_{k<n} (1 - k/n) C_k``; this is what the Monte Carlo
    estimator targets at finite ``n``.
    """
    corr = gk.diagnostics
    total = corr[0]
    for k in range(1, min(n, len(corr))):
        total += 2.0 * (1.0 - k / n) * corr[k]
    return total


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def sample_mu(rho: UlamDensity, rng: np.random.Generator, size=None):
    """Inverse-CDF draw from the piecewise-constant density."""
    cdf = np.cumsum(rho.weights)
    u = rng.random(size)
    cell = np.searchsorted(cdf, u * cdf[-1], side="right")
    cell = np.minimum(cell, rho.m - 1)
    x = (cell + rng.random(size)) / rho.m
    return float(x) if size is None else x


def draw_mu(rho: UlamDensity, seed: int, n: int, block: int = MC_BLOCK) -> np.ndarray:
    """``n`` draws from ``rho``; block ``b`` uses its own stream spawned from ``seed``.

    The sequence depends only on ``(seed, n, block)``, never on worker count.
    """
    out = []
    for b in range(-(-n // block)):
        size = min(block, n - b * block)
        out.append(sample_mu(rho, _block_rng(seed, b), size))
    return np.concatenate(out) if out else np.empty(0)


def run_blocks(fn, n_blocks: int, workers: int = 1):
    """Apply ``fn`` to block indices, returning results in block order."""
    if workers <= 1:
        return [fn(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_blocks)))


def variance_birkhoff_mc(
    sys: SystemHandle,
    rho: UlamDensity,
    n: int = 1000,
    samples: int = 10_000,
    seed: int = 0,
    *,
    workers: int = 1,
    block: int = MC_BLOCK,
) -> VarianceEstimate:
    """Mean of ``(S_n phî / sqrt(n))^2`` over ``x ~ mu``.

    Orbits are pseudo-orbits with tiny seeded kicks (see ``orbit_phi``).
    ``diagnostics`` holds per-block means; ``stderr`` is the standard error.
    """
    if n < 100:
        raise ValueError("n must be >= 100")
    if samples < 10_000:
        raise ValueError("samples must be >= 10_000")
    centre = mean_phi(sys, rho)
    n_blocks = -(-samples // block)

    def one(b):
        size = min(block, samples - b * block)
        rng = _block_rng(seed, b)
        x = sample_mu(rho, rng, size)
        s = orbit_phi(sys, x, n, rng=rng).sum(axis=-1) - n * centre
        return s * s / n

    parts = run_blocks(one, n_blocks, workers)
    allv = np.concatenate(parts)
    sigma2 = float(allv.mean())
    stderr = float(allv.std(ddof=1) / math.sqrt(allv.size))
    return VarianceEstimate(
        sigma2=sigma2,
        sigma=math.sqrt(max(sigma2, 0.0)),
        method="birkhoff_mc",
        terms_or_samples=int(allv.size),
        diagnostics=[float(p.mean()) for p in parts],
        stderr=stderr,
    )


def estimators_agree(gk: VarianceEstimate, mc: VarianceEstimate, n: int, rel: float = 0.02,
                     n_se: float = 3.0) -> bool:
    """Green-Kubo vs Monte Carlo agreement at horizon ``n``."""
    target = finite_horizon_variance(gk, n)
    return abs(target - mc.sigma2) <= max(rel * abs(target), n_se * mc.stderr)
