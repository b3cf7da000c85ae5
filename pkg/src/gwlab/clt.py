"""Monte Carlo checks of the Gaussian law and LIL scaling of alpha's increments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .ergodic import (
    MC_BLOCK,
    LyapunovResult,
    UlamDensity,
    VarianceEstimate,
    run_blocks,
    sample_mu,
)
from .errors import ZeroVariance
from .weierstrass import SystemHandle, increment, orbit_phi


def normal_cdf(y):
    """Standard normal CDF."""
    out = ndtr(np.asarray(y, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCDF":
        return cls(np.sort(np.asarray(samples, dtype=float).ravel()))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __call__(self, x):
        out = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n
        return float(out) if np.ndim(out) == 0 else out


def ks_statistic(samples, cdf) -> float:
    """``sup_x |F_n(x) - F(x)|`` for the empirical CDF of ``samples``."""
    if not isinstance(samples, EmpiricalCDF):
        samples = EmpiricalCDF.from_samples(samples)
    n = samples.n
    if n < 1:
        raise ValueError("need at least one sample")
    F = np.asarray(cdf(samples.values), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@dataclass(frozen=True)
class KSReport:
    h: float
    n_samples: int
    ks_vs_normal: float
    ks_vs_birkhoff: float
    seed: int
    mean_y: float = 0.0
    var_y: float = 0.0
    birkhoff_length: int = 0

    @property
    def k(self) -> float:
        return -math.log2(self.h)


@dataclass(frozen=True)
class LILTrace:
    x: float
    entries: list = field(repr=False)
    sup_abs: float
    running_sup: list = field(default_factory=list, repr=False)


def _require_variance(sigma: VarianceEstimate, sigma_tol: float):
    # same threshold on sigma^2 as the regularity classifier
    if not sigma.sigma2 > sigma_tol:
        raise ZeroVariance(
            f"sigma^2(phi) = {sigma.sigma2:.3g} <= {sigma_tol:g}: the increment law requires "
            "sigma(phi) != 0 (alpha is C^(1+eps) here, not nowhere differentiable)"
        )


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def increment_samples(sys, sigma, lyap, x, h):
    """Normalised increments ``(alpha(x+h) - alpha(x)) / (sigma l h sqrt(-log h))``."""
    if not 0.0 < h < math.exp(-1.0):
        raise ValueError("h must lie in (0, 1/e)")
    scale = sigma.sigma * lyap.ell * h * math.sqrt(-math.log(h))
    return np.asarray(increment(sys, x, h)) / scale


def birkhoff_length(h: float, lyap: LyapunovResult) -> int:
    return max(1, round(-math.log(h) / lyap.L))


def clt_experiment(
    sys: SystemHandle,
    rho: UlamDensity,
    sigma: VarianceEstimate,
    lyap: LyapunovResult,
    h_list,
    n_samples: int = 100_000,
    seed: int = 1,
    *,
    sigma_tol: float = 1e-6,
    workers: int = 1,
    block: int = MC_BLOCK,
) -> list[KSReport]:
    """KS distances of the normalised increment law at each ``h``.

    ``ks_vs_normal`` compares with the standard normal; ``ks_vs_birkhoff``
    compares with ``S_n phi / (sigma sqrt(n))``, ``n = round(-log h / L)``,
    over an independent sample from ``mu``.
    """
    _require_variance(sigma, sigma_tol)
    n_blocks = -(-n_samples // block)
    reports = []
    for j, h in enumerate(h_list):
        h = float(h)
        nbar = birkhoff_length(h, lyap)

        def one(b, h=h, j=j, nbar=nbar):
            size = min(block, n_samples - b * block)
            x = sample_mu(rho, _rng(seed, j, 0, b), size)
            y = increment_samples(sys, sigma, lyap, x, h)
            xb = sample_mu(rho, _rng(seed, j, 1, b), size)
            z = orbit_phi(sys, xb, nbar).sum(axis=-1) / (sigma.sigma * math.sqrt(nbar))
            return y, z

        parts = run_blocks(one, n_blocks, workers)
        y = np.concatenate([p[0] for p in parts])
        z = np.concatenate([p[1] for p in parts])
        reports.append(
            KSReport(
                h=h,
                n_samples=int(y.size),
                ks_vs_normal=ks_statistic(y, normal_cdf),
                ks_vs_birkhoff=ks_statistic(y, EmpiricalCDF.from_samples(z)),
                seed=seed,
                mean_y=float(y.mean()),
                var_y=float(y.var(ddof=1)),
                birkhoff_length=nbar,
            )
        )
    return reports


def lil_normaliser(h):
    lh = -np.log(np.abs(h))
    return np.abs(h) * np.sqrt(2.0 * lh * np.log(np.log(lh)))


def lil_trace(
    sys: SystemHandle,
    sigma: VarianceEstimate,
    lyap: LyapunovResult,
    x: float,
    k_min: int = 4,
    k_max: int = 30,
    *,
    sigma_tol: float = 1e-6,
) -> LILTrace:
    """Ratios ``R_k`` of increments to the iterated-log modulus at ``h = 2**-k``."""
    if not 4 <= k_min < k_max <= 40:
        raise ValueError("need 4 <= k_min < k_max <= 40")
    _require_variance(sigma, sigma_tol)
    ks = np.arange(k_min, k_max + 1)
    hs = 2.0 ** -ks.astype(float)
    xs = np.full(hs.shape, float(x))
    r = np.asarray(increment(sys, xs, hs)) / lil_normaliser(hs)
    running = np.maximum.accumulate(np.abs(r))
    entries = [(int(k), float(h), float(v)) for k, h, v in zip(ks, hs, r)]
    return LILTrace(
        x=float(x),
        entries=entries,
        sup_abs=float(running[-1]),
        running_sup=[float(v) for v in running],
    )
