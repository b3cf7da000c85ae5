"""Smooth-or-nowhere-differentiable decision for alpha.

Two criteria are computed independently: Birkhoff sums of phi over periodic
orbits (any nonzero sum means nowhere differentiable) and the dynamical
variance of phi.  They must agree; a conflict is reported as an error.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PeriodicOrbit, periodic_orbits
from .ergodic import UlamDensity, variance_green_kubo
from .errors import CriteriaDisagree
from .weierstrass import SystemHandle, phi

NOWHERE_DIFFERENTIABLE = "NowhereDifferentiable"
SMOOTH = "C1plusEpsilon"


@dataclass(frozen=True)
class OrbitSumReport:
    entries: list = field(repr=False)
    max_abs_sum: float
    p_max: int

    def witness(self, tol: float) -> PeriodicOrbit | None:
        """Shortest (then canonically first) orbit whose sum exceeds ``tol``."""
        for orbit, total in self.entries:
            if abs(total) > tol:
                return orbit
        return None


@dataclass(frozen=True)
class RegularityVerdict:
    verdict: str
    witness: PeriodicOrbit | None
    sigma2: float
    orbit_tol: float
    sigma_tol: float
    max_abs_sum: float = 0.0

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "verdict": self.verdict,
            "witness_points": list(w.points) if w else None,
            "witness_period": w.period if w else None,
            "max_abs_sum": self.max_abs_sum,
            "sigma2": self.sigma2,
            "tolerances": {"orbit_tol": self.orbit_tol, "sigma_tol": self.sigma_tol},
        }


def default_p_max(degree: int) -> int:
    return 8 if degree <= 2 else 6


def orbit_sums(sys: SystemHandle, p_max: int) -> OrbitSumReport:
    """Sum of phi over one period of every orbit with period ``<= p_max``."""
    if p_max < 3:
        warnings.warn(
            "p_max < 3: period-1 and period-2 sums can vanish by symmetry even when "
            "alpha is nowhere differentiable",
            stacklevel=2,
        )
    orbits = periodic_orbits(sys.map, p_max)
    if not orbits:
        return OrbitSumReport([], 0.0, p_max)
    pts = np.concatenate([np.asarray(o.points) for o in orbits])
    vals = np.asarray(phi(sys, pts))
    entries, start = [], 0
    for o in orbits:
        entries.append((o, float(vals[start:start + o.period].sum())))
        start += o.period
    return OrbitSumReport(entries, max(abs(s) for _, s in entries), p_max)


def min_orbit_tol(sys: SystemHandle, p_max: int) -> float:
    """Smallest orbit tolerance compatible with the truncation error of phi."""
    return 10.0 * p_max * (1.0 + sys.bounds.B) * sys.policy.tol


def classify(
    sys: SystemHandle,
    rho: UlamDensity,
    p_max: int | None = None,
    orbit_tol: float = 1e-8,
    sigma_tol: float = 1e-6,
    *,
    n_max: int = 64,
    term_tol: float = 1e-10,
) -> RegularityVerdict:
    """Decide the regularity class, cross-checked against ``sigma^2(phi)``.

    Raises
    ------
    CriteriaDisagree
        if a nonzero orbit sum and a zero variance (or vice versa) are found.
    """
    if p_max is None:
        p_max = default_p_max(sys.map.degree)
    orbit_tol = max(orbit_tol, min_orbit_tol(sys, p_max))
    report = orbit_sums(sys, p_max)
    var = variance_green_kubo(sys, rho, n_max=n_max, term_tol=term_tol)
    by_orbits = report.max_abs_sum > orbit_tol
    by_variance = var.sigma2 > sigma_tol
    if by_orbits != by_variance:
        raise CriteriaDisagree(
            f"orbit sums up to period {p_max} give max |sum| = {report.max_abs_sum:.3g} "
            f"(tol {orbit_tol:.1g}) but sigma^2 = {var.sigma2:.6g} (tol {sigma_tol:.1g}); "
            "raise p_max or revisit the tolerances"
        )
    return RegularityVerdict(
        verdict=NOWHERE_DIFFERENTIABLE if by_orbits else SMOOTH,
        witness=report.witness(orbit_tol),
        sigma2=var.sigma2,
        orbit_tol=orbit_tol,
        sigma_tol=sigma_tol,
        max_abs_sum=report.max_abs_sum,
    )
