import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from gwlab.clt import (
    EmpiricalCDF,
    birkhoff_length,
    clt_experiment,
    increment_samples,
    ks_statistic,
    lil_normaliser,
    lil_trace,
    normal_cdf,
)
from gwlab.ergodic import LyapunovResult, invariant_density, lyapunov, variance_green_kubo
from gwlab.errors import ZeroVariance
from gwlab.presets import preset
from gwlab.weierstrass import (
    birkhoff_sum_phi,
    increment,
    make_system,
    residual_ratio,
    stopping_time,
)


@pytest.fixture(scope="module")
def classic():
    sys = make_system(*preset("classic"))
    rho = invariant_density(sys.map, 2**12)
    return sys, rho, variance_green_kubo(sys, rho), lyapunov(sys.map, rho)


@pytest.fixture(scope="module")
def smooth():
    sys = make_system(*preset("smooth"))
    rho = invariant_density(sys.map, 2**12)
    return sys, rho, variance_green_kubo(sys, rho), lyapunov(sys.map, rho)


def test_normal_cdf():
    assert normal_cdf(0.0) == 0.5
    dens = lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
    val = 0.5 + quad(dens, 0, 1.959964)[0]
    assert normal_cdf(1.959964) == pytest.approx(val, abs=1e-12)
    assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert normal_cdf(-8.0) <= 1e-14
    assert np.allclose(normal_cdf(np.array([-1.0, 1.0])), stats.norm.cdf([-1.0, 1.0]))


def test_ks_examples():
    assert ks_statistic([0.0], normal_cdf) == 0.5
    n = 1000
    q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_statistic(q, normal_cdf) == pytest.approx(0.5 / n, abs=1e-12)
    x = np.random.default_rng(0).random(10**6)
    assert ks_statistic(x, lambda t: np.clip(t, 0, 1)) <= 0.002
    with pytest.raises(ValueError):
        ks_statistic([], normal_cdf)


def test_ks_matches_scipy():
    rng = np.random.default_rng(1)
    y = rng.standard_normal(5000) * 1.1 + 0.05
    assert ks_statistic(y, normal_cdf) == pytest.approx(stats.kstest(y, "norm").statistic, abs=1e-12)
    z = rng.standard_normal(3000)
    two = ks_statistic(y, EmpiricalCDF.from_samples(z))
    assert two == pytest.approx(stats.ks_2samp(y, z).statistic, abs=1e-12)


def test_empirical_cdf_right_continuous():
    F = EmpiricalCDF.from_samples([0.3, 0.1, 0.2, 0.2])
    assert F(0.2) == 0.75 and F(0.0999) == 0.0 and F(0.3) == 1.0


def test_increment_normalisation(classic):
    sys, _, gk, lyap = classic
    x = np.array([0.1, 0.7])
    h = 2.0**-10
    y = increment_samples(sys, gk, lyap, x, h)
    scale = gk.sigma * lyap.ell * h * math.sqrt(-math.log(h))
    assert np.allclose(y, increment(sys, x, h) / scale)
    with pytest.raises(ValueError):
        increment_samples(sys, gk, lyap, x, 0.5)


def test_birkhoff_length():
    lyap = LyapunovResult(L=math.log(2), ell=1 / math.sqrt(math.log(2)))
    assert birkhoff_length(2.0**-20, lyap) == 20


def test_clt_small_run_and_worker_invariance(classic):
    sys, rho, gk, lyap = classic
    a = clt_experiment(sys, rho, gk, lyap, [2.0**-8, 2.0**-12], n_samples=5000, seed=3, block=1024)
    b = clt_experiment(sys, rho, gk, lyap, [2.0**-8, 2.0**-12], n_samples=5000, seed=3, block=1024,
                       workers=3)
    assert a == b
    assert [r.n_samples for r in a] == [5000, 5000]
    assert all(0 < r.ks_vs_normal < 0.2 for r in a)
    assert a[1].birkhoff_length == 12


def test_clt_and_lil_reject_zero_variance(smooth):
    sys, rho, gk, lyap = smooth
    with pytest.raises(ZeroVariance, match=r"sigma\(phi\) != 0"):
        clt_experiment(sys, rho, gk, lyap, [2.0**-8], n_samples=1000)
    with pytest.raises(ZeroVariance):
        lil_trace(sys, gk, lyap, 0.3)


def test_lil_normaliser():
    h = 2.0**-20
    lh = 20 * math.log(2)
    assert lil_normaliser(h) == pytest.approx(h * math.sqrt(2 * lh * math.log(math.log(lh))))


def test_lil_trace(classic):
    sys, _, gk, lyap = classic
    tr = lil_trace(sys, gk, lyap, 0.3, 4, 12)
    assert [k for k, _, _ in tr.entries] == list(range(4, 13))
    assert tr.running_sup == sorted(tr.running_sup)
    assert tr.sup_abs == max(abs(r) for _, _, r in tr.entries)
    _, h, r = tr.entries[3]
    assert r == pytest.approx(increment(sys, 0.3, h) / lil_normaliser(h))
    with pytest.raises(ValueError):
        lil_trace(sys, gk, lyap, 0.3, 3, 12)


def test_increment_decomposition_identity(classic):
    # y = S_N phi / (sigma l sqrt(-log h)) + residual_ratio / (sigma l sqrt(-log h))
    sys, _, gk, lyap = classic
    x = np.random.default_rng(4).random(200)
    h = 2.0**-16
    c = gk.sigma * lyap.ell * math.sqrt(-math.log(h))
    s = birkhoff_sum_phi(sys, x, stopping_time(sys, x, h))
    rhs = s / c + residual_ratio(sys, x, h) / c
    assert np.allclose(increment_samples(sys, gk, lyap, x, h), rhs, rtol=0, atol=1e-9)
