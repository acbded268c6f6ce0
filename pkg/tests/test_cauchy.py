import numpy as np
import pytest

from greenwind import (CauchyParams, cauchy_cf, fit_cauchy, sample_cauchy,
                       sample_cauchy_process, truncated_mean_position,
                       young_integral)
from greenwind.cauchy import CauchyProcessPath


def test_degenerate_scale_is_constant():
    s = sample_cauchy(CauchyParams(3.0, 0.0), 50, seed=1)
    assert np.all(s == 3.0)


def test_standard_median_clt():
    n = 100_000
    s = sample_cauchy(CauchyParams(0.0, 1.0), n, seed=2)
    assert abs(np.median(s)) < 3 * (np.pi / 2) / np.sqrt(n)


def test_empirical_cf_matches():
    n = 100_000
    s = sample_cauchy(CauchyParams(0.0, 1.0), n, seed=3)
    emp = np.mean(np.exp(1j * s))
    assert abs(emp - np.exp(-1.0)) < 3.0 / np.sqrt(n)


def test_cauchy_cf_values():
    assert cauchy_cf(CauchyParams(0, 1), 0.0) == 1.0
    assert cauchy_cf(CauchyParams(0, 1), 1.0) == pytest.approx(np.exp(-1))
    assert cauchy_cf(CauchyParams(0, 1), -1.0) == pytest.approx(np.exp(-1))
    v = cauchy_cf(CauchyParams(2, 0), 0.7)
    assert abs(v) == pytest.approx(1.0)
    assert v == pytest.approx(np.exp(2j * 0.7))


def test_cf_modulus_bound():
    alphas = np.linspace(-3, 3, 13)
    vals = cauchy_cf(CauchyParams(1.0, 0.5), alphas)
    assert np.all(np.abs(vals) <= 1.0 + 1e-15)
    assert np.all(np.abs(vals[alphas != 0]) < 1.0)


def test_fit_recovery():
    s = sample_cauchy(CauchyParams(0.0, 1.0), 100_000, seed=4)
    fit = fit_cauchy(s)
    assert abs(fit.position) < 0.02
    assert abs(fit.scale - 1.0) < 0.02


def test_fit_constant_and_small_n():
    fit = fit_cauchy(np.full(200, 5.0))
    assert fit.position == 5.0 and fit.scale == 0.0
    with pytest.raises(ValueError):
        fit_cauchy(np.zeros(50))


def test_fit_affine_equivariance():
    s = sample_cauchy(CauchyParams(0.3, 0.7), 10_000, seed=5)
    base = fit_cauchy(s)
    scaled = fit_cauchy(-2.0 * s + 1.0)
    assert scaled.position == pytest.approx(-2.0 * base.position + 1.0, abs=1e-12)
    assert scaled.scale == pytest.approx(2.0 * base.scale, abs=1e-12)


def test_truncated_mean_symmetric():
    s = sample_cauchy(CauchyParams(0.0, 1.0), 1_000_000, seed=6)
    vals, diag = truncated_mean_position(s, [10.0, 30.0, 100.0])
    assert abs(vals[-1]) <= 0.05
    assert diag["stabilized"]


def test_truncated_mean_constant():
    vals, _ = truncated_mean_position(np.full(1000, 3.0), [5.0, 10.0])
    assert np.all(vals == 3.0)


def test_truncated_mean_shifted():
    s = sample_cauchy(CauchyParams(1.0, 1.0), 1_000_000, seed=7)
    vals, _ = truncated_mean_position(s, [10.0, 50.0, 200.0])
    assert abs(vals[-1] - 1.0) < 0.1


def test_process_stability():
    # Gamma_1 over many replicas fits Cauchy(0, 1)
    times = np.linspace(0, 1, 9)
    ends = np.array([sample_cauchy_process(times, seed=8, replica=r).values[-1]
                     for r in range(100_000)])
    fit = fit_cauchy(ends)
    assert abs(fit.position) < 0.03
    assert abs(fit.scale - 1.0) < 0.03


def test_process_refinement_consistency():
    reps = 20_000
    coarse = np.array([sample_cauchy_process(np.linspace(0, 1, 129), 9,
                                             replica=r).values[-1]
                       for r in range(reps)])
    fine = np.array([sample_cauchy_process(np.linspace(0, 1, 1025), 10,
                                           replica=r).values[-1]
                     for r in range(reps)])
    fc, ff = fit_cauchy(coarse), fit_cauchy(fine)
    se = 3 * (np.pi / 2) / np.sqrt(reps)
    assert abs(fc.position - ff.position) < 2 * se
    assert abs(fc.scale - ff.scale) < 2 * se


def test_process_validation():
    with pytest.raises(ValueError):
        sample_cauchy_process([0.5, 1.0], seed=1)
    with pytest.raises(ValueError):
        sample_cauchy_process([0.0, 0.5, 0.5], seed=1)
    g = sample_cauchy_process(np.linspace(0, 1, 17), seed=1)
    assert g.values[0] == 0.0


def test_young_integral_telescoping():
    g = sample_cauchy_process(np.linspace(0, 1, 65), seed=11)
    assert young_integral(np.ones(65), g) == pytest.approx(g.values[-1], abs=1e-12)
    assert young_integral(np.full(65, 2.5), g) == pytest.approx(2.5 * g.values[-1])
    with pytest.raises(ValueError):
        young_integral(np.ones(32), g)


def test_young_integral_conditional_law():
    # with the integrand frozen, the Young integral over Gamma replicas is a
    # centered Cauchy with scale sum |h_i| dt_i
    times = np.linspace(0, 1, 33)
    h = np.sin(3 * times) + 0.5
    target = float(np.sum(np.abs(h[:-1]) * np.diff(times)))
    vals = np.array([young_integral(h, sample_cauchy_process(times, 12, replica=r))
                     for r in range(10_000)])
    fit = fit_cauchy(vals)
    assert abs(fit.position) < 0.05
    assert abs(fit.scale - target) < 0.05
