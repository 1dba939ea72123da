"""Tests for the Monte Carlo harness: estimators, slope fits, reproducibility."""
import math

import numpy as np
import pytest

from ldboot.errors import (ConfigError, DegenerateEstimatorError,
                           InsufficientDataError)
from ldboot.measures import FiniteMeasure, relative_entropy
from ldboot.montecarlo import (LdpExperiment, batch_conditional_masses,
                               composition_counts, fit_rate_slope,
                               run_conditional_ldp, run_unconditional_ldp,
                               tilted_efron_estimator, tv_ball_infimum)
from ldboot.rates import rate_efron
from ldboot.samplers import SchemeConfig, stream

EFRON = SchemeConfig(variant="m_out_of_n", lam=1.0)


def make_exp(**kwargs):
    base = dict(scheme=EFRON, observations_mode="composition",
                observations_mass=(0.5, 0.5), target=(0.8, 0.2), epsilon=0.05,
                n_values=(50, 100), replications=1000, estimator="direct", seed=0)
    base.update(kwargs)
    return LdpExperiment(**base)


# -----------------------------------------------------------------------------
# configuration
# -----------------------------------------------------------------------------
def test_composition_counts():
    assert composition_counts((0.5, 0.5), 10).tolist() == [5, 5]
    with pytest.raises(ConfigError):
        composition_counts((1 / 3, 2 / 3), 10)


def test_experiment_validation():
    with pytest.raises(ConfigError):
        make_exp(epsilon=1.5)
    with pytest.raises(ConfigError):
        make_exp(n_values=(100, 50))
    with pytest.raises(ConfigError):
        make_exp(replications=10)
    with pytest.raises(ConfigError):
        make_exp(scheme=SchemeConfig(variant="delete_h", alpha=0.5), estimator="tilted")
    with pytest.raises(ConfigError):
        make_exp(speed="m_of_n", scheme=SchemeConfig(variant="delete_h", alpha=0.5))


def test_experiment_json_round_trip():
    exp = make_exp()
    clone = LdpExperiment.from_doc(exp.to_doc())
    assert clone == exp
    with pytest.raises(ConfigError):
        LdpExperiment.from_doc({**exp.to_doc(), "bogus": 1})


# -----------------------------------------------------------------------------
# slope fitting
# -----------------------------------------------------------------------------
def test_fit_slope_exact_exponential():
    c = 0.37
    pts = [(n, -c * n) for n in (50, 100, 200, 400)]
    slope, se = fit_rate_slope(pts)
    assert abs(slope - c) <= 1e-12


def test_fit_slope_intercept_absorbs_prefactor():
    c, A = 0.2, 10.0
    pts = [(n, math.log(A) - c * n) for n in (50, 100, 200)]
    slope, _ = fit_rate_slope(pts)
    assert abs(slope - c) <= 1e-12


def test_fit_slope_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_rate_slope([(50, -1.0), (100, -2.0)])
    with pytest.raises(InsufficientDataError):
        fit_rate_slope([(50, -1.0), (100, None), (200, -2.0)])


def test_fit_slope_noise_calibration():
    # with known per-point noise and inverse-variance weights the z-score
    # of the slope is standard normal; 2-sigma coverage over 1000 trials
    rng = np.random.default_rng(2024)
    c = 0.2
    ns = np.array([50.0, 100.0, 200.0, 400.0])
    sds = np.array([0.05, 0.08, 0.12, 0.2])
    inside = 0
    for _ in range(1000):
        y = -c * ns + rng.normal(0.0, sds)
        slope, se = fit_rate_slope(list(zip(ns, y)), weights=1.0 / sds ** 2)
        if abs(slope - c) <= 2.0 * se:
            inside += 1
    assert inside >= 950


# -----------------------------------------------------------------------------
# estimators
# -----------------------------------------------------------------------------
def test_direct_estimator_binomial_consistency():
    exp = make_exp(target=(0.5, 0.5), epsilon=0.1, replications=20_000,
                   n_values=(50, 100, 200))
    est = run_conditional_ldp(exp)
    for e in est.per_n:
        assert 0.0 <= e.p_hat <= 1.0
        want_se = math.sqrt(e.p_hat * (1 - e.p_hat) / exp.replications)
        assert math.isclose(e.stderr, want_se, rel_tol=1e-12)


def test_trivial_target_slope_is_zero():
    exp = make_exp(target=(0.5, 0.5), epsilon=0.4, replications=20_000,
                   n_values=(50, 100, 200))
    est = run_conditional_ldp(exp)
    assert all(e.p_hat == 1.0 for e in est.per_n)
    assert abs(est.fitted_slope) < 2.0 * est.slope_stderr


def test_tilted_with_composition_tilt_is_direct():
    n = m = 40
    counts = composition_counts((0.5, 0.5), n)
    nu = FiniteMeasure([0.6, 0.4])
    p_t, _ = tilted_efron_estimator(n, m, counts, nu, 0.1, 20_000, stream(3, 0),
                                    tilt=FiniteMeasure([0.5, 0.5]))
    rng = stream(3, 0)
    g = rng.multinomial(m, np.array([0.5, 0.5]), size=20_000)
    tv = 0.5 * np.abs(g / m - nu.mass).sum(axis=1)
    assert p_t == (tv < 0.1).mean()


def test_tilted_unbiased_against_direct():
    n = m = 50
    counts = composition_counts((0.5, 0.5), n)
    nu = FiniteMeasure([0.6, 0.4])
    for seed in range(50):
        p_t, se_t = tilted_efron_estimator(n, m, counts, nu, 0.1, 5000,
                                           stream(seed, 0))
        p_d, se_d = tilted_efron_estimator(n, m, counts, nu, 0.1, 5000,
                                           stream(seed, 1),
                                           tilt=FiniteMeasure([0.5, 0.5]))
        assert abs(p_t - p_d) <= 3.0 * math.hypot(se_t, se_d)


def test_tilted_rare_event_small_relative_error():
    n = m = 400
    counts = composition_counts((0.5, 0.5), n)
    nu = FiniteMeasure([0.8, 0.2])
    p, se = tilted_efron_estimator(n, m, counts, nu, 0.05, 100_000, stream(5, 0))
    assert p < 1e-20
    assert se / p < 0.10


def test_tilted_degenerate_tilt_rejected():
    counts = composition_counts((0.5, 0.5), 40)
    with pytest.raises(DegenerateEstimatorError):
        tilted_efron_estimator(40, 40, counts, FiniteMeasure([0.6, 0.4]), 0.05,
                               1000, stream(0, 0), tilt=FiniteMeasure([1.0, 0.0]))


def test_epsilon_monotonicity_coupled():
    counts = composition_counts((0.5, 0.5), 60)
    masses = batch_conditional_masses(EFRON, counts, 60, 20_000, stream(8, 0))
    tv = 0.5 * np.abs(masses - np.array([0.7, 0.3])).sum(axis=1)
    hits = [(tv < eps).sum() for eps in (0.02, 0.05, 0.1, 0.2)]
    assert all(a <= b for a, b in zip(hits, hits[1:]))


# -----------------------------------------------------------------------------
# runners
# -----------------------------------------------------------------------------
def test_conditional_run_reproducible():
    exp = make_exp(replications=30_000, estimator="tilted",
                   n_values=(50, 100, 200))
    a = run_conditional_ldp(exp)
    b = run_conditional_ldp(exp)
    assert a.to_doc() == b.to_doc()


def test_unconditional_run_reproducible():
    exp = make_exp(observations_mode="iid", target=(0.6, 0.4), epsilon=0.1,
                   replications=5000, n_values=(20, 40))
    a = run_unconditional_ldp(exp)
    b = run_unconditional_ldp(exp)
    assert a.to_doc() == b.to_doc()


def test_workers_do_not_change_results():
    exp = make_exp(replications=60_000, estimator="tilted", n_values=(50, 100))
    serial = run_conditional_ldp(exp, workers=1)
    parallel = run_conditional_ldp(exp, workers=2)
    assert serial.to_doc() == parallel.to_doc()


def test_zero_hits_marked_missing():
    exp = make_exp(target=(0.98, 0.02), epsilon=0.01, replications=1000,
                   n_values=(50, 100))
    est = run_conditional_ldp(exp)
    assert any(e.missing for e in est.per_n)
    missing = [e for e in est.per_n if e.missing]
    assert all("tilted" in e.note for e in missing)
    assert math.isnan(est.fitted_slope)


def test_conditional_rejects_iid_mode():
    exp = make_exp(observations_mode="iid")
    with pytest.raises(ConfigError):
        run_conditional_ldp(exp)
    with pytest.raises(ConfigError):
        run_unconditional_ldp(make_exp())


def test_composition_must_scale():
    exp = make_exp(observations_mass=(1 / 3, 2 / 3), n_values=(50, 100))
    with pytest.raises(ConfigError):
        run_conditional_ldp(exp)


# -----------------------------------------------------------------------------
# ball infimum oracle
# -----------------------------------------------------------------------------
def test_ball_infimum_center_minimizer():
    mu = FiniteMeasure([0.5, 0.5])
    val, point = tv_ball_infimum(lambda x: rate_efron(x, mu, 1.0), mu, 0.1)
    assert abs(val) <= 1e-12
    assert abs(point.mass[0] - 0.5) <= 1e-6


def test_ball_infimum_boundary_value():
    mu = FiniteMeasure([0.5, 0.5])
    nu = FiniteMeasure([0.8, 0.2])
    val, point = tv_ball_infimum(lambda x: relative_entropy(x, mu), nu, 0.05)
    want = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
    assert math.isclose(val, want, rel_tol=1e-9)
    assert math.isclose(point.mass[0], 0.75, abs_tol=1e-9)
