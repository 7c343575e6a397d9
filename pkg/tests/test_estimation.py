import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misozf.channel_model import (
    ChannelCovariance,
    SteeringParams,
    UmiModelParams,
    build_scaled_identity,
    build_umi_covariance,
    factorize,
    sample_channels,
    steering_vector,
)
from misozf.errors import DimensionMismatch, SingularPilotGram
from misozf.estimation import (
    Estimator,
    asymptotic_lmmse,
    asymptotic_ls,
    estimate_lmmse,
    estimate_ls,
    genie,
    mse_closed_form_lmmse,
    mse_closed_form_ls,
)
from misozf.training import PilotMatrix, TrainingObservation, make_pilot_matrix, observe

S2 = 1 / math.sqrt(2)


def _pilots(matrix):
    return PilotMatrix(np.asarray(matrix, dtype=complex), "custom")


def _umi(M, seed):
    return build_umi_covariance(UmiModelParams(), SteeringParams(M), np.random.default_rng(seed))


# -- LS ----------------------------------------------------------------------

def test_ls_identity_pilots():
    est = estimate_ls(_pilots(np.eye(2)), TrainingObservation(np.array([1, 2]), 1.0))
    np.testing.assert_array_equal(est.h_hat, [1, 2])
    assert est.estimator is Estimator.LS


def test_ls_single_unit_pilot():
    est = estimate_ls(_pilots([[1], [0]]), TrainingObservation(np.array([3]), 1.0))
    np.testing.assert_array_equal(est.h_hat, [3, 0])


def test_ls_averaging_pilot_noiseless():
    pilots = _pilots([[S2], [S2]])
    est = estimate_ls(pilots, observe(pilots, [1, 0], 0.0))
    np.testing.assert_allclose(est.h_hat, [0.5, 0.5], atol=1e-15)


def test_ls_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        estimate_ls(_pilots(np.eye(2)), TrainingObservation(np.array([1, 2, 3]), 1.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2**32 - 1))
def test_noiseless_ls_equals_projection(T, seed):
    rng = np.random.default_rng(seed)
    pilots = make_pilot_matrix(32, T, "random_semi_unitary", rng)
    h = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    a = estimate_ls(pilots, observe(pilots, h, 0.0)).h_hat
    b = asymptotic_ls(pilots, h).h_hat
    assert np.linalg.norm(a - b) <= 1e-12 * np.linalg.norm(b)


# -- asymptotic LS -------------------------------------------------------------

def test_asymptotic_ls_full_pilots_returns_channel():
    rng = np.random.default_rng(0)
    h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    np.testing.assert_allclose(asymptotic_ls(make_pilot_matrix(8, 8), h).h_hat, h, atol=1e-13)


def test_asymptotic_ls_orthogonal_channel_vanishes():
    pilots = make_pilot_matrix(4, 2, "identity_subset")
    np.testing.assert_array_equal(asymptotic_ls(pilots, [0, 0, 1, 1j]).h_hat, np.zeros(4))


def test_asymptotic_ls_averaging_pilot():
    np.testing.assert_allclose(asymptotic_ls(_pilots([[S2], [S2]]), [1, 0]).h_hat, [0.5, 0.5], atol=1e-15)


# -- LMMSE ---------------------------------------------------------------------

def test_lmmse_identity_prior_halves():
    est = estimate_lmmse(_pilots(np.eye(2)), TrainingObservation(np.array([2, 0]), 1.0), build_scaled_identity(1.0, 2), 1.0)
    np.testing.assert_allclose(est.h_hat, [1, 0], atol=1e-15)


@pytest.mark.parametrize("c, sigma2", [(1.0, 1.0), (2.5, 0.3), (0.1, 10.0), (7.0, 1e-6)])
def test_lmmse_scaled_identity_is_scaled_ls(c, sigma2):
    rng = np.random.default_rng(1)
    pilots = make_pilot_matrix(16, 6)
    y = TrainingObservation(rng.standard_normal(6) + 1j * rng.standard_normal(6), sigma2)
    ls = estimate_ls(pilots, y).h_hat
    lm = estimate_lmmse(pilots, y, build_scaled_identity(c, 16), sigma2).h_hat
    assert np.abs(lm - c / (c + sigma2) * ls).max() <= 1e-12 * np.abs(ls).max()


def test_lmmse_vanishing_prior_returns_mean():
    mu = np.array([5.0, 0.0])
    cov = ChannelCovariance(1e-14 * np.eye(2), mean=mu)
    est = estimate_lmmse(_pilots(np.eye(2)), TrainingObservation(np.array([-3.0, 9.0]), 1.0), cov, 1.0)
    np.testing.assert_allclose(est.h_hat, mu, atol=1e-12)


def test_lmmse_requires_positive_noise():
    with pytest.raises(ValueError):
        estimate_lmmse(_pilots(np.eye(2)), TrainingObservation(np.zeros(2), 0.0), build_scaled_identity(1.0, 2), 0.0)


def test_lmmse_covariance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        estimate_lmmse(_pilots(np.eye(2)), TrainingObservation(np.zeros(2), 1.0), build_scaled_identity(1.0, 3), 1.0)


def test_lmmse_batched_matches_columnwise():
    rng = np.random.default_rng(2)
    pilots = make_pilot_matrix(16, 8)
    cov = _umi(16, 3)
    Y = rng.standard_normal((8, 5)) + 1j * rng.standard_normal((8, 5))
    batch = estimate_lmmse(pilots, TrainingObservation(Y, 0.1), cov, 0.1).h_hat
    for k in range(5):
        col = estimate_lmmse(pilots, TrainingObservation(Y[:, k], 0.1), cov, 0.1).h_hat
        np.testing.assert_allclose(batch[:, k], col, atol=1e-12)


# -- asymptotic LMMSE ------------------------------------------------------------

def test_asymptotic_lmmse_identity_prior_is_projection():
    rng = np.random.default_rng(4)
    pilots = make_pilot_matrix(8, 3)
    h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    a = asymptotic_lmmse(pilots, h, build_scaled_identity(1.0, 8)).h_hat
    np.testing.assert_allclose(a, asymptotic_ls(pilots, h).h_hat, atol=1e-13)


def test_asymptotic_lmmse_full_pilots_full_rank():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    cov = ChannelCovariance(A @ A.conj().T)
    h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    np.testing.assert_allclose(asymptotic_lmmse(make_pilot_matrix(6, 6), h, cov).h_hat, h, atol=1e-10)


def test_asymptotic_lmmse_rank_one_output_along_steering():
    a = steering_vector(0.35, SteeringParams(8))
    cov = ChannelCovariance(np.outer(a, a.conj()))
    rng = np.random.default_rng(6)
    h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    out = asymptotic_lmmse(make_pilot_matrix(8, 3), h, cov).h_hat
    cos2 = abs(np.vdot(a, out)) ** 2 / (np.vdot(a, a).real * np.vdot(out, out).real)
    assert cos2 == pytest.approx(1.0, abs=1e-10)


def test_asymptotic_lmmse_invisible_covariance():
    pilots = make_pilot_matrix(4, 2, "identity_subset")
    cov = ChannelCovariance(np.diag([0.0, 0.0, 1.0, 1.0]))
    with pytest.raises(SingularPilotGram):
        asymptotic_lmmse(pilots, [0, 0, 1, 1], cov)


def test_asymptotic_lmmse_strict_rejects_singular_gram():
    pilots = make_pilot_matrix(4, 2, "identity_subset")
    cov = ChannelCovariance(np.diag([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(SingularPilotGram):
        asymptotic_lmmse(pilots, [1, 0, 0, 0], cov, strict=True)
    # the pseudo-inverse limit is still defined
    np.testing.assert_allclose(asymptotic_lmmse(pilots, [1, 0, 0, 0], cov).h_hat, [1, 0, 0, 0], atol=1e-15)


def test_asymptotic_lmmse_is_limit_on_singular_gram():
    # rank-deficient Gram: the pseudo-inverse form must match sigma2 -> 0
    a = steering_vector(0.2, SteeringParams(8))
    b = steering_vector(-0.6, SteeringParams(8))
    cov = ChannelCovariance(np.outer(a, a.conj()) + np.outer(b, b.conj()))
    pilots = make_pilot_matrix(8, 4)
    rng = np.random.default_rng(7)
    h = sample_channels(factorize(cov), cov.mean, rng, 1)[:, 0]
    limit = asymptotic_lmmse(pilots, h, cov).h_hat
    y = observe(pilots, h, 0.0)
    near = estimate_lmmse(pilots, TrainingObservation(y.y, 1e-10), cov, 1e-10).h_hat
    assert np.linalg.norm(limit - near) <= 1e-4 * np.linalg.norm(limit)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lmmse_near_noiseless_matches_limit(seed):
    rng = np.random.default_rng(seed)
    M, T = 8, 4
    pilots = make_pilot_matrix(M, T, "random_semi_unitary", rng)
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    cov = ChannelCovariance(A @ A.conj().T / M, mean=rng.standard_normal(M) + 0j)
    G = pilots.H @ cov.matrix @ pilots.matrix
    if np.linalg.cond(G) >= 1e6:
        return
    h = sample_channels(factorize(cov), cov.mean, rng, 1)[:, 0]
    y = observe(pilots, h, 0.0)
    a = asymptotic_lmmse(pilots, h, cov).h_hat
    b = estimate_lmmse(pilots, TrainingObservation(y.y, 1e-10), cov, 1e-10).h_hat
    assert np.linalg.norm(a - b) <= 1e-4 * np.linalg.norm(a)


def test_genie_passthrough():
    h = np.array([1 + 2j, -1j])
    est = genie(h)
    np.testing.assert_array_equal(est.h_hat, h)
    assert est.estimator is Estimator.GENIE


def test_estimate_rejects_nonfinite():
    with pytest.raises(ValueError):
        genie([np.nan, 1])


# -- closed-form MSE ---------------------------------------------------------------

def test_ls_mse_full_pilots_unit_noise():
    assert mse_closed_form_ls(make_pilot_matrix(32, 32), _umi(32, 0), 1.0) == pytest.approx(32.0, abs=1e-9)


def test_ls_mse_full_pilots_40db():
    assert mse_closed_form_ls(make_pilot_matrix(32, 32), _umi(32, 0), 1e-4) == pytest.approx(0.0032, abs=1e-12)


def test_ls_mse_no_projection_loss():
    pilots = make_pilot_matrix(6, 2, "identity_subset")
    a = np.array([1, 1j, 0, 0, 0, 0])
    assert mse_closed_form_ls(pilots, ChannelCovariance(np.outer(a, a.conj())), 0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("sigma2", [1e-3, 0.5, 1.0, 20.0])
def test_lmmse_mse_identity_prior(sigma2):
    M = 12
    mse = mse_closed_form_lmmse(make_pilot_matrix(M, M), build_scaled_identity(1.0, M), sigma2)
    assert mse == pytest.approx(M * sigma2 / (1 + sigma2), rel=1e-12)


def test_lmmse_mse_large_noise_tends_to_trace():
    cov = _umi(16, 1)
    assert mse_closed_form_lmmse(make_pilot_matrix(16, 8), cov, 1e12) == pytest.approx(16.0, rel=1e-9)


@pytest.mark.parametrize("T, sigma2", [(32, 1.0), (16, 0.1), (8, 1.0), (16, 1e-3)])
def test_ls_mse_matches_monte_carlo(T, sigma2):
    rng = np.random.default_rng(100 + T)
    cov = _umi(32, T)
    pilots = make_pilot_matrix(32, T)
    H = sample_channels(factorize(cov), cov.mean, rng, 2000)
    err = H - estimate_ls(pilots, observe(pilots, H, sigma2, rng)).h_hat
    mc = np.mean(np.sum(np.abs(err) ** 2, axis=0))
    assert mc == pytest.approx(mse_closed_form_ls(pilots, cov, sigma2), rel=0.05)


@pytest.mark.parametrize("T, sigma2", [(32, 1.0), (16, 0.1), (8, 1.0), (16, 1e-3)])
def test_lmmse_mse_matches_monte_carlo(T, sigma2):
    rng = np.random.default_rng(200 + T)
    cov = _umi(32, T + 1)
    pilots = make_pilot_matrix(32, T)
    H = sample_channels(factorize(cov), cov.mean, rng, 2000)
    err = H - estimate_lmmse(pilots, observe(pilots, H, sigma2, rng), cov, sigma2).h_hat
    mc = np.mean(np.sum(np.abs(err) ** 2, axis=0))
    assert mc == pytest.approx(mse_closed_form_lmmse(pilots, cov, sigma2), rel=0.05)


def test_lmmse_orthogonality():
    rng = np.random.default_rng(8)
    M, T, N, sigma2 = 8, 4, 10_000, 0.5
    cov = ChannelCovariance(_umi(M, 9).matrix, mean=np.linspace(0, 1, M) + 0j)
    pilots = make_pilot_matrix(M, T)
    H = sample_channels(factorize(cov), cov.mean, rng, N)
    obs = observe(pilots, H, sigma2, rng)
    E = H - estimate_lmmse(pilots, obs, cov, sigma2).h_hat
    # per-sample outer products e y^H, entry (m, t)
    prod = E[:, None, :] * obs.y.conj()[None, :, :]
    mean = prod.mean(axis=2)
    se = np.sqrt(np.mean(np.abs(prod - mean[:, :, None]) ** 2, axis=2) / N)
    assert np.all(np.abs(mean) < 5 * se)
