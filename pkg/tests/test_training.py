import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misozf.errors import DimensionMismatch, InvalidDimensions, NonPositivePower
from misozf.training import PILOT_KINDS, effective_noise_variance, make_pilot_matrix, observe


def test_dft_pilots_two_point():
    Phi = make_pilot_matrix(2, 2, "dft_subset").matrix
    np.testing.assert_allclose(Phi, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)


def test_identity_pilots():
    Phi = make_pilot_matrix(4, 2, "identity_subset").matrix
    np.testing.assert_array_equal(Phi, np.eye(4)[:, :2])


@pytest.mark.parametrize("kind", PILOT_KINDS)
def test_semi_unitary_32_16(kind):
    Phi = make_pilot_matrix(32, 16, kind, np.random.default_rng(0)).matrix
    assert np.abs(Phi.conj().T @ Phi - np.eye(16)).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40).flatmap(lambda M: st.tuples(st.just(M), st.integers(1, M))),
       st.sampled_from(PILOT_KINDS), st.integers(0, 2**32 - 1))
def test_pilot_projector_properties(dims, kind, seed):
    M, T = dims
    pilots = make_pilot_matrix(M, T, kind, np.random.default_rng(seed))
    Phi = pilots.matrix
    assert np.abs(Phi.conj().T @ Phi - np.eye(T)).max() < 1e-10
    Pr = pilots.projector()
    assert np.abs(Pr @ Pr - Pr).max() < 1e-10
    assert np.abs(Pr - Pr.conj().T).max() < 1e-10
    if T < M:
        assert np.abs(Pr - np.eye(M)).max() > 0.1


@pytest.mark.parametrize("kind", ["dft_subset", "identity_subset"])
def test_full_pilots_resolve_identity(kind):
    Pr = make_pilot_matrix(12, 12, kind).projector()
    assert np.abs(Pr - np.eye(12)).max() < 1e-10


@pytest.mark.parametrize("M, T", [(4, 5), (0, 0), (3, 0)])
def test_invalid_pilot_dimensions(M, T):
    with pytest.raises(InvalidDimensions):
        make_pilot_matrix(M, T)


def test_random_pilots_need_rng():
    with pytest.raises(ValueError):
        make_pilot_matrix(4, 2, "random_semi_unitary")


# -- noise variance ----------------------------------------------------------

def test_noise_variance_without_feedback():
    assert effective_noise_variance(1.0) == 1.0


def test_noise_variance_additive_feedback():
    assert effective_noise_variance(10.0, 10.0, model="additive") == pytest.approx(0.2)


def test_noise_variance_additive_limit():
    assert effective_noise_variance(1e15, 10.0, model="additive") == pytest.approx(0.1)


def test_noise_variance_scaled_feedback():
    assert effective_noise_variance(10.0, 10.0, model="scaled") == pytest.approx(0.11)
    # vanishes with the DL power
    assert effective_noise_variance(1e15, 10.0, model="scaled") == pytest.approx(1.1e-15)


@pytest.mark.parametrize("p_dl, p_fb", [(0.0, None), (-1.0, None), (1.0, 0.0)])
def test_noise_variance_rejects_nonpositive(p_dl, p_fb):
    with pytest.raises(NonPositivePower):
        effective_noise_variance(p_dl, p_fb)


# -- observations ------------------------------------------------------------

def test_observe_noiseless_identity():
    pilots = make_pilot_matrix(2, 2, "identity_subset")
    obs = observe(pilots, [1, 2j], 0.0)
    np.testing.assert_array_equal(obs.y, [1, 2j])


def test_observe_noiseless_single_pilot():
    pilots = make_pilot_matrix(2, 1, "dft_subset")
    obs = observe(pilots, [1, 0], 0.0)
    np.testing.assert_allclose(obs.y, [1 / math.sqrt(2)], atol=1e-15)


def test_observe_noiseless_consumes_no_randomness():
    pilots = make_pilot_matrix(4, 2)
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    observe(pilots, np.ones(4), 0.0, rng)
    assert rng.bit_generator.state == state


def test_observe_noise_power():
    pilots = make_pilot_matrix(8, 3)
    rng = np.random.default_rng(1)
    y = observe(pilots, np.zeros((8, 100_000)), 1.0, rng).y
    assert np.mean(np.sum(np.abs(y) ** 2, axis=0)) == pytest.approx(3.0, rel=0.03)


def test_observe_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        observe(make_pilot_matrix(4, 2), np.ones(3), 0.0)
