import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_scenario
from ricianmiso import (
    PathlossParams,
    Scenario,
    UserGeometry,
    exponential_correlation,
    hermitian_sqrt,
    pathloss,
    sample_channel,
    sample_positions,
    steering_vector,
)
from ricianmiso.channel import sqrt_from_decomposition
from ricianmiso.errors import DecompositionError, ParameterError
from ricianmiso.streams import RandomStreams


def test_exponential_correlation_entries():
    th = exponential_correlation(0.5, 4)
    assert th[0, 3] == 0.125 and th[2, 1] == 0.5
    np.testing.assert_array_equal(exponential_correlation(0.0, 5), np.eye(5))


@pytest.mark.parametrize("nu", [-0.1, 1.0, 1.5])
def test_exponential_correlation_rejects_nu(nu):
    with pytest.raises(ParameterError):
        exponential_correlation(nu, 4)


@settings(max_examples=30, deadline=None)
@given(nu=st.floats(0, 0.99), N=st.integers(1, 40))
def test_hermitian_sqrt_reconstructs(nu, N):
    th = exponential_correlation(nu, N)
    U, d = hermitian_sqrt(th)
    assert np.all(np.diff(d) <= 0) and np.all(d >= 0)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(N), atol=1e-10)
    S = sqrt_from_decomposition(U, d)
    np.testing.assert_allclose(S @ S, th, atol=1e-10)
    np.testing.assert_allclose(S, S.conj().T, atol=1e-12)


def test_hermitian_sqrt_is_reproducible():
    th = exponential_correlation(0.9, 32)
    a = hermitian_sqrt(th)
    b = hermitian_sqrt(th.copy())
    np.testing.assert_array_equal(a[0], b[0])


def test_hermitian_sqrt_rejects_bad_input():
    with pytest.raises(DecompositionError):
        hermitian_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DecompositionError):
        hermitian_sqrt(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_steering_vector_has_norm_N():
    z = steering_vector(0.7, 16)
    assert z[0] == 1
    assert np.isclose(np.vdot(z, z).real, 16)


def test_pathloss_values():
    p = PathlossParams()
    assert pathloss(25.0, p) == pytest.approx(p.ref_gain)
    near, far = pathloss(np.array([30.0, 240.0]), p)
    assert near > far
    with pytest.raises(ParameterError):
        pathloss(0.0, p)


def test_pathloss_params_validation():
    with pytest.raises(ParameterError):
        PathlossParams(exponent=2.0)
    with pytest.raises(ParameterError):
        PathlossParams(cutoff=300.0)


def test_positions_inside_annulus():
    p = PathlossParams()
    users = sample_positions(2000, p, np.random.default_rng(0))
    x = np.array([u.distance for u in users])
    assert x.min() >= p.cutoff and x.max() <= p.radius
    # area-uniform radius: P(x < r) = (r^2 - r0^2) / (R^2 - r0^2)
    mid = np.sqrt((p.cutoff**2 + p.radius**2) / 2)
    assert abs(np.mean(x < mid) - 0.5) < 0.05


def test_fixed_ring():
    users = sample_positions(5, PathlossParams(), np.random.default_rng(0), "fixed-ring")
    assert [u.distance for u in users] == pytest.approx([500 / 3] * 5)
    with pytest.raises(ParameterError):
        sample_positions(5, PathlossParams(), np.random.default_rng(0), "hexagon")


def test_scenario_validation():
    users = [UserGeometry(100.0, 0.1, 1e-12)] * 4
    with pytest.raises(ParameterError):
        Scenario(2, users, 1.0, 0.5, 10.0, 1e-13, 1e-3)
    with pytest.raises(ParameterError):
        Scenario(8, users, -1.0, 0.5, 10.0, 1e-13, 1e-3)
    with pytest.raises(ParameterError):
        Scenario(8, users, 1.0, 0.5, 10.0, 0.0, 1e-3)
    with pytest.raises(ParameterError):
        Scenario(8, [], 1.0, 0.5, 10.0, 1e-13, 1e-3)
    with pytest.raises(ParameterError):
        Scenario(8, users, 1.0, 0.5, 10.0, 1e-13, 1e-3, theta=2 * np.eye(8))


def test_channel_statistics():
    # E[h h^H] = beta (Theta + rho zt zt^H) / (1 + rho)
    sc = make_scenario(8, 2, rho=1.0, nu=0.6)
    streams = RandomStreams(3)
    n = 20000
    k = 0
    acc = np.zeros((8, 8), complex)
    for t in range(n):
        h = sample_channel(sc, streams.trial(t, sc.K)).H[:, k] / np.sqrt(sc.betas[k])
        acc += np.outer(h, h.conj())
    zt = sc.steering[:, k]
    expect = (sc.theta + np.outer(zt, zt.conj())) / 2
    assert np.abs(acc / n - expect).max() < 0.05


def test_channel_rayleigh_has_zero_mean():
    sc = make_scenario(4, 2, rho=0.0, nu=0.0)
    H = np.stack([sample_channel(sc, np.random.default_rng(t)).H for t in range(4000)])
    assert np.abs(H.mean(axis=0) / np.sqrt(sc.betas)).max() < 0.06


def test_channel_streams_are_per_user():
    sc = make_scenario(8, 3)
    a = sample_channel(sc, RandomStreams(1).trial(5, 3)).H
    b = sample_channel(sc, [RandomStreams(1).user(5, k) for k in range(3)]).H
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ParameterError):
        sample_channel(sc, RandomStreams(1).trial(5, 2))
