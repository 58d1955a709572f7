import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfjcas.channel import complex_normal
from cfjcas.errors import DegenerateProjectionError
from cfjcas.precoding import (build_precoders, default_rzf_lambda, partition_per_ap, rzf_precoders,
                              zf_sensing_precoder)

from _instances import default_setup, random_channel_set


@pytest.fixture(scope="module")
def setup():
    return default_setup(0, n_calibration=200)


def test_default_setup_precoder_invariants(setup):
    pre = setup.precoders
    h = setup.channels.comm_channels
    assert np.allclose(np.linalg.norm(pre.w, axis=0), 1.0, atol=1e-12)
    assert np.allclose(np.sum(pre.per_ap_norms**2, axis=1), 1.0, atol=1e-12)
    assert np.max(np.abs(h.conj() @ pre.sensing_precoder)) <= 1e-9 * np.linalg.norm(h, axis=1).max()
    assert pre.per_ap_norms.shape == (h.shape[0] + 1, setup.channels.n_tx)


def test_single_ue_rzf_is_matched_filter():
    rng = np.random.default_rng(0)
    h = complex_normal(rng, (1, 6))
    w = rzf_precoders(h, 0.3)[:, 0]
    assert abs(np.vdot(h[0], w)) == pytest.approx(np.linalg.norm(h[0]))


def test_orthogonal_channels_direct_solve_oracle():
    h = np.array([[1, 1j, 0, 0], [0, 0, 2, -1]], dtype=complex)
    lam = 0.7
    w = rzf_precoders(h, lam)
    oracle = np.linalg.inv(h.T @ h.conj() + lam * np.eye(4)) @ h.T
    oracle /= np.linalg.norm(oracle, axis=0)
    assert np.allclose(w, oracle, atol=1e-12)
    for i in range(2):
        assert abs(np.vdot(h[i], w[:, i])) == pytest.approx(np.linalg.norm(h[i]))


def test_rzf_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        rzf_precoders(np.ones((1, 2)), 0.0)


def test_zf_identity_when_already_orthogonal():
    h = np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex)
    h0 = np.array([0, 0, 3, 4j])
    assert np.allclose(zf_sensing_precoder(h, h0), h0 / 5)


def test_zf_degenerate_when_target_in_ue_span():
    h = np.array([[1, 2j, 0.5, 1]])
    with pytest.raises(DegenerateProjectionError):
        zf_sensing_precoder(h, h[0])


def test_zf_random_orthogonality():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h = complex_normal(rng, (5, 12), 1e-9)
        h0 = complex_normal(rng, 12)
        w0 = zf_sensing_precoder(h, h0)
        assert np.linalg.norm(w0) == pytest.approx(1.0)
        assert np.max(np.abs(h.conj() @ w0)) <= 1e-9 * np.linalg.norm(h, axis=1).max()


def test_partition_examples():
    w = np.arange(4) + 1j
    blocks = partition_per_ap(w, 2, 2)
    assert np.array_equal(blocks[0], w[:2]) and np.array_equal(blocks[1], w[2:])
    assert np.array_equal(partition_per_ap(w, 1, 4)[0], w)
    assert np.concatenate(blocks) == pytest.approx(w)
    assert np.sum(np.abs(blocks) ** 2) == pytest.approx(np.sum(np.abs(w) ** 2))
    with pytest.raises(ValueError):
        partition_per_ap(w, 3, 2)


def test_default_lambda_formula():
    assert default_rzf_lambda(8, 4e-13, 16, 4, 1.0) == pytest.approx(8 * 4e-13 * 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-3, 1e3), st.floats(0.0, 2 * np.pi))
def test_rzf_direction_invariant_to_joint_scaling(seed, mag, phase):
    rng = np.random.default_rng(seed)
    h = complex_normal(rng, (3, 8))
    lam = rng.uniform(0.01, 2.0)
    c = mag * np.exp(1j * phase)
    w1 = rzf_precoders(h, lam)
    w2 = rzf_precoders(c * h, abs(c) ** 2 * lam)
    # scaling h by c scales each solve by 1/conj(c); the normalized direction keeps only a phase
    for i in range(3):
        assert abs(np.vdot(w1[:, i], w2[:, i])) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 5))
def test_built_precoders_invariants(seed, n_ue):
    rng = np.random.default_rng(seed)
    ch = random_channel_set(rng, n_ue, n_tx=3, m=2)
    pre = build_precoders(ch, 0.1)
    assert np.allclose(np.linalg.norm(pre.w, axis=0), 1.0, atol=1e-12)
    assert np.allclose(pre.per_ap.reshape(-1, pre.n_streams), pre.w)
    if n_ue:
        assert np.max(np.abs(ch.comm_channels.conj() @ pre.sensing_precoder)) <= 1e-9
