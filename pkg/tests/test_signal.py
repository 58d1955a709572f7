import numpy as np
import pytest

from cfjcas.channel import ChannelSet
from cfjcas.power import per_ap_power
from cfjcas.precoding import PrecoderSet, build_precoders
from cfjcas.signal import (SymbolBlock, build_sensing_maps, draw_symbols, receive_sensing, receive_ue,
                           transmit_signals)

from _instances import random_channel_set


@pytest.fixture(scope="module")
def instance():
    rng = np.random.default_rng(10)
    ch = random_channel_set(rng, 3, 4, 3)
    pre = build_precoders(ch, 0.1)
    q = rng.uniform(0.3, 1.2, 4)
    return ch, pre, q


@pytest.mark.parametrize("alphabet", ["gaussian", "qpsk"])
def test_symbol_moments(alphabet):
    s = draw_symbols(100_000, 2, 1, alphabet).s
    assert s.shape == (100_000, 3)
    assert np.all(np.abs(s.mean(axis=0)) < 0.02)
    assert np.mean(np.abs(s) ** 2, axis=0) == pytest.approx(np.ones(3), rel=0.02)


def test_symbols_deterministic_and_validated():
    assert np.array_equal(draw_symbols(50, 3, 4).s, draw_symbols(50, 3, 4).s)
    assert np.allclose(np.abs(draw_symbols(50, 3, 4, "qpsk").s), 1.0)
    with pytest.raises(ValueError):
        draw_symbols(0, 1)
    with pytest.raises(ValueError):
        draw_symbols(5, 1, alphabet="bpsk")


def test_zero_amplitudes_transmit_nothing(instance):
    ch, pre, _ = instance
    x = transmit_signals(pre, np.zeros(4), draw_symbols(5, 3, 0))
    assert x.shape == (5, 4, 3) and np.all(x == 0)


def test_single_stream_unit_symbol(instance):
    ch, pre, _ = instance
    q = np.array([0.7, 0, 0, 0])
    x = transmit_signals(pre, q, SymbolBlock(np.ones((1, 4))), m_index=0)
    assert np.allclose(x, 0.7 * pre.per_ap[:, :, 0])


def test_per_ap_power_law_of_large_numbers(instance):
    ch, pre, q = instance
    x = transmit_signals(pre, q, draw_symbols(10_000, 3, 2))
    empirical = np.mean(np.sum(np.abs(x) ** 2, axis=2), axis=0)
    assert empirical == pytest.approx(per_ap_power(pre, q**2), rel=0.02)


def test_matched_single_ue_noiseless():
    h = np.array([[1.0, 2j, -1.0, 0.5]])
    w = np.column_stack([np.zeros(4), h[0] / np.linalg.norm(h[0])])
    ch = ChannelSet(h, np.ones(4), np.ones((1, 2)), np.ones((2, 2)), np.ones((1, 2)))
    pre = PrecoderSet(w, 2, 2, 1.0)
    sym = draw_symbols(6, 1, 0)
    y = receive_ue(ch, transmit_signals(pre, [0.0, 0.8], sym), 0.0)
    assert np.allclose(y[:, 0], 0.8 * np.linalg.norm(h[0]) * sym.s[:, 1])


def test_zero_channel_receives_noise_only(instance):
    ch, pre, q = instance
    dead = ChannelSet(np.zeros_like(ch.comm_channels), ch.sensing_tx_response, ch.sensing_gain_variances,
                      ch.tx_responses, ch.rx_responses)
    y = receive_ue(dead, transmit_signals(pre, q, draw_symbols(40_000, 3, 1)), 0.3, seed=2)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.02)


def test_sensing_maps_structure(instance):
    ch, pre, q = instance
    sym = draw_symbols(4, 3, 5)
    g = build_sensing_maps(ch, transmit_signals(pre, q, sym))
    m, n_tx, n_rx = ch.m_antennas, ch.n_tx, ch.n_rx
    assert g.shape == (4, m * n_rx, n_tx * n_rx)
    x = transmit_signals(pre, q, sym)
    for r in range(n_rx):
        block = g[:, r * m:(r + 1) * m, r * n_tx:(r + 1) * n_tx]
        for t in range(4):
            z = np.array([ch.tx_responses[k] @ x[t, k] for k in range(n_tx)])
            expected = np.outer(ch.rx_responses[r], z)
            assert np.allclose(block[t], expected)
            sv = np.linalg.svd(block[t], compute_uv=False)
            assert sv[1] <= 1e-12 * sv[0]
        # off-diagonal blocks stay empty
        other = np.delete(g[:, r * m:(r + 1) * m, :], np.s_[r * n_tx:(r + 1) * n_tx], axis=2)
        assert np.all(other == 0)


def test_sensing_maps_vanish_without_signal(instance):
    ch, pre, _ = instance
    assert np.all(build_sensing_maps(ch, np.zeros((3, ch.n_tx, ch.m_antennas))) == 0)


def test_single_antenna_maps_are_scalars():
    rng = np.random.default_rng(0)
    ch = random_channel_set(rng, 1, 2, 1, n_rx=1)
    x = rng.standard_normal((3, 2, 1)) + 0j
    g = build_sensing_maps(ch, x)
    assert np.allclose(g[:, 0, :], x[:, :, 0])


def test_receive_sensing_noise_and_linearity(instance):
    ch, pre, q = instance
    maps = build_sensing_maps(ch, transmit_signals(pre, q, draw_symbols(20, 3, 1)))
    obs = receive_sensing(np.repeat(maps, 500, axis=0), None, 0.4, seed=3)
    assert not obs.truth
    assert np.mean(np.abs(obs.y) ** 2) == pytest.approx(0.4, rel=0.02)

    rng = np.random.default_rng(1)
    a1 = rng.standard_normal((ch.n_rx, ch.n_tx)) + 1j * rng.standard_normal((ch.n_rx, ch.n_tx))
    a2 = rng.standard_normal((ch.n_rx, ch.n_tx)) + 0j
    y1 = receive_sensing(maps, a1, noiseless=True).y
    y2 = receive_sensing(maps, a2, noiseless=True).y
    y12 = receive_sensing(maps, a1 + a2, noiseless=True).y
    assert np.allclose(y12, y1 + y2)
    assert np.allclose(y1, maps @ a1.reshape(-1))

    # scaling q scales the echo
    maps2 = build_sensing_maps(ch, transmit_signals(pre, 2.5 * q, draw_symbols(20, 3, 1)))
    assert np.allclose(receive_sensing(maps2, a1, noiseless=True).y, 2.5 * y1)
