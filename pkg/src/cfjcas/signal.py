"""Symbol-level simulation of the downlink and of the multi-static sensing echoes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelSet, complex_normal
from .precoding import PrecoderSet


@dataclass(frozen=True)
class SymbolBlock:
    s: np.ndarray  # (tau, n_ue + 1); column 0 carries the sensing symbols

    @property
    def tau(self) -> int:
        return self.s.shape[0]


@dataclass(frozen=True)
class SensingObservation:
    y: np.ndarray        # (tau, M * n_rx)
    g: np.ndarray        # (tau, M * n_rx, n_tx * n_rx)
    truth: bool
    alpha_true: np.ndarray | None = None


def draw_symbols(tau: int, n_ue: int, seed=None, alphabet: str = "gaussian") -> SymbolBlock:
    """Independent zero-mean, unit-power symbols for the sensing stream and every UE."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (tau, n_ue + 1)
    if alphabet == "gaussian":
        s = complex_normal(rng, shape)
    elif alphabet == "qpsk":
        s = np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, size=shape)))
    else:
        raise ValueError(f"unknown alphabet {alphabet!r}")
    return SymbolBlock(s)


def transmit_signals(precoders: PrecoderSet, q, symbols: SymbolBlock, m_index: int | None = None) -> np.ndarray:
    """x_k[m] = W_k D_s[m] q for every transmitter AP.

    Returns ``(n_tx, M)`` for a single symbol index, else ``(tau, n_tx, M)``.
    """
    q = np.asarray(q, dtype=float)
    s = symbols.s if m_index is None else symbols.s[m_index:m_index + 1]
    x = (s * q) @ precoders.w.T
    x = x.reshape(len(s), precoders.n_tx, precoders.m_antennas)
    return x[0] if m_index is not None else x


def receive_ue(channels: ChannelSet, x: np.ndarray, noise_variance: float, seed=None) -> np.ndarray:
    """Received downlink samples ``y_i[m] = h_i^H x[m] + n_i[m]``, shape ``(tau, n_ue)``."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x).reshape(x.shape[0], -1)
    clean = x @ channels.comm_channels.conj().T
    return clean + complex_normal(rng, clean.shape, noise_variance)


def target_projections(channels: ChannelSet, x: np.ndarray) -> np.ndarray:
    """``a^T(phi_k, vartheta_k) x_k[m]``: scalar field each AP sends toward the target, ``(tau, n_tx)``."""
    return np.einsum("km,tkm->tk", channels.tx_responses, x)


def build_sensing_maps(channels: ChannelSet, x: np.ndarray) -> np.ndarray:
    """Block-diagonal G[m] for every symbol, shape ``(tau, M * n_rx, n_tx * n_rx)``.

    Block r has columns ``g_{r,k}[m] = a(phi_r, theta_r) (a^T(phi_k, vartheta_k) x_k[m])``.
    """
    z = target_projections(channels, x)
    blocks = np.einsum("rm,tk->trmk", channels.rx_responses, z)
    return np.stack([scipy.linalg.block_diag(*b) for b in blocks])


def receive_sensing(maps: np.ndarray, alpha=None, noise_variance: float = 1.0, seed=None,
                    noiseless: bool = False) -> SensingObservation:
    """Echo received at the sensing APs after target-free paths are cancelled.

    ``y[m] = G[m] alpha + n[m]`` with `alpha` the ``(n_rx, n_tx)`` gain matrix,
    or noise only when `alpha` is None.
    """
    rng = np.random.default_rng(seed)
    tau, rows, _ = maps.shape
    y = np.zeros((tau, rows), dtype=complex)
    alpha_vec = None
    if alpha is not None:
        alpha_vec = np.asarray(alpha).reshape(-1)
        y += maps @ alpha_vec
    if not noiseless:
        y += complex_normal(rng, (tau, rows), noise_variance)
    return SensingObservation(y=y, g=maps, truth=alpha is not None,
                              alpha_true=None if alpha is None else np.asarray(alpha))
