"""Centralized RZF precoders for the UEs and the zero-forcing sensing beam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelSet
from .errors import DegenerateProjectionError


@dataclass(frozen=True)
class PrecoderSet:
    """Unit-norm centralized precoders.

    `w` holds one precoder per column: column 0 is the sensing precoder w_0,
    column i the precoder of UE i.
    """

    w: np.ndarray
    n_tx: int
    m_antennas: int
    rzf_lambda: float

    @property
    def ue_precoders(self) -> np.ndarray:
        return self.w[:, 1:]

    @property
    def sensing_precoder(self) -> np.ndarray:
        return self.w[:, 0]

    @property
    def n_streams(self) -> int:
        return self.w.shape[1]

    @property
    def per_ap(self) -> np.ndarray:
        """Per-AP blocks W_k, shape ``(n_tx, M, n_ue + 1)``."""
        return self.w.reshape(self.n_tx, self.m_antennas, self.n_streams)

    @property
    def per_ap_norms(self) -> np.ndarray:
        """``(n_ue + 1, n_tx)`` matrix of ||w_{i,k}||."""
        return np.linalg.norm(self.per_ap, axis=1).T


def default_rzf_lambda(n_ue, noise_variance, n_tx, m, p_tx) -> float:
    return n_ue * noise_variance * n_tx * m / (n_tx * p_tx)


def rzf_precoders(comm_channels: np.ndarray, lam: float) -> np.ndarray:
    """Unit-norm RZF precoders, one column per UE.

    `comm_channels` is ``(n_ue, N)`` with row i = h_i. Column i of the
    result is ``(sum_j h_j h_j^H + lam I)^{-1} h_i`` normalized.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    h = np.asarray(comm_channels).T
    n = h.shape[0]
    if h.shape[1] == 0:
        return np.zeros((n, 0), dtype=complex)
    gram = h @ h.conj().T + lam * np.eye(n)
    w_bar = scipy.linalg.solve(gram, h, assume_a="pos")
    return w_bar / np.linalg.norm(w_bar, axis=0)


def zf_sensing_precoder(comm_channels: np.ndarray, h0: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Project h_0 onto the orthogonal complement of the UE channel span."""
    h = np.asarray(comm_channels).T
    h0 = np.asarray(h0)
    if h.shape[1] > 0:
        u, s, _ = np.linalg.svd(h, full_matrices=False)
        basis = u[:, s > rtol * s[0]] if s[0] > 0 else u[:, :0]
        proj = h0 - basis @ (basis.conj().T @ h0)
    else:
        proj = h0.astype(complex)
    norm = np.linalg.norm(proj)
    if norm < 1e-9 * np.linalg.norm(h0):
        raise DegenerateProjectionError("target channel lies in the span of the UE channels")
    return proj / norm


def partition_per_ap(w, n_tx: int, m: int) -> np.ndarray:
    """Split a centralized vector into `n_tx` blocks of `m` entries."""
    w = np.asarray(w)
    if w.shape[0] != n_tx * m:
        raise ValueError(f"vector length {w.shape[0]} != n_tx * m = {n_tx * m}")
    return w.reshape((n_tx, m) + w.shape[1:])


def build_precoders(channels: ChannelSet, lam: float) -> PrecoderSet:
    w_ue = rzf_precoders(channels.comm_channels, lam)
    w0 = zf_sensing_precoder(channels.comm_channels, channels.sensing_tx_response)
    return PrecoderSet(w=np.column_stack([w0, w_ue]), n_tx=channels.n_tx,
                       m_antennas=channels.m_antennas, rzf_lambda=float(lam))
