"""Propagation: array responses, UMi communication channels and radar-equation sensing gains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import AngleSet, Scenario, compute_angles, select_receivers

SPEED_OF_LIGHT = 299_792_458.0


def array_response(azimuth, elevation, m: int) -> np.ndarray:
    """Half-wavelength ULA response; broadcasts over leading angle dimensions.

    Entry n is ``exp(1j * n * pi * sin(azimuth) * cos(elevation))``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    phase = np.pi * np.sin(azimuth) * np.cos(elevation)
    n = np.arange(m)
    return np.exp(1j * np.multiply.outer(phase, n))


def comm_pathloss_db(distance, carrier):
    """3GPP UMi NLOS path loss: 36.7 log10(d) + 22.7 + 26 log10(f_GHz)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return 36.7 * np.log10(d) + 22.7 + 26.0 * np.log10(carrier / 1e9)


def sensing_gain_variance(d_tx, d_rx, carrier, rcs_variance):
    """Two-way radar equation with unit element gains.

    Returns ``rcs_variance * lambda**2 / ((4 pi)**3 d_tx**2 d_rx**2)``.
    """
    d_tx = np.asarray(d_tx, dtype=float)
    d_rx = np.asarray(d_rx, dtype=float)
    if np.any(d_tx <= 0) or np.any(d_rx <= 0):
        raise ValueError("distances must be positive")
    wavelength = SPEED_OF_LIGHT / carrier
    return rcs_variance * wavelength**2 / ((4 * np.pi) ** 3 * d_tx**2 * d_rx**2)


def complex_normal(rng, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_comm_channels(scenario: Scenario, seed=None, shadowing_db: float = 0.0) -> np.ndarray:
    """i.i.d. Rayleigh channels from every transmitter antenna to every UE.

    Returns an ``(n_ue, n_tx * M)`` array whose row i is h_i, the blocks of
    M entries following the transmitter-AP order of `select_receivers`.
    The UE receives ``h_i.conj() @ x``.
    """
    rng = np.random.default_rng(seed)
    m = scenario.m_antennas
    tx, _ = select_receivers(scenario)
    if scenario.n_ue == 0:
        return np.zeros((0, scenario.n_tx * m), dtype=complex)
    diff = scenario.ue_positions[:, None, :] - scenario.ap_positions[tx][None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    pl_db = comm_pathloss_db(dist, scenario.carrier_frequency)
    if shadowing_db > 0:
        pl_db = pl_db + shadowing_db * rng.standard_normal(pl_db.shape)
    beta = 10.0 ** (-pl_db / 10.0)
    h = complex_normal(rng, (scenario.n_ue, scenario.n_tx, m), beta[:, :, None])
    return h.reshape(scenario.n_ue, scenario.n_tx * m)


def draw_rcs(variances, seed=None) -> np.ndarray:
    """One Swerling-I draw of the sensing gains, held over a whole dwell."""
    rng = np.random.default_rng(seed)
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < 0):
        raise ValueError("variances must be nonnegative")
    return complex_normal(rng, variances.shape, variances)


@dataclass(frozen=True)
class ChannelSet:
    comm_channels: np.ndarray          # (n_ue, n_tx*M), row i = h_i
    sensing_tx_response: np.ndarray    # (n_tx*M,), h_0 with target receiving h_0^H x
    sensing_gain_variances: np.ndarray  # (n_rx, n_tx)
    tx_responses: np.ndarray           # (n_tx, M), a(phi_k, vartheta_k)
    rx_responses: np.ndarray           # (n_rx, M), a(phi_r, theta_r)

    @property
    def n_ue(self) -> int:
        return self.comm_channels.shape[0]

    @property
    def n_tx(self) -> int:
        return self.tx_responses.shape[0]

    @property
    def n_rx(self) -> int:
        return self.rx_responses.shape[0]

    @property
    def m_antennas(self) -> int:
        return self.tx_responses.shape[1]

    def with_rcs_variance_scale(self, factor: float) -> "ChannelSet":
        return ChannelSet(self.comm_channels, self.sensing_tx_response,
                          self.sensing_gain_variances * factor, self.tx_responses, self.rx_responses)


def sensing_variances(scenario: Scenario, rcs_variance: float, rcs_mode: str = "combined") -> np.ndarray:
    """(n_rx, n_tx) matrix of sensing-gain variances.

    ``combined`` applies the radar equation to the RCS variance; ``raw``
    uses the RCS variance directly for every path.
    """
    tx, rx = select_receivers(scenario)
    if rcs_mode == "raw":
        return np.full((scenario.n_rx, scenario.n_tx), float(rcs_variance))
    if rcs_mode != "combined":
        raise ValueError(f"unknown rcs_mode {rcs_mode!r}")
    target = scenario.target_position
    d_tx = np.linalg.norm(scenario.ap_positions[tx] - target, axis=1)
    d_rx = np.linalg.norm(scenario.ap_positions[rx] - target, axis=1)
    return sensing_gain_variance(d_tx[None, :], d_rx[:, None], scenario.carrier_frequency, rcs_variance)


def build_channel_set(scenario: Scenario, seed=None, rcs_variance: float = 1.0,
                      rcs_mode: str = "combined", shadowing_db: float = 0.0,
                      angles: AngleSet | None = None) -> ChannelSet:
    angles = compute_angles(scenario) if angles is None else angles
    m = scenario.m_antennas
    a_tx = array_response(angles.tx_azimuth, angles.tx_elevation, m)
    a_rx = array_response(angles.rx_azimuth, angles.rx_elevation, m)
    return ChannelSet(
        comm_channels=draw_comm_channels(scenario, seed, shadowing_db),
        sensing_tx_response=a_tx.reshape(-1).conj(),
        sensing_gain_variances=sensing_variances(scenario, rcs_variance, rcs_mode),
        tx_responses=a_tx,
        rx_responses=a_rx,
    )
