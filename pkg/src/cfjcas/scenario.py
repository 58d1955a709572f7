"""Simulation geometry: AP, UE and target placement, receiver selection and angles."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfigError, SingularGeometryError


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ScenarioConfig:
    """Template from which scenarios are generated.

    Defaults follow the evaluation setup of a 500 m x 500 m area with 16
    transmitting and 2 receiving APs. Heights and array orientation are not
    part of that setup and are assumptions (10 m APs, 1.5 m UEs and target,
    broadside along the global x-axis).
    """

    area_side: float = 500.0
    n_tx: int = 16
    n_rx: int = 2
    n_ue: int = 8
    m_antennas: int = 4
    p_tx_max: float = 1.0
    noise_dbm: float = -94.0
    carrier_frequency: float = 1.9e9
    bandwidth: float = 20e6
    ap_height: float = 10.0
    ue_height: float = 1.5
    target_height: float = 1.5
    ap_layout: str = "seeded"
    layout_seed: int = 0
    ap_positions: tuple | None = None
    ap_rotations: tuple | None = None

    @property
    def noise_variance(self) -> float:
        return float(dbm_to_watt(self.noise_dbm))

    @property
    def n_ap(self) -> int:
        return self.n_tx + self.n_rx

    def validate(self) -> None:
        if not self.area_side > 0:
            raise InvalidConfigError("area_side_m", "must be positive")
        for key, value in (("n_tx", self.n_tx), ("n_rx", self.n_rx), ("m_antennas", self.m_antennas)):
            if int(value) != value or value < 1:
                raise InvalidConfigError(key, "must be an integer >= 1")
        if int(self.n_ue) != self.n_ue or self.n_ue < 0:
            raise InvalidConfigError("n_ue", "must be an integer >= 0")
        if not self.p_tx_max > 0:
            raise InvalidConfigError("p_tx_max_w", "must be positive")
        if not self.carrier_frequency > 0:
            raise InvalidConfigError("carrier_hz", "must be positive")
        if not self.bandwidth > 0:
            raise InvalidConfigError("bandwidth_hz", "must be positive")
        for key, h in (("heights.ap_m", self.ap_height), ("heights.ue_m", self.ue_height),
                       ("heights.target_m", self.target_height)):
            if not h > 0:
                raise InvalidConfigError(key, "heights must be strictly positive")
        if self.ap_layout not in ("seeded", "explicit"):
            raise InvalidConfigError("ap_layout", "must be 'seeded' or 'explicit'")
        if self.ap_layout == "explicit":
            if self.ap_positions is None:
                raise InvalidConfigError("ap_positions", "required when ap_layout = 'explicit'")
            pos = np.asarray(self.ap_positions, dtype=float)
            if pos.ndim != 2 or pos.shape[1] not in (2, 3):
                raise InvalidConfigError("ap_positions", "must be a list of [x, y] or [x, y, z]")
            if pos.shape[0] != self.n_ap:
                raise InvalidConfigError(
                    "ap_positions", f"expected n_tx + n_rx = {self.n_ap} entries, got {pos.shape[0]}")
        if self.ap_rotations is not None and len(self.ap_rotations) != self.n_ap:
            raise InvalidConfigError("ap_rotations", f"expected {self.n_ap} entries")


@dataclass(frozen=True)
class Scenario:
    area_side: float
    n_tx: int
    n_rx: int
    n_ue: int
    m_antennas: int
    ap_positions: np.ndarray
    ue_positions: np.ndarray
    target_position: np.ndarray
    p_tx_max: float
    noise_variance: float
    carrier_frequency: float
    bandwidth: float
    ap_rotations: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ap_rotations is None:
            object.__setattr__(self, "ap_rotations", np.zeros(self.n_tx + self.n_rx))
        self.validate()

    def validate(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1 or self.m_antennas < 1 or self.n_ue < 0:
            raise InvalidConfigError("counts", "need n_tx, n_rx, m_antennas >= 1 and n_ue >= 0")
        ap = np.asarray(self.ap_positions)
        ue = np.asarray(self.ue_positions)
        if ap.shape != (self.n_tx + self.n_rx, 3):
            raise InvalidConfigError("ap_positions", f"expected shape ({self.n_tx + self.n_rx}, 3), got {ap.shape}")
        if ue.shape != (self.n_ue, 3):
            raise InvalidConfigError("ue_positions", f"expected shape ({self.n_ue}, 3), got {ue.shape}")
        pts = np.vstack([ap, ue, np.asarray(self.target_position).reshape(1, 3)])
        if np.any(pts[:, :2] < 0) or np.any(pts[:, :2] > self.area_side):
            raise InvalidConfigError("positions", "horizontal coordinates must lie inside the area")
        if np.any(pts[:, 2] <= 0):
            raise InvalidConfigError("heights", "all heights must be strictly positive")

    @property
    def n_ap(self) -> int:
        return self.n_tx + self.n_rx

    def with_ues(self, ue_positions) -> "Scenario":
        ue = np.asarray(ue_positions, dtype=float).reshape(-1, 3)
        return replace(self, ue_positions=ue, n_ue=ue.shape[0])


@dataclass(frozen=True)
class AngleSet:
    """Azimuth/elevation of the target as seen by every transmitter and receiver AP.

    Transmitter angles point from AP k to the target; receiver angles point
    from the target to receiver AP r. Azimuths are relative to each AP's
    array broadside.
    """

    tx_azimuth: np.ndarray
    tx_elevation: np.ndarray
    rx_azimuth: np.ndarray
    rx_elevation: np.ndarray


def generate_scenario(seed, config: ScenarioConfig | None = None) -> Scenario:
    """Draw one scenario: UEs uniform over the area, target at the centre.

    The AP layout does not depend on `seed`: it is either the explicit list
    from the config or a uniform layout drawn from ``config.layout_seed``, so
    it stays fixed across Monte Carlo setups.
    """
    config = ScenarioConfig() if config is None else config
    config.validate()
    side = float(config.area_side)

    if config.ap_layout == "explicit":
        pos = np.asarray(config.ap_positions, dtype=float)
        if pos.shape[1] == 2:
            pos = np.column_stack([pos, np.full(len(pos), config.ap_height)])
        ap_positions = pos
    else:
        layout_rng = np.random.default_rng(config.layout_seed)
        xy = layout_rng.uniform(0.0, side, size=(config.n_ap, 2))
        ap_positions = np.column_stack([xy, np.full(config.n_ap, config.ap_height)])

    rng = np.random.default_rng(seed)
    ue_xy = rng.uniform(0.0, side, size=(config.n_ue, 2))
    ue_positions = np.column_stack([ue_xy, np.full(config.n_ue, config.ue_height)])
    target = np.array([side / 2, side / 2, config.target_height])

    rotations = None if config.ap_rotations is None else np.asarray(config.ap_rotations, dtype=float)
    return Scenario(
        area_side=side,
        n_tx=int(config.n_tx),
        n_rx=int(config.n_rx),
        n_ue=int(config.n_ue),
        m_antennas=int(config.m_antennas),
        ap_positions=ap_positions,
        ue_positions=ue_positions,
        target_position=target,
        p_tx_max=float(config.p_tx_max),
        noise_variance=config.noise_variance,
        carrier_frequency=float(config.carrier_frequency),
        bandwidth=float(config.bandwidth),
        ap_rotations=rotations,
    )


def select_receivers(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Split AP indices into (transmitters, receivers).

    The `n_rx` APs closest to the target (3D distance) receive; ties go to
    the lower index. Both index arrays are returned in ascending order.
    """
    dist = np.linalg.norm(scenario.ap_positions - scenario.target_position, axis=1)
    order = np.argsort(dist, kind="stable")
    rx = np.sort(order[: scenario.n_rx])
    tx = np.sort(order[scenario.n_rx:])
    return tx, rx


def _wrap_azimuth(az):
    az = np.mod(az + np.pi, 2 * np.pi) - np.pi
    return np.where(az <= -np.pi, az + 2 * np.pi, az)


def direction_angles(origin, destination, rotation=0.0):
    """Azimuth and elevation of the ray from `origin` to `destination`."""
    d = np.asarray(destination, dtype=float) - np.asarray(origin, dtype=float)
    horiz = np.hypot(d[..., 0], d[..., 1])
    if np.any((horiz == 0) & (d[..., 2] == 0)):
        raise SingularGeometryError("AP colocated with the target")
    azimuth = _wrap_azimuth(np.arctan2(d[..., 1], d[..., 0]) - rotation)
    elevation = np.arctan2(d[..., 2], horiz)
    return azimuth, elevation


def compute_angles(scenario: Scenario) -> AngleSet:
    tx, rx = select_receivers(scenario)
    target = scenario.target_position
    tx_az, tx_el = direction_angles(scenario.ap_positions[tx], target, scenario.ap_rotations[tx])
    rx_az, rx_el = direction_angles(target, scenario.ap_positions[rx], scenario.ap_rotations[rx])
    return AngleSet(tx_azimuth=np.atleast_1d(tx_az), tx_elevation=np.atleast_1d(tx_el),
                    rx_azimuth=np.atleast_1d(rx_az), rx_elevation=np.atleast_1d(rx_el))
