# Geometry and propagation for one random drop.
#
# Run from the repository root:  python3 demos/01_geometry_and_channels.py

import numpy as np

from cfjcas.channel import array_response, build_channel_set, comm_pathloss_db
from cfjcas.scenario import ScenarioConfig, compute_angles, generate_scenario, select_receivers

np.set_printoptions(precision=3, suppress=True)

# %% The default deployment: 18 APs on a fixed seeded layout over a 500 m square,
# 8 UEs dropped uniformly, the target parked at the centre.
config = ScenarioConfig()
scen = generate_scenario(seed=1, config=config)
print("noise power per antenna:", scen.noise_variance, "W")
print("target:", scen.target_position)

# %% The two APs nearest the target listen for echoes, the other 16 transmit.
tx, rx = select_receivers(scen)
print("receiver APs:", rx, "at", np.linalg.norm(scen.ap_positions[rx] - scen.target_position, axis=1).round(1), "m")

# %% Angles towards the target drive the half-wavelength array responses.
angles = compute_angles(scen)
print("tx azimuth (deg):", np.degrees(angles.tx_azimuth).round(1))
print("tx elevation (deg):", np.degrees(angles.tx_elevation).round(2))
a = array_response(angles.tx_azimuth[0], angles.tx_elevation[0], config.m_antennas)
print("response of AP", tx[0], ":", a, "| moduli", np.abs(a))

# %% Communication channels follow the urban-microcell NLOS path loss with Rayleigh fading.
for d in (10, 50, 100, 300):
    print(f"path loss at {d:4d} m: {comm_pathloss_db(d, config.carrier_frequency):6.2f} dB")

channels = build_channel_set(scen, seed=2, rcs_variance=10 ** (-20 / 10))
print("h_i shape:", channels.comm_channels.shape)
print("per-UE channel energy (dB):", 10 * np.log10(np.sum(np.abs(channels.comm_channels) ** 2, axis=1)))

# %% Two-way radar gains for a -20 dB RCS variance, one row per receiver.
print("sensing gain variances (dB):")
print(10 * np.log10(channels.sensing_gain_variances))
