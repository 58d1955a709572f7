# The MAP ratio test on one setup: calibration under H0, then detection under H1.
#
# Run from the repository root:  python3 demos/03_detector.py

import numpy as np

from cfjcas import detector
from cfjcas.channel import complex_normal, draw_rcs
from cfjcas.montecarlo import ExperimentPlan, allocate, prepare_setup
from cfjcas.scenario import ScenarioConfig, db_to_linear
from cfjcas.signal import build_sensing_maps, receive_sensing, transmit_signals

plan = ExperimentPlan(n_calibration=2000, n_rcs_draws=10)
setup = prepare_setup(ScenarioConfig(), plan, setup_index=2)
sol = allocate(setup, "jcas_with_s0", plan.gamma_c)
noise = setup.scenario.noise_variance
rng = np.random.default_rng(0)

# %% The known transmit signal fixes the block-diagonal maps G[m] for the whole dwell.
maps = build_sensing_maps(setup.channels, transmit_signals(setup.precoders, sol.q, setup.symbols))
print("G[m] shape:", maps.shape, "(tau, M * N_rx, N_tx * N_rx)")

rcs = db_to_linear(-25.0)
variances = setup.channels.sensing_gain_variances * rcs
ctx = detector.DetectorContext.from_variances(variances, noise)
print("ln C = %.1f" % ctx.log_c)

# %% The H0 distribution of T depends on the setup, so the threshold is set empirically.
gram, h0_corr = detector.accumulate(maps, complex_normal(rng, (plan.n_calibration,) + maps.shape[:2], noise))
h0 = detector.test_statistic(gram, h0_corr, ctx)
threshold = detector.calibrate_threshold(h0, plan.p_fa)
print("threshold %.2f, i.e. ln C + %.2f" % (threshold, threshold - ctx.log_c))

# %% Fresh target draws: one Swerling-I gain matrix per dwell.
hits = 0
for _ in range(500):
    obs = receive_sensing(maps, draw_rcs(variances, rng), noise, rng)
    hits += detector.detect(maps, obs.y, ctx, threshold).decision == detector.H1
print("P_d at -25 dB RCS variance: %.3f" % (hits / 500))

_, fresh = detector.accumulate(maps, complex_normal(rng, (5000,) + maps.shape[:2], noise))
print("hold-out P_fa: %.3f" % np.mean(detector.test_statistic(gram, fresh, ctx) >= threshold))

# %% Each transmitter's target projection mixes only the N_ue + 1 streams, so the
# Gram matrix per receiver has rank at most min(N_ue + 1, N_tx). With more
# transmitters than streams the gains are not identifiable from the echo alone
# and the prior term in the MAP estimate is what keeps it well posed.
gram_only, _ = detector.accumulate(maps, np.zeros(maps.shape[:2], dtype=complex))
n_tx = setup.channels.n_tx
block = gram_only[:n_tx, :n_tx]
print("Gram rank per receiver: %d of %d" % (np.linalg.matrix_rank(block, tol=1e-9 * np.abs(block).max()), n_tx))
