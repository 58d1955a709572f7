# Power allocation: communication-only baseline against the sensing-aware CCP.
#
# Run from the repository root:  python3 demos/02_power_allocation.py

import numpy as np

from cfjcas.montecarlo import ExperimentPlan, allocate, prepare_setup
from cfjcas.scenario import ScenarioConfig, watt_to_dbm

np.set_printoptions(precision=3, suppress=True)

plan = ExperimentPlan(n_calibration=200, n_rcs_draws=10)
setup = prepare_setup(ScenarioConfig(), plan, setup_index=0)
gamma_c = plan.gamma_c  # 20 dB

# %% The RZF precoders are unit norm and the sensing beam is zero-forced onto
# the UE nullspace, so it never interferes with the downlink.
pre = setup.precoders
print("precoder norms:", np.linalg.norm(pre.w, axis=0))
print("leak of the sensing beam into UEs:", np.abs(setup.channels.comm_channels.conj() @ pre.sensing_precoder).max())

# %% Baseline: least total power that meets every SINR target; the sensing stream stays dark.
base = allocate(setup, "baseline", gamma_c)
print("\nbaseline")
print("  total power  %.2f dBm" % watt_to_dbm(base.total_power))
print("  UE SINRs     ", 10 * np.log10(base.ue_sinrs))

# %% CCP: maximize the sensing SNR under the same SINR and per-AP power limits.
for method in ("jcas_without_s0", "jcas_with_s0"):
    sol = allocate(setup, method, gamma_c)
    print(f"\n{method}")
    print("  iterations   ", sol.iterations, "converged" if sol.converged else "hit cap")
    print("  total power  %.2f dBm" % watt_to_dbm(sol.total_power))
    print("  sensing amp   %.3f" % sol.q[0])
    print("  SNR gain over baseline %.1f dB" % (10 * np.log10(sol.sensing_snr / base.sensing_snr)))
    print("  min UE SINR  %.3f dB" % (10 * np.log10(sol.ue_sinrs.min())))
    print("  max AP power %.6f W" % sol.per_ap_power.max())
    print("  objective    ", np.round(sol.objective_history[:6], 1), "...")

# %% A total-power cap tightens every method; below the baseline minimum it is infeasible.
cap = 10 ** ((34 - 30) / 10)
capped = allocate(setup, "jcas_with_s0", gamma_c, p_total_cap=cap)
print("\nwith a 34 dBm cap: total %.2f dBm, SNR %.1f dB below the uncapped optimum" % (
    watt_to_dbm(capped.total_power), 10 * np.log10(sol.sensing_snr / capped.sensing_snr)))
