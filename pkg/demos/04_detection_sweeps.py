# Miniature versions of the three detection sweeps (RCS variance, power cap, UE count).
#
# Run from the repository root:  python3 demos/04_detection_sweeps.py
# Full-size runs go through the CLI, e.g.  cfjcas run fig3 --out results

from dataclasses import replace

from cfjcas.montecarlo import ExperimentPlan, sweep_power, sweep_rcs, sweep_ue
from cfjcas.scenario import ScenarioConfig

config = ScenarioConfig()
small = ExperimentPlan(n_setups=4, n_rcs_draws=100)


def show(rows):
    for r in rows:
        print(f"  {r.sweep_param}={r.sweep_value:6g}  {r.method:16s} P_d={r.p_d:.3f} +/-{r.ci95:.3f}"
              f"  P_fa={r.p_fa_achieved:.3f}  power={r.mean_power_dbm:5.1f} dBm  feasible={r.feasibility_rate:.2f}")


# %% Detection probability against the RCS variance.
print("P_d vs RCS variance")
show(sweep_rcs(config, replace(small, sweep_values=(-35.0, -25.0, -15.0))))

# %% A total power cap shared by all methods; the baseline does not move once it fits.
print("\nP_d vs total power cap (RCS -20 dB)")
show(sweep_power(config, replace(small, rcs_db=-20.0, sweep_values=(32.0, 36.0, 40.0, 44.0))))

# %% More UEs give the communication streams more echo energy but squeeze the sensing beam.
print("\nP_d vs number of UEs (RCS -30 dB)")
show(sweep_ue(config, replace(small, rcs_db=-30.0, sweep_values=(2, 8))))
