import json
import random
from dataclasses import replace

import numpy as np
import pytest

from cfjcas import montecarlo
from cfjcas.montecarlo import (CSV_HEADER, ExperimentPlan, SetupOutcome, aggregate, allocate,
                               detection_counts, prepare_setup, read_csv, run_setup, run_sweep,
                               wilson_halfwidth, write_csv, write_manifest)
from cfjcas.errors import InvalidConfigError
from cfjcas.power import SensingSnrMatrix, ccp_allocate
from cfjcas.scenario import ScenarioConfig, db_to_linear

CFG = ScenarioConfig()


@pytest.fixture(scope="module")
def plan():
    return ExperimentPlan(n_rcs_draws=2000, n_calibration=2000)


@pytest.fixture(scope="module")
def setup(plan):
    return prepare_setup(CFG, plan, 0)


@pytest.fixture(scope="module")
def jcas(setup):
    return allocate(setup, "jcas_with_s0", 100.0)


def test_plan_validation():
    ExperimentPlan().validate()
    for kw in ({"n_setups": 0}, {"p_fa": 1.0}, {"n_calibration": 100}, {"methods": ("magic",)},
               {"sweep_param": "tau"}, {"rcs_mode": "other"}):
        with pytest.raises(InvalidConfigError):
            ExperimentPlan(**kw).validate()


def test_degenerate_target_gives_false_alarm_rate(setup, jcas, plan):
    det, n1, fa, n0 = detection_counts(setup, jcas.q, 1e-2, plan, alpha_scale=0.0)
    assert n1 == 2000
    assert abs(det / n1 - fa / n0) <= 0.03
    assert abs(det / n1 - plan.p_fa) <= 0.03


def test_detection_monotone_in_rcs(setup, jcas, plan):
    p_d = []
    for rcs_db in range(-45, 1, 5):
        det, n1, _, _ = detection_counts(setup, jcas.q, db_to_linear(rcs_db), plan)
        p_d.append(det / n1)
    assert np.all(np.diff(p_d) >= -0.02)
    assert p_d[-1] >= 0.99


def test_run_setup_large_rcs_saturates():
    small = ExperimentPlan(n_rcs_draws=200)
    out = run_setup(CFG, small, "jcas_with_s0", 0.0, 0)
    assert out.feasible
    assert out.detections / out.n_h1 >= 0.99


def test_run_setup_deterministic():
    small = ExperimentPlan(n_rcs_draws=50, n_calibration=500, p_fa=0.1)
    a = run_setup(CFG, small, "baseline", -20.0, 3)
    b = run_setup(CFG, small, "baseline", -20.0, 3)
    assert a == b


def test_cap_below_minimum_power_recorded_infeasible():
    small = ExperimentPlan(n_rcs_draws=20, sweep_param="p_total_dbm")
    for method in ("baseline", "jcas_with_s0"):
        out = run_setup(CFG, small, method, 0.0, 0)
        assert not out.feasible and out.n_h1 == 0


def test_modes_coincide_when_sensing_stream_is_useless(setup):
    a = setup.a_unit.a.copy()
    a[0, :] = 0
    a[:, 0] = 0
    blind = SensingSnrMatrix(a)
    with_s0 = ccp_allocate(blind, setup.coeffs, setup.precoders, 100.0, 1.0)
    without = ccp_allocate(blind, setup.coeffs, setup.precoders, 100.0, 1.0, with_sensing=False)
    assert with_s0.sensing_snr == pytest.approx(without.sensing_snr, rel=1e-5)


def test_wilson_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.stats.proportion")
    for k, n in ((50, 100), (0, 40), (199, 200), (7, 3000)):
        lo, hi = sm.proportion_confint(k, n, alpha=0.05, method="wilson")
        assert wilson_halfwidth(k, n) == pytest.approx((hi - lo) / 2, rel=1e-5)
    assert np.isnan(wilson_halfwidth(0, 0))


def _outcome(method, value, feasible, det=0, n1=0, fa=0, n0=0):
    return SetupOutcome(method, value, feasible, det, n1, fa, n0, sensing_snr=1.0, total_power=1.0)


def test_aggregate_accounting_and_order_independence():
    plan = ExperimentPlan(methods=("baseline",), sweep_values=(-20.0,), n_setups=4, n_rcs_draws=10)
    outs = [_outcome("baseline", -20.0, True, 6, 10, 1, 10),
            _outcome("baseline", -20.0, True, 9, 10, 2, 10),
            _outcome("baseline", -20.0, False),
            _outcome("baseline", -20.0, True, 3, 10, 0, 10)]
    row = aggregate(outs, plan)[0]
    assert row.n_trials == 30
    assert row.p_d == pytest.approx(18 / 30)
    assert row.p_fa_achieved == pytest.approx(3 / 30)
    assert row.feasibility_rate == pytest.approx(0.75)
    assert row.ci95 == pytest.approx(wilson_halfwidth(18, 30))
    shuffled = outs[:]
    random.Random(0).shuffle(shuffled)
    assert aggregate(shuffled, plan) == aggregate(outs, plan)


def test_sweep_rows_and_parallel_equivalence(tmp_path):
    plan = ExperimentPlan(methods=("baseline", "jcas_without_s0"), sweep_values=(-30.0, -10.0),
                          n_setups=2, n_rcs_draws=20, n_calibration=200)
    serial = run_sweep(CFG, plan, workers=1)
    parallel = run_sweep(CFG, plan, workers=2)
    assert serial == parallel
    assert len(serial) == 4
    for row in serial:
        assert 0 <= row.p_d <= 1 and row.n_trials == 40 and row.ci95 > 0

    path = tmp_path / "sweep.csv"
    write_csv(serial, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_csv(path)
    assert len(back) == 4 and float(back[0]["p_d"]) == serial[0].p_d

    write_manifest(tmp_path / "m.json", CFG, plan, "fig3")
    manifest = json.loads((tmp_path / "m.json").read_text())
    assert manifest["seed"] == 0 and manifest["plan"]["n_setups"] == 2


def test_ue_sweep_reuses_setup_per_count():
    plan = replace(ExperimentPlan(methods=("baseline",), n_setups=1, n_rcs_draws=20, n_calibration=200,
                                  rcs_db=-20.0), sweep_param="n_ue", sweep_values=(2, 4))
    rows = montecarlo.sweep_ue(CFG, plan, workers=1)
    assert [r.sweep_value for r in rows] == [2.0, 4.0]
    assert all(r.sweep_param == "n_ue" for r in rows)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CFJCAS_THREADS", "3")
    assert montecarlo.worker_count() == 3
