"""Monte Carlo harness: per-setup pipeline and the RCS / power-cap / UE-count sweeps.

Seeds are hierarchical: ``SeedSequence(plan.seed, spawn_key=(setup, stream))``
so any single setup can be replayed in isolation. Within a setup the
noise and RCS draws are shared by all methods and sweep values (common
random numbers), which tightens the comparisons between curves.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone

import numpy as np
import scipy.linalg

from . import detector
from .channel import ChannelSet, build_channel_set
from .errors import DegenerateProjectionError, InfeasibleAllocationError
from .power import (PowerSolution, SensingSnrMatrix, SinrCoefficients, baseline_allocate,
                    build_sensing_matrix, build_sinr_coefficients, ccp_allocate)
from .precoding import PrecoderSet, build_precoders, default_rzf_lambda
from .scenario import Scenario, ScenarioConfig, db_to_linear, dbm_to_watt, generate_scenario
from .signal import SymbolBlock, build_sensing_maps, draw_symbols, transmit_signals

METHODS = ("jcas_with_s0", "jcas_without_s0", "baseline")
SWEEP_PARAMS = ("rcs_db", "p_total_dbm", "n_ue")
CSV_HEADER = ["sweep_param", "sweep_value", "method", "p_d", "ci95", "p_fa_achieved",
              "mean_snr_db", "mean_power_dbm", "feasibility_rate", "n_trials"]

# spawn-key streams inside one setup
_UE, _CHANNEL, _SYMBOLS, _NOISE = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentPlan:
    methods: tuple = METHODS
    sweep_param: str = "rcs_db"
    sweep_values: tuple = (-40.0, -35.0, -30.0, -25.0, -20.0, -15.0, -10.0)
    n_setups: int = 20
    n_rcs_draws: int = 200
    n_noise_draws: int = 1
    n_calibration: int = 2000
    tau: int = 100
    gamma_c_db: float = 20.0
    p_fa: float = 0.1
    rcs_db: float = -30.0
    p_total_dbm: float | None = None
    rzf_lambda: float | None = None
    rcs_mode: str = "combined"
    alphabet: str = "gaussian"
    seed: int = 0

    def validate(self) -> None:
        from .errors import InvalidConfigError

        for key in ("n_setups", "n_rcs_draws", "n_noise_draws", "n_calibration", "tau"):
            if getattr(self, key) < 1:
                raise InvalidConfigError(key, "must be >= 1")
        if not 0 < self.p_fa < 1:
            raise InvalidConfigError("p_fa", "must lie in (0, 1)")
        if self.n_calibration < math.ceil(20 / self.p_fa - 1e-9):
            raise InvalidConfigError("n_calibration", f"must be >= 20 / p_fa = {20 / self.p_fa:g}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidConfigError("methods", f"unknown methods {sorted(unknown)}")
        if self.sweep_param not in SWEEP_PARAMS:
            raise InvalidConfigError("sweep_param", f"must be one of {SWEEP_PARAMS}")
        if self.rcs_mode not in ("combined", "raw"):
            raise InvalidConfigError("rcs_mode", "must be 'combined' or 'raw'")

    @property
    def gamma_c(self) -> float:
        return float(db_to_linear(self.gamma_c_db))


@dataclass
class Setup:
    """Everything about one random UE drop that does not depend on the method."""

    scenario: Scenario
    channels: ChannelSet          # sensing variances at unit RCS variance
    precoders: PrecoderSet
    coeffs: SinrCoefficients
    a_unit: SensingSnrMatrix      # sensing-SNR matrix at unit RCS variance
    symbols: SymbolBlock
    noise: dict = field(repr=False, default_factory=dict)


@dataclass
class SetupOutcome:
    method: str
    sweep_value: float
    feasible: bool
    detections: int = 0
    n_h1: int = 0
    false_alarms: int = 0
    n_h0: int = 0
    sensing_snr: float = float("nan")
    total_power: float = float("nan")
    iterations: int = 0


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float
    method: str
    p_d: float
    ci95: float
    p_fa_achieved: float
    mean_snr_db: float
    mean_power_dbm: float
    feasibility_rate: float
    n_trials: int

    def as_csv(self) -> list:
        return [self.sweep_param, repr(float(self.sweep_value)), self.method, repr(self.p_d),
                repr(self.ci95), repr(self.p_fa_achieved), repr(self.mean_snr_db),
                repr(self.mean_power_dbm), repr(self.feasibility_rate), str(self.n_trials)]


def seed_for(plan: ExperimentPlan, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(plan.seed, spawn_key=tuple(int(k) for k in key))


def wilson_halfwidth(successes: int, n: int, z: float = 1.959964) -> float:
    """Half-width of the Wilson 95% score interval for a binomial proportion."""
    if n == 0:
        return float("nan")
    p = successes / n
    return float(z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)))


def _complex_std(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def prepare_setup(config: ScenarioConfig, plan: ExperimentPlan, setup_index: int) -> Setup:
    scenario = generate_scenario(seed_for(plan, setup_index, _UE), config)
    channels = build_channel_set(scenario, seed_for(plan, setup_index, _CHANNEL), rcs_variance=1.0,
                                 rcs_mode=plan.rcs_mode)
    lam = plan.rzf_lambda
    if lam is None:
        lam = default_rzf_lambda(max(scenario.n_ue, 1), scenario.noise_variance, scenario.n_tx,
                                 scenario.m_antennas, scenario.p_tx_max)
    precoders = build_precoders(channels, lam)
    coeffs = build_sinr_coefficients(channels, precoders, scenario.noise_variance)
    a_unit = build_sensing_matrix(channels, precoders, scenario.noise_variance)
    symbols = draw_symbols(plan.tau, scenario.n_ue, seed_for(plan, setup_index, _SYMBOLS), plan.alphabet)

    rng = np.random.default_rng(seed_for(plan, setup_index, _NOISE))
    rows = plan.tau * scenario.m_antennas * scenario.n_rx
    n_h1 = plan.n_rcs_draws * plan.n_noise_draws
    noise = {
        "calibration": _complex_std(rng, (plan.n_calibration, rows)),
        "alpha": _complex_std(rng, (plan.n_rcs_draws, scenario.n_rx * scenario.n_tx)),
        "h1": _complex_std(rng, (n_h1, rows)),
        "holdout": _complex_std(rng, (n_h1, rows)),
    }
    return Setup(scenario, channels, precoders, coeffs, a_unit, symbols, noise)


def allocate(setup: Setup, method: str, gamma_c: float, p_total_cap: float | None = None) -> PowerSolution:
    """Power allocation of `method`; raises InfeasibleAllocationError."""
    p_tx = setup.scenario.p_tx_max
    if method == "baseline":
        return baseline_allocate(setup.coeffs, setup.precoders, gamma_c, p_tx, p_total_cap, setup.a_unit)
    if method not in ("jcas_with_s0", "jcas_without_s0"):
        raise ValueError(f"unknown method {method!r}")
    return ccp_allocate(setup.a_unit, setup.coeffs, setup.precoders, gamma_c, p_tx, p_total_cap,
                        with_sensing=(method == "jcas_with_s0"))


def detection_counts(setup: Setup, q, rcs_variance: float, plan: ExperimentPlan,
                     alpha_scale: float = 1.0) -> tuple[int, int, int, int]:
    """Calibrate the threshold under H0, then count detections and hold-out false alarms.

    The detector assumes sensing-gain variances for `rcs_variance`; the true
    gains are drawn with those variances times `alpha_scale`.
    Returns ``(detections, n_h1, false_alarms, n_h0)``.
    """
    noise_var = setup.scenario.noise_variance
    sigma_n = math.sqrt(noise_var)
    x = transmit_signals(setup.precoders, q, setup.symbols)
    flat = build_sensing_maps(setup.channels, x).reshape(-1, setup.channels.n_rx * setup.channels.n_tx)
    variances = setup.channels.sensing_gain_variances * rcs_variance
    ctx = detector.DetectorContext.from_variances(variances, noise_var)
    gram = flat.conj().T @ flat
    factor = scipy.linalg.cho_factor(gram + np.diag(ctx.d_diag))
    g_conj = flat.conj()

    def stats(corr):
        return detector.test_statistic(gram, corr, ctx, factor)

    t_cal = stats(sigma_n * (setup.noise["calibration"] @ g_conj))
    threshold = detector.calibrate_threshold(t_cal, plan.p_fa)

    alpha = setup.noise["alpha"] * np.sqrt(variances.reshape(-1) * alpha_scale)
    echo_corr = alpha @ gram.T                     # = (G alpha)^T conj(G)
    echo_corr = np.repeat(echo_corr, plan.n_noise_draws, axis=0)
    t_h1 = stats(echo_corr + sigma_n * (setup.noise["h1"] @ g_conj))
    t_fa = stats(sigma_n * (setup.noise["holdout"] @ g_conj))
    return (int(np.sum(t_h1 >= threshold)), t_h1.size, int(np.sum(t_fa >= threshold)), t_fa.size)


def _setup_config(config: ScenarioConfig, plan: ExperimentPlan, sweep_value) -> ScenarioConfig:
    if plan.sweep_param == "n_ue":
        return replace(config, n_ue=int(sweep_value))
    return config


def _operating_point(plan: ExperimentPlan, sweep_value):
    """(rcs variance, total power cap in W or None) at a sweep value."""
    rcs_db = sweep_value if plan.sweep_param == "rcs_db" else plan.rcs_db
    cap_dbm = sweep_value if plan.sweep_param == "p_total_dbm" else plan.p_total_dbm
    cap = None if cap_dbm is None else float(dbm_to_watt(cap_dbm))
    return float(db_to_linear(rcs_db)), cap


def _outcomes_for_setup(config: ScenarioConfig, plan: ExperimentPlan, setup_index: int,
                        sweep_values, methods) -> list[SetupOutcome]:
    """All (method, sweep value) outcomes for one setup, sharing allocations where possible."""
    out = []
    setups = {}
    allocations = {}
    for value in sweep_values:
        cfg = _setup_config(config, plan, value)
        if cfg.n_ue not in setups:
            try:
                setups[cfg.n_ue] = prepare_setup(cfg, plan, setup_index)
            except DegenerateProjectionError:
                setups[cfg.n_ue] = None
        setup = setups[cfg.n_ue]
        rcs, cap = _operating_point(plan, value)
        for method in methods:
            if setup is None:
                out.append(SetupOutcome(method, value, feasible=False))
                continue
            key = (cfg.n_ue, cap, method)
            if key not in allocations:
                try:
                    allocations[key] = allocate(setup, method, plan.gamma_c, cap)
                except InfeasibleAllocationError:
                    allocations[key] = None
            sol = allocations[key]
            if sol is None:
                out.append(SetupOutcome(method, value, feasible=False))
                continue
            det, n1, fa, n0 = detection_counts(setup, sol.q, rcs, plan)
            out.append(SetupOutcome(method, value, True, det, n1, fa, n0,
                                    sensing_snr=sol.sensing_snr * rcs, total_power=sol.total_power,
                                    iterations=sol.iterations))
    return out


def run_setup(config: ScenarioConfig, plan: ExperimentPlan, method: str, sweep_value,
              setup_index: int) -> SetupOutcome:
    """Full pipeline for one random setup, one method and one sweep value.

    Infeasible allocations come back as ``feasible=False`` rather than raising.
    """
    plan.validate()
    return _outcomes_for_setup(config, plan, setup_index, [sweep_value], [method])[0]


def _worker(args):
    return _outcomes_for_setup(*args)


def worker_count() -> int:
    env = os.environ.get("CFJCAS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def aggregate(outcomes, plan: ExperimentPlan) -> list[ResultRow]:
    """Pool per-setup outcomes into one row per (sweep value, method)."""
    rows = []
    for value in plan.sweep_values:
        for method in plan.methods:
            sel = [o for o in outcomes if o.method == method and o.sweep_value == value]
            ok = [o for o in sel if o.feasible]
            det = sum(o.detections for o in ok)
            n1 = sum(o.n_h1 for o in ok)
            fa = sum(o.false_alarms for o in ok)
            n0 = sum(o.n_h0 for o in ok)
            nan = float("nan")
            snr = float(np.mean([o.sensing_snr for o in ok])) if ok else nan
            power = float(np.mean([o.total_power for o in ok])) if ok else nan
            rows.append(ResultRow(
                sweep_param=plan.sweep_param, sweep_value=float(value), method=method,
                p_d=det / n1 if n1 else nan, ci95=wilson_halfwidth(det, n1),
                p_fa_achieved=fa / n0 if n0 else nan,
                mean_snr_db=10 * math.log10(snr) if ok and snr > 0 else nan,
                mean_power_dbm=10 * math.log10(power) + 30 if ok and power > 0 else nan,
                feasibility_rate=len(ok) / len(sel) if sel else nan,
                n_trials=n1))
    return rows


def run_sweep(config: ScenarioConfig, plan: ExperimentPlan, workers: int | None = None) -> list[ResultRow]:
    plan.validate()
    config.validate()
    workers = worker_count() if workers is None else workers
    jobs = [(config, plan, i, list(plan.sweep_values), list(plan.methods)) for i in range(plan.n_setups)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            per_setup = list(pool.map(_worker, jobs))
    else:
        per_setup = [_worker(job) for job in jobs]
    return aggregate([o for outs in per_setup for o in outs], plan)


def sweep_rcs(config: ScenarioConfig, plan: ExperimentPlan, **kw) -> list[ResultRow]:
    """Detection probability against the RCS variance (dB)."""
    return run_sweep(config, replace(plan, sweep_param="rcs_db"), **kw)


def sweep_power(config: ScenarioConfig, plan: ExperimentPlan, **kw) -> list[ResultRow]:
    """Detection probability against a total transmit power cap (dBm) applied to every method."""
    return run_sweep(config, replace(plan, sweep_param="p_total_dbm"), **kw)


def sweep_ue(config: ScenarioConfig, plan: ExperimentPlan, **kw) -> list[ResultRow]:
    """Detection probability against the number of UEs."""
    return run_sweep(config, replace(plan, sweep_param="n_ue"), **kw)


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_manifest(path, config: ScenarioConfig, plan: ExperimentPlan, experiment: str, extra=None) -> None:
    from . import __version__

    manifest = {
        "experiment": experiment,
        "seed": plan.seed,
        "scenario": _jsonable(asdict(config)),
        "plan": _jsonable(asdict(plan)),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(_jsonable(extra))
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
