"""TOML run configuration: scenario template, experiment plan and overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfigError
from .montecarlo import METHODS, ExperimentPlan
from .scenario import ScenarioConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# config key -> ScenarioConfig field
SCENARIO_KEYS = {
    "area_side_m": "area_side",
    "n_tx": "n_tx",
    "n_rx": "n_rx",
    "n_ue": "n_ue",
    "m_antennas": "m_antennas",
    "p_tx_max_w": "p_tx_max",
    "noise_dbm": "noise_dbm",
    "carrier_hz": "carrier_frequency",
    "bandwidth_hz": "bandwidth",
    "ap_layout": "ap_layout",
    "layout_seed": "layout_seed",
    "ap_positions": "ap_positions",
    "ap_rotations_deg": "ap_rotations",
    "heights.ap_m": "ap_height",
    "heights.ue_m": "ue_height",
    "heights.target_m": "target_height",
}

# config key -> ExperimentPlan field
PLAN_KEYS = {
    "seed": "seed",
    "rcs_mode": "rcs_mode",
    "rzf_lambda": "rzf_lambda",
    "plan.methods": "methods",
    "plan.n_setups": "n_setups",
    "plan.n_rcs_draws": "n_rcs_draws",
    "plan.n_noise_draws": "n_noise_draws",
    "plan.n_calibration": "n_calibration",
    "plan.tau": "tau",
    "plan.gamma_c_db": "gamma_c_db",
    "plan.p_fa": "p_fa",
    "plan.alphabet": "alphabet",
}

# sweep grids and fixed operating points, kept on RunConfig
SWEEP_KEYS = {
    "plan.rcs_db": "rcs_db",
    "plan.p_total_dbm": "p_total_dbm",
    "plan.n_ue_grid": "n_ue_grid",
    "plan.fig4_rcs_db": "fig4_rcs_db",
    "plan.fig5_rcs_db": "fig5_rcs_db",
    "plan.custom_rcs_db": "custom_rcs_db",
    "plan.p_total_cap_dbm": "p_total_cap_dbm",
}

ALL_KEYS = {**SCENARIO_KEYS, **PLAN_KEYS, **SWEEP_KEYS}


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    plan: ExperimentPlan = field(default_factory=ExperimentPlan)
    rcs_db: tuple = (-40.0, -35.0, -30.0, -25.0, -20.0, -15.0, -10.0)
    p_total_dbm: tuple = (30.0, 32.0, 34.0, 36.0, 38.0, 40.0, 42.0, 44.0)
    n_ue_grid: tuple = (2, 4, 6, 8)
    fig4_rcs_db: float = -20.0
    fig5_rcs_db: float = -30.0
    custom_rcs_db: float = -25.0
    p_total_cap_dbm: float | None = None
    custom_methods_set: bool = False

    def validate(self) -> None:
        self.scenario.validate()
        self.plan.validate()
        if any(n < 0 for n in self.n_ue_grid):
            raise InvalidConfigError("plan.n_ue_grid", "UE counts must be >= 0")

    def experiment_plan(self, experiment: str) -> tuple[ScenarioConfig, ExperimentPlan]:
        """Scenario template and plan for a named experiment."""
        plan = self.plan
        if experiment == "fig3":
            plan = replace(plan, sweep_param="rcs_db", sweep_values=tuple(self.rcs_db),
                           p_total_dbm=self.p_total_cap_dbm)
        elif experiment == "fig4":
            plan = replace(plan, sweep_param="p_total_dbm", sweep_values=tuple(self.p_total_dbm),
                           rcs_db=self.fig4_rcs_db)
        elif experiment == "fig5":
            plan = replace(plan, sweep_param="n_ue", sweep_values=tuple(int(n) for n in self.n_ue_grid),
                           rcs_db=self.fig5_rcs_db, p_total_dbm=self.p_total_cap_dbm)
        elif experiment == "custom":
            methods = plan.methods if self.custom_methods_set else ("jcas_with_s0",)
            plan = replace(plan, sweep_param="rcs_db", sweep_values=(float(self.custom_rcs_db),),
                           methods=methods, p_total_dbm=self.p_total_cap_dbm)
        else:
            raise InvalidConfigError("experiment", f"unknown experiment {experiment!r}")
        plan.validate()
        return self.scenario, plan


def parse_range(text: str) -> tuple:
    """``start:stop:step`` (inclusive stop) or a comma list into a tuple of numbers."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step == 0 or (stop - start) / step < 0:
            raise ValueError(f"range {text!r} is empty")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(_number(repr(start + i * step)) for i in range(count))
    return tuple(_value(p) for p in text.split(",") if p)


def _number(text: str):
    value = float(text)
    return int(value) if value.is_integer() and "e" not in text.lower() and "." not in text else value


def _value(text: str):
    text = text.strip()
    try:
        return _number(text)
    except ValueError:
        pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    return text


def parse_override(key: str, text: str):
    """Interpret a command-line value for config key `key`."""
    if key in ("plan.methods",):
        return tuple(p for p in text.split(",") if p)
    if ":" in text or "," in text:
        return parse_range(text)
    return _value(text)


def _flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in data.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, full + "."))
        else:
            out[full] = value
    return out


def resolve_key(name: str) -> str:
    """Map a flag name (``n-ue``, ``gamma_c_db``, ``plan.tau``) to a full config key."""
    name = name.replace("-", "_")
    if name in ALL_KEYS:
        return name
    for prefix in ("plan.", "heights."):
        if prefix + name in ALL_KEYS:
            return prefix + name
    raise InvalidConfigError(name, "unknown configuration key")


def _tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def build_run_config(values: dict) -> RunConfig:
    """RunConfig from a flat ``{full_key: value}`` mapping; unknown keys are rejected."""
    scen, plan, sweep = {}, {}, {}
    for key, value in values.items():
        if key in SCENARIO_KEYS:
            scen[SCENARIO_KEYS[key]] = value
        elif key in PLAN_KEYS:
            plan[PLAN_KEYS[key]] = value
        elif key in SWEEP_KEYS:
            sweep[SWEEP_KEYS[key]] = value
        else:
            raise InvalidConfigError(key, "unknown configuration key")
    if "ap_positions" in scen and scen["ap_positions"] is not None:
        scen["ap_positions"] = tuple(tuple(p) for p in scen["ap_positions"])
    if "ap_rotations" in scen and scen["ap_rotations"] is not None:
        scen["ap_rotations"] = tuple(float(np.deg2rad(v)) for v in _tuple(scen["ap_rotations"]))
    if "methods" in plan:
        plan["methods"] = _tuple(plan["methods"])
    for key in ("rcs_db", "p_total_dbm", "n_ue_grid"):
        if key in sweep:
            value = sweep[key]
            if isinstance(value, str):
                try:
                    value = parse_range(value)
                except ValueError as exc:
                    raise InvalidConfigError(f"plan.{key}", str(exc)) from exc
            sweep[key] = _tuple(value)
    for key, value in {**scen, **plan, **sweep}.items():
        if isinstance(value, tuple) and key not in ("ap_positions", "ap_rotations", "methods", "rcs_db",
                                                     "p_total_dbm", "n_ue_grid"):
            raise InvalidConfigError(key, "expects a single value")
    try:
        scenario = ScenarioConfig(**scen)
        exp_plan = ExperimentPlan(**plan)
    except TypeError as exc:
        raise InvalidConfigError("config", str(exc)) from exc
    cfg = RunConfig(scenario=scenario, plan=exp_plan, custom_methods_set="methods" in plan, **sweep)
    cfg.validate()
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a TOML file (optional) and apply ``{key: value}`` overrides on top."""
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            values = _flatten(tomllib.load(fh))
        for key in values:
            if key not in ALL_KEYS:
                raise InvalidConfigError(key, "unknown configuration key")
    for key, value in (overrides or {}).items():
        values[resolve_key(key)] = value
    return build_run_config(values)


__all__ = ["RunConfig", "load_config", "parse_range", "parse_override", "resolve_key", "METHODS"]
