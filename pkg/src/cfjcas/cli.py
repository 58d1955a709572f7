"""Command-line entry point.

    cfjcas run <fig3|fig4|fig5|custom> [--config PATH] [--out DIR] [--seed N] [--key=value ...]
    cfjcas validate --config PATH [--key=value ...]

Any configuration key can be overridden with a flag of the same name
(``--n-ue=8`` sets ``n_ue``); ranges are written ``start:stop:step``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import montecarlo
from .config import RunConfig, load_config, parse_override, resolve_key
from .errors import InfeasibleAllocationError, InvalidConfigError
from .precoding import default_rzf_lambda

log = logging.getLogger("cfjcas")

EXPERIMENTS = ("fig3", "fig4", "fig5", "custom")


def _parse_overrides(tokens) -> dict:
    overrides = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise InvalidConfigError(tok, "unexpected argument")
        name, eq, value = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(tokens):
                raise InvalidConfigError(name, "missing value")
            value = tokens[i + 1]
            i += 1
        key = resolve_key(name)
        overrides[key] = parse_override(key, value)
        i += 1
    return overrides


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfjcas", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write CSV + manifest")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="TOML configuration file")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--seed", type=int, help="experiment seed")
    val = sub.add_parser("validate", help="check a configuration and run a one-setup smoke test")
    val.add_argument("--config", required=True, help="TOML configuration file")
    return parser


def cmd_run(experiment: str, cfg: RunConfig, out_dir: str) -> str:
    scenario, plan = cfg.experiment_plan(experiment)
    os.makedirs(out_dir, exist_ok=True)
    start = time.time()
    rows = montecarlo.run_sweep(scenario, plan)
    csv_path = os.path.join(out_dir, f"{experiment}.csv")
    montecarlo.write_csv(rows, csv_path)
    montecarlo.write_manifest(os.path.join(out_dir, f"{experiment}_manifest.json"), scenario, plan,
                              experiment, extra={"runtime_s": round(time.time() - start, 3),
                                                 "csv": os.path.basename(csv_path)})
    for row in rows:
        print(f"{row.sweep_param}={row.sweep_value:g} {row.method:16s} P_d={row.p_d:.3f} "
              f"+/-{row.ci95:.3f} P_fa={row.p_fa_achieved:.3f} feasible={row.feasibility_rate:.2f}")
    return csv_path


def cmd_validate(cfg: RunConfig) -> None:
    scen = cfg.scenario
    lam = cfg.plan.rzf_lambda
    if lam is None:
        lam = default_rzf_lambda(max(scen.n_ue, 1), scen.noise_variance, scen.n_tx, scen.m_antennas, scen.p_tx_max)
    print("OK")
    print(f"noise variance      {scen.noise_variance:.3e} W")
    print(f"RZF lambda          {lam:.3e}")
    print(f"antennas per AP     {scen.m_antennas}")
    print(f"transmit antennas   {scen.n_tx * scen.m_antennas}")
    print(f"SINR threshold      {cfg.plan.gamma_c:.3g} (linear)")
    plan = replace(cfg.plan, n_setups=1, n_rcs_draws=20, sweep_param="rcs_db",
                   sweep_values=(float(cfg.custom_rcs_db),))
    setup = montecarlo.prepare_setup(scen, plan, 0)
    try:
        base = montecarlo.allocate(setup, "baseline", plan.gamma_c)
        print(f"smoke setup         baseline total power {10 * np.log10(base.total_power) + 30:.2f} dBm")
    except InfeasibleAllocationError:
        print("smoke setup         baseline infeasible for setup 0")


def main(argv=None) -> int:
    parser = _parser()
    args, rest = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        overrides = _parse_overrides(rest)
        if args.command == "run" and args.seed is not None:
            overrides["seed"] = args.seed
        cfg = load_config(args.config, overrides)
        if args.command == "run":
            cmd_run(args.experiment, cfg, args.out)
        else:
            cmd_validate(cfg)
    except InvalidConfigError as exc:
        print(f"cfjcas: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cfjcas: {exc}", file=sys.stderr)
        return 2
    except InfeasibleAllocationError as exc:
        print(f"cfjcas: infeasible: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
