"""Command-line entry points.

Subcommands:
    defaults  --out FILE                       write the reference config
    validate  --config FILE                    validate a config file
    solve     --config FILE [--variant bm|flat] [--jobs N] [--out DIR]
    mc-check  --config FILE --paths N --seed S

Exit codes: 0 success, 2 configuration error, 3 numerical failure. The
``CYBERPROV_OUT`` environment variable overrides the output directory;
every other parameter is config-only.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (
    VARIANTS,
    build_contract,
    build_discretization,
    build_frequency,
    build_menu,
    build_severity,
    emit_experiment_defaults,
    load_config,
    save_config,
)
from .compound import compound_fft, expected_aggregate_loss
from .errors import ConfigError, CyberProvError, NumericalInstability
from .simulate import SimulationConfig, simulate
from .solver import solve as solve_dp
from .sweep import run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_defaults(args) -> int:
    config = emit_experiment_defaults()
    save_config(config, args.out)
    print(f"wrote default config to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    load_config(args.config)
    print(f"{args.config}: valid")
    return EXIT_OK


def _out_dir(args, config) -> str:
    env = os.environ.get("CYBERPROV_OUT")
    if args.out:
        return args.out
    if env:
        return env
    return config.output_dir


def _cmd_solve(args) -> int:
    config = load_config(args.config)
    variants = (args.variant,) if args.variant else VARIANTS
    out_dir = _out_dir(args, config)
    results = run_sweep(config, variants=variants, jobs=args.jobs, out_dir=out_dir)
    for variant, result in results.items():
        print(f"{variant}: {len(result.rows)} premiums -> {out_dir}/sweep_{variant}.csv")
        for change in result.regime_changes:
            print(
                f"  regime change at {change['premium_from']}->"
                f"{change['premium_to']}: {change['before']} -> {change['after']}"
            )
    return EXIT_OK


def _cmd_mc_check(args) -> int:
    config = load_config(args.config)
    mc = dict(config.mc)
    if not mc:
        raise ConfigError("mc: config has no Monte Carlo block")
    base_premium = float(mc["base_premium"])
    severity = build_severity(config)
    frequency = build_frequency(config)
    menu = build_menu(config, severity)
    disc = build_discretization(config)
    distributions = {
        d: compound_fft(severity, frequency, menu.gamma(d), disc)
        for d in menu.measures
    }
    expected = {
        d: expected_aggregate_loss(severity, frequency, menu.gamma(d))
        for d in menu.measures
    }
    contract = build_contract(config, menu, base_premium, "bm")
    solution = solve_dp(contract, distributions, expected)
    result = simulate(
        solution,
        severity,
        frequency,
        SimulationConfig(n_paths=args.paths, seed=args.seed),
    )
    diff = result.mean - solution.value
    rel = abs(diff) / abs(solution.value)
    bound = max(3.0 * result.std_error, 5e-3 * abs(solution.value))
    print(f"premium {base_premium}: V0 = {solution.value:.6f}")
    print(
        f"MC ({args.paths} paths, seed {args.seed}): "
        f"{result.mean:.6f} +- {result.std_error:.6f}"
    )
    print(f"difference {diff:+.6f} (rel {rel:.2e}), tolerance {bound:.6f}")
    worst = 0.0
    marg = solution.marginals
    for t in range(1, contract.horizon + 1):
        p = marg[t]
        se = np.sqrt(np.maximum(p * (1 - p), 0.0) / result.n_paths)
        emp = result.state_frequency[t]
        nonzero = se > 0
        if nonzero.any():
            worst = max(worst, float(np.max(np.abs(emp - p)[nonzero] / se[nonzero])))
    print(f"worst state-frequency z-score: {worst:.2f}")
    if abs(diff) > bound:
        print("mc-check FAILED: mean outside tolerance")
        return EXIT_NUMERICAL
    print("mc-check passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyberprov",
        description="Cyber insurance provisioning: sweeps, validation, defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("defaults", help="write the reference experiment config")
    p.add_argument("--out", required=True, help="output config path")
    p.set_defaults(func=_cmd_defaults)

    p = sub.add_parser("validate", help="validate a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="run the premium sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("mc-check", help="Monte Carlo consistency check")
    p.add_argument("--config", required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_mc_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalInstability, CyberProvError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
