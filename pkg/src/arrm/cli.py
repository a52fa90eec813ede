"""Command-line entry point: one subcommand per experiment.

Exit status 0 on success; config or solver problems print a message to
stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ConfigError, RunConfig, load_config
from .simulator import SimulationError


def _add_common(parser):
    parser.add_argument("--config", default=None, help="INI config file (defaults reproduce the reference scenario)")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--reps", type=int, default=None, help="replication count override")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--threads", type=int, default=None, help="worker processes (0 = all cores)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arrm",
        description="Anticipatory OFDMA resource allocation experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, help_text in (
        ("fig2", "single-user SE vs prediction horizon"),
        ("fig3", "stalling vs number of users"),
        ("fig4", "SE vs stalling trade-off over the stall-price sweep"),
        ("fig5", "SE at the stalling QoS target vs baseline"),
        ("table2", "solve-time scaling of one optimization"),
        ("custom", "the configured scenario as-is"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "fig5":
            p.add_argument(
                "--from-fig4", default=None,
                help="reuse an existing fig4.csv instead of re-running the sweep",
            )
    return parser


def _resolve(args) -> RunConfig:
    run = load_config(args.config) if args.config else RunConfig()
    scenario = run.scenario
    experiment = run.experiment
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    if args.reps is not None:
        experiment = dataclasses.replace(experiment, replications=args.reps)
    if args.out is not None:
        experiment = dataclasses.replace(experiment, output_dir=args.out)
    if args.threads is not None:
        experiment = dataclasses.replace(experiment, threads=args.threads)
    return dataclasses.replace(run, scenario=scenario, experiment=experiment)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = _resolve(args)
    except (ConfigError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    from . import experiments

    out_dir = run.experiment.output_dir
    try:
        if args.experiment == "fig2":
            experiments.run_fig2(run, out_dir)
        elif args.experiment == "fig3":
            experiments.run_fig3(run, out_dir)
        elif args.experiment == "fig4":
            experiments.run_fig4(run, out_dir)
        elif args.experiment == "fig5":
            rows = None
            if args.from_fig4:
                rows = experiments.load_fig4_csv(args.from_fig4)
            experiments.run_fig5(run, out_dir, fig4_rows=rows)
        elif args.experiment == "table2":
            experiments.run_table2(run, out_dir)
        elif args.experiment == "custom":
            experiments.run_custom(run, out_dir)
    except (SimulationError, RuntimeError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
