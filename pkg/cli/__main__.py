"""
python -m cli <command> --config <experiment.yaml>

Exit codes: 0 success, 2 invalid config or input file, 3 infeasible tuple spec, 4 ill-conditioned prior.
"""

import argparse
import sys

from core.errors import (ConfigError, CsvParseError, IllConditionedError, InfeasibleTupleSpecError,
                         UnsplittableDegenerateError)

from .commands import cmd_estimate_prior, cmd_gen, cmd_perturb, cmd_report, cmd_sweep, cmd_train
from .experiment_config import load_experiment

COMMANDS = {
    "gen": (cmd_gen, "Write the pool, tuple and audit files of one seed."),
    "train": (cmd_train, "Train every method on every seed and write the comparison table."),
    "estimate-prior": (cmd_estimate_prior, "Estimate the class prior of the unlabeled pool."),
    "sweep": (cmd_sweep, "Run the Delta-sweep and the robustness window."),
    "perturb": (cmd_perturb, "Run the prior, count-flip and pi-band perturbation families."),
    "report": (cmd_report, "Rebuild the comparison table from an earlier train run."),
}

# first match wins
EXIT_CODES = ((ConfigError, 2), (InfeasibleTupleSpecError, 3), (IllConditionedError, 4),
              (UnsplittableDegenerateError, 4), (CsvParseError, 2), (ValueError, 2), (OSError, 2))


def build_parser():
    parser = argparse.ArgumentParser(prog="python -m cli", description="NTMP experiments from a YAML config.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", type=str, required=True, help="Path to the YAML experiment config.")
        sub.add_argument("--quiet", action="store_true", help="Only print warnings and errors.")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    command, _ = COMMANDS[args.command]
    try:
        exp = load_experiment(args.config)
        command(exp, verbose=not args.quiet)
    except tuple(error for error, _ in EXIT_CODES) as exc:
        code = next(code for error, code in EXIT_CODES if isinstance(exc, error))
        print(f"[ERROR] {type(exc).__name__}: {exc}")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
