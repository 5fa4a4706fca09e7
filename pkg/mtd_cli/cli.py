#!/usr/bin/env python3
"""Main CLI entry point for the mtd tool."""

import argparse
import sys
from typing import List, Optional

from simple_parsing import ArgumentParser

from .commands import (
    allocate_command,
    export_lp_command,
    product_command,
    simulate_command,
    solve_command,
    sweep_command,
    validate_command,
)
from .config import (
    AllocateConfig,
    ExportLpConfig,
    ProductConfig,
    SimulateConfig,
    SolveConfig,
    SweepConfig,
    ValidateConfig,
)
from .utils import console, setup_logging


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="mtd",
        description="mtd - joint moving target defense and sensor allocation",
        epilog="""Examples:
  # Models
  mtd validate bundled                              Validate the shipped three-host model
  mtd product bundled --out product.dot             Dump the product MDP as DOT
  mtd solve bundled --method vi                     Attack success probabilities by value iteration

  # Allocation
  mtd allocate bundled --k 1 --h 1 --eps 0.3        Place detectors, then stealthy sensors
  mtd allocate bundled --k 2 --export-lp            Also write step1.lp / step2.lp
  mtd allocate model.json --method brute-force      Exhaustive oracle for small models

  # Checks and experiments
  mtd simulate bundled results/allocation.json      Monte Carlo check of an allocation
  mtd sweep bundled --k 0-4 --eps 0.1,0.3,0.5       Budget / false negative sweep to CSV
  mtd export-lp bundled --step 1 --out lp           Write the Step-1 MILP only

Log verbosity is read from MTD_LOG_LEVEL (default WARNING).
""",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    subparsers_dict = parser.add_subparsers(title="Commands", description="Available commands")

    validate_parser = subparsers_dict.add_parser("validate", help="Validate a model file")
    validate_parser.add_arguments(ValidateConfig, dest="validate_config")
    validate_parser.set_defaults(func=lambda args: validate_command(args.validate_config))

    product_parser = subparsers_dict.add_parser("product", help="Dump the product MDP as a DOT graph")
    product_parser.add_arguments(ProductConfig, dest="product_config")
    product_parser.set_defaults(func=lambda args: product_command(args.product_config))

    solve_parser = subparsers_dict.add_parser("solve", help="Compute attack success probabilities (LP or VI)")
    solve_parser.add_arguments(SolveConfig, dest="solve_config")
    solve_parser.set_defaults(func=lambda args: solve_command(args.solve_config))

    allocate_parser = subparsers_dict.add_parser("allocate", help="Allocate intrusion detectors and stealthy sensors")
    allocate_parser.add_arguments(AllocateConfig, dest="allocate_config")
    allocate_parser.set_defaults(func=lambda args: allocate_command(args.allocate_config))

    simulate_parser = subparsers_dict.add_parser("simulate", help="Simulate attacks against an allocation")
    simulate_parser.add_arguments(SimulateConfig, dest="simulate_config")
    simulate_parser.set_defaults(func=lambda args: simulate_command(args.simulate_config))

    sweep_parser = subparsers_dict.add_parser("sweep", help="Sweep budgets and false negative rates to CSV")
    sweep_parser.add_arguments(SweepConfig, dest="sweep_config")
    sweep_parser.set_defaults(func=lambda args: sweep_command(args.sweep_config))

    export_parser = subparsers_dict.add_parser("export-lp", help="Write the allocation MILPs in LP format")
    export_parser.add_arguments(ExportLpConfig, dest="export_config")
    export_parser.set_defaults(func=lambda args: export_lp_command(args.export_config))

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """mtd - joint moving target defense and sensor allocation"""
    setup_logging()
    parser = build_parser()
    args, unknown = parser.parse_known_args(argv)
    if unknown:
        console.print(f"⚠️ Ignoring unrecognized arguments: {' '.join(unknown)}", style="yellow")

    if hasattr(args, 'func'):
        return args.func(args)
    else:
        parser.print_help()
        return 1


if __name__ == "__main__":
    sys.exit(main())
