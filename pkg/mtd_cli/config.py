#!/usr/bin/env python3
"""Configuration classes for the mtd CLI."""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from simple_parsing import field

from .utils import parse_float_list, parse_int_list

MODEL_HELP = "Path to the model file (JSON or YAML), or 'bundled' for the shipped example"


@dataclass
class ModelArgs:
    model: str = field(positional=True, help=MODEL_HELP)


@dataclass
class BudgetOverrides(ModelArgs):
    """Budget and false negative overrides (-1 = keep the model file's value)."""
    detector_budget: int = field(default=-1, alias="--k", help="Intrusion detectors per configuration")
    stealthy_budget: int = field(default=-1, alias="--h", help="Stealthy sensors per configuration")
    eps: float = field(default=-1.0, alias="--eps", help="Uniform false negative rate of intrusion detectors")

    def overrides(self) -> Dict[str, Any]:
        return {
            "k": self.detector_budget if self.detector_budget >= 0 else None,
            "h": self.stealthy_budget if self.stealthy_budget >= 0 else None,
            "eps": self.eps if self.eps >= 0 else None,
        }


@dataclass
class ValidateConfig(ModelArgs):
    """Validate a model file"""


@dataclass
class ProductConfig(BudgetOverrides):
    """Build the product MDP and dump it as a DOT graph"""
    allocation: str = field(default="", alias="--allocation", help="Allocation JSON; dumps M^{x,y} instead of M")
    include_invalid_actions: bool = field(default=False, alias="--include-invalid-actions",
                                          help="Keep actions undefined in the current configuration as self-loops")
    out: str = field(default="", alias="--out", help="DOT output file (default: stdout)")


@dataclass
class SolveConfig(BudgetOverrides):
    """Compute optimal attack success probabilities"""
    method: str = field(default="lp", alias="--method", help="Value solver: lp or vi")
    tol: float = field(default=1e-9, alias="--tol", help="Value-iteration convergence tolerance")
    allocation: str = field(default="", alias="--allocation", help="Allocation JSON; solves M^{x,y} instead of M")
    out: str = field(default="", alias="--out", help="Write the value vector as JSON")


@dataclass
class AllocateConfig(BudgetOverrides):
    """Synthesize intrusion detector and stealthy sensor placements"""
    mu: float = field(default=0.1, alias="--mu", help="Softmax temperature of the attack policy (0 = hardmax)")
    method: str = field(default="milp", alias="--method", help="Allocation back-end: milp or brute-force")
    workers: int = field(default=1, alias="--workers", help="Threads for brute-force enumeration")
    out: str = field(default="results", alias="--out", help="Output directory")
    export_lp: bool = field(default=False, alias="--export-lp", help="Also write step1.lp and step2.lp")


@dataclass
class SimulateConfig:
    """Monte Carlo check of an allocation's attack success rate"""
    model: str = field(positional=True, help=MODEL_HELP)
    allocation: str = field(positional=True, help="Allocation JSON written by 'mtd allocate'")
    trials: int = field(default=100000, alias="--trials", help="Number of simulated attacks")
    seed: int = field(default=0, alias="--seed", help="Random seed")
    max_steps: int = field(default=10000, alias="--max-steps", help="Truncate trials after this many steps")
    mu: float = field(default=-1.0, alias="--mu", help="Attack policy temperature (-1 = value stored in allocation)")
    eps: float = field(default=-1.0, alias="--eps", help="False negative rate (-1 = value stored in allocation)")
    trace: str = field(default="", alias="--trace", help="Write per-trial JSON-lines traces here")
    out: str = field(default="", alias="--out", help="Write the report JSON here")


@dataclass
class SweepConfig(ModelArgs):
    """Sweep budgets and false negative rates, writing a CSV"""
    spec: str = field(default="", alias="--spec", help="Sweep specification file (YAML/JSON); overrides the list flags")
    detector_budgets: str = field(default="0-4", alias="--k", help="Detector budgets, e.g. '0,1,2' or '0-4'")
    stealthy_budgets: str = field(default="0", alias="--h", help="Stealthy budgets")
    eps: str = field(default="0.3", alias="--eps", help="Comma-separated false negative rates")
    mu: float = field(default=0.1, alias="--mu", help="Attack policy temperature")
    trials: int = field(default=0, alias="--trials", help="Simulated attacks per cell (0 = no simulation)")
    seed: int = field(default=0, alias="--seed", help="Random seed for simulation")
    method: str = field(default="milp", alias="--method", help="Allocation back-end: milp or brute-force")
    workers: int = field(default=1, alias="--workers", help="Cells solved in parallel")
    out: str = field(default="sweep.csv", alias="--out", help="CSV output file")

    def spec_data(self) -> Optional[Dict[str, Any]]:
        """Sweep grid from the list flags, or None when --spec is given."""
        if self.spec:
            return None
        data: Dict[str, Any] = {
            "detector_budgets": parse_int_list(self.detector_budgets),
            "stealthy_budgets": parse_int_list(self.stealthy_budgets),
            "eps_values": parse_float_list(self.eps),
            "temperature": self.mu,
        }
        if self.trials > 0:
            data["trials"] = self.trials
        return data


@dataclass
class ExportLpConfig(BudgetOverrides):
    """Write the Step-1 and Step-2 MILPs in LP format"""
    mu: float = field(default=0.1, alias="--mu", help="Attack policy temperature used by Step 2")
    step: str = field(default="both", alias="--step", help="Which model to export: 1, 2 or both")
    out: str = field(default="lp", alias="--out", help="Output directory")

    def steps(self) -> Tuple[int, ...]:
        choices = {"1": (1,), "2": (2,), "both": (1, 2)}
        if self.step not in choices:
            raise ValueError(f"--step must be 1, 2 or both, got '{self.step}'")
        return choices[self.step]
