#!/usr/bin/env python3
"""Allocation and value-solver strategies behind the CLI's --method flags."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .alloc import (
    DEFAULT_TEMPERATURE,
    DetectorAllocResult,
    StealthyAllocResult,
    allocate_detectors,
    allocate_stealthy,
    brute_force_detectors,
    brute_force_stealthy,
    build_step1_milp,
    build_step2_milp,
)
from .lp_format import export_lp_file
from .milp import SolveOptions
from .model import ModelBundle, SensorAllocation
from .product import ProductMdp, apply_detectors, build_base_mdp
from .ssp import StateRelevanceWeights, ValueVector, extract_policy, solve_ssp_lp, value_iteration

logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    """Outcome of the two-step allocation for one (k, h, eps) cell."""
    bundle: ModelBundle
    base: ProductMdp
    detectors: DetectorAllocResult
    stealthy: StealthyAllocResult
    exported: Optional[List[Path]] = None

    @property
    def allocation(self) -> SensorAllocation:
        return SensorAllocation(x=self.detectors.x, y=self.stealthy.y)

    @property
    def mdp_x(self) -> ProductMdp:
        return apply_detectors(self.base, self.detectors.x, self.bundle.fn_model)


class BaseAllocationStrategy(ABC):
    """Abstract base class for allocation back-ends."""

    name = "base"

    @abstractmethod
    def allocate_detectors(self, bundle: ModelBundle, base: ProductMdp) -> DetectorAllocResult:
        """Place intrusion detectors (Step 1)."""
        pass

    @abstractmethod
    def allocate_stealthy(self, bundle: ModelBundle, base: ProductMdp, det: DetectorAllocResult,
                          mu: float) -> StealthyAllocResult:
        """Place stealthy sensors against the attacker's policy on M^x (Step 2)."""
        pass

    def run(self, bundle: ModelBundle, mu: float = DEFAULT_TEMPERATURE,
            detectors: Optional[DetectorAllocResult] = None) -> PipelineResult:
        """Run both steps; a precomputed Step-1 result may be passed in."""
        base = build_base_mdp(bundle)
        det = detectors or self.allocate_detectors(bundle, base)
        stealthy = self.allocate_stealthy(bundle, base, det, mu)
        return PipelineResult(bundle=bundle, base=base, detectors=det, stealthy=stealthy)


class MilpAllocationStrategy(BaseAllocationStrategy):
    """Step-1/Step-2 MILPs solved by the built-in branch-and-bound."""

    name = "milp"

    def __init__(self, opts: Optional[SolveOptions] = None):
        self.opts = opts

    def allocate_detectors(self, bundle: ModelBundle, base: ProductMdp) -> DetectorAllocResult:
        return allocate_detectors(bundle, opts=self.opts, base=base)

    def allocate_stealthy(self, bundle: ModelBundle, base: ProductMdp, det: DetectorAllocResult,
                          mu: float) -> StealthyAllocResult:
        return allocate_stealthy(bundle, det, mu, opts=self.opts, base=base)

    def export_models(self, bundle: ModelBundle, mu: float, out_dir: Path,
                      detectors: Optional[DetectorAllocResult] = None,
                      steps: Sequence[int] = (1, 2)) -> List[Path]:
        """Write the Step-1 and/or Step-2 MILPs in LP format.

        Step 2 depends on the Step-1 placement, which is solved here unless
        ``detectors`` is given.
        """
        base = build_base_mdp(bundle)
        c = StateRelevanceWeights.default(base)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        if 1 in steps:
            step1 = build_step1_milp(base, bundle.constraints, bundle.fn_model, c)
            paths.append(out_dir / "step1.lp")
            export_lp_file(step1, paths[-1])
        if 2 in steps:
            det = detectors or self.allocate_detectors(bundle, base)
            mdp_x = apply_detectors(base, det.x, bundle.fn_model)
            pi_star = extract_policy(mdp_x, det.attacker_value, mu)
            step2 = build_step2_milp(mdp_x, pi_star, bundle.constraints, det.x, c,
                                     stealthy_eps=bundle.fn_model.stealthy_eps)
            paths.append(out_dir / "step2.lp")
            export_lp_file(step2, paths[-1])
        return paths


class BruteForceAllocationStrategy(BaseAllocationStrategy):
    """Exhaustive enumeration of both steps, for small models."""

    name = "brute-force"

    def __init__(self, workers: int = 1):
        self.workers = workers

    def allocate_detectors(self, bundle: ModelBundle, base: ProductMdp) -> DetectorAllocResult:
        return brute_force_detectors(bundle, workers=self.workers, base=base)

    def allocate_stealthy(self, bundle: ModelBundle, base: ProductMdp, det: DetectorAllocResult,
                          mu: float) -> StealthyAllocResult:
        return brute_force_stealthy(bundle, det, mu=mu, workers=self.workers, base=base)


class BaseValueSolver(ABC):
    """Computes optimal reachability values of a product MDP."""

    name = "base"

    @abstractmethod
    def solve(self, mdp: ProductMdp, tol: Optional[float] = None) -> ValueVector:
        pass


class LpValueSolver(BaseValueSolver):
    name = "lp"

    def solve(self, mdp: ProductMdp, tol: Optional[float] = None) -> ValueVector:
        return solve_ssp_lp(mdp)


class ValueIterationSolver(BaseValueSolver):
    name = "vi"

    def solve(self, mdp: ProductMdp, tol: Optional[float] = None) -> ValueVector:
        return value_iteration(mdp) if tol is None else value_iteration(mdp, tol=tol)


# Strategy registries
_strategies: Dict[str, BaseAllocationStrategy] = {
    MilpAllocationStrategy.name: MilpAllocationStrategy(),
    BruteForceAllocationStrategy.name: BruteForceAllocationStrategy(),
}

_value_solvers: Dict[str, BaseValueSolver] = {
    LpValueSolver.name: LpValueSolver(),
    ValueIterationSolver.name: ValueIterationSolver(),
}


def get_allocation_strategy(name: str) -> BaseAllocationStrategy:
    """Get the allocation strategy registered under ``name``."""
    strategy = _strategies.get(name)
    if strategy is None:
        raise ValueError(f"No allocation strategy named '{name}' (available: {', '.join(sorted(_strategies))})")
    return strategy


def register_allocation_strategy(name: str, strategy: BaseAllocationStrategy) -> None:
    """Register a custom allocation strategy."""
    _strategies[name] = strategy


def get_value_solver(name: str) -> BaseValueSolver:
    solver = _value_solvers.get(name)
    if solver is None:
        raise ValueError(f"No value solver named '{name}' (available: {', '.join(sorted(_value_solvers))})")
    return solver


def register_value_solver(name: str, solver: BaseValueSolver) -> None:
    _value_solvers[name] = solver


def list_allocation_strategies() -> List[str]:
    return sorted(_strategies)
