#!/usr/bin/env python3
"""Command implementations for the mtd CLI."""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .config import (
    AllocateConfig,
    ExportLpConfig,
    ProductConfig,
    SimulateConfig,
    SolveConfig,
    SweepConfig,
    ValidateConfig,
)
from .core.alloc import DEFAULT_TEMPERATURE, DetectorAllocResult
from .core.configuration import get_config_manager, resolve_model_path
from .core.exceptions import (
    AllocationError,
    ModelIOError,
    ModelParseError,
    exit_code_for,
    format_error_for_user,
    get_error_suggestions,
)
from .core.model import ModelBundle, SensorAllocation, validate_allocation
from .core.product import apply_stealthy, build_base_mdp, build_defender_mdp
from .core.sim import simulate
from .core.ssp import evaluate_policy, extract_policy, value_iteration
from .core.strategies import (
    BaseAllocationStrategy,
    BruteForceAllocationStrategy,
    MilpAllocationStrategy,
    PipelineResult,
    get_allocation_strategy,
    get_value_solver,
)
from .core.templating import render_product_dot, render_summary
from .display import (
    allocation_table,
    format_sites,
    model_table,
    product_table,
    results_table,
    sim_table,
    sweep_table,
    values_table,
)
from .utils import console, read_json, write_json, write_text

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["k", "h", "eps", "attacker_value_V2", "defender_value_V1", "milp_time_step1", "milp_time_step2"]
SIM_COLUMNS = ["empirical_rate", "stderr"]


def _report_error(e: Exception) -> int:
    console.print(format_error_for_user(e), style="red")
    suggestion = get_error_suggestions(e)
    if suggestion:
        console.print(suggestion, style="yellow")
    logger.debug("Command failed", exc_info=True)
    return exit_code_for(e)


def _load_bundle(model: str, overrides: Optional[Dict[str, Any]] = None) -> ModelBundle:
    return get_config_manager().load_bundle(resolve_model_path(model), overrides)


def _strategy(method: str, workers: int) -> BaseAllocationStrategy:
    if method == BruteForceAllocationStrategy.name and workers > 1:
        return BruteForceAllocationStrategy(workers=workers)
    return get_allocation_strategy(method)


def _merge_overrides(stored: Optional[Dict[str, Any]], cli: Dict[str, Any]) -> Dict[str, Any]:
    """CLI overrides win over the ones recorded in an allocation file."""
    merged = dict(stored or {})
    merged.update({key: value for key, value in cli.items() if value is not None})
    return merged


def _parse_allocation(data: Any, bundle: ModelBundle, path: str) -> SensorAllocation:
    """Rebuild an allocation from its JSON form and check it against the model."""
    if not isinstance(data, dict) or "detectors" not in data:
        raise ModelParseError(path, "Not an allocation file (missing 'detectors')")
    try:
        alloc = SensorAllocation.from_dict(data)
    except (AttributeError, TypeError, ValueError) as e:
        raise ModelParseError(path, f"Malformed allocation: {e}")
    violations = validate_allocation(bundle, alloc)
    if violations:
        first = violations[0]
        raise AllocationError(first.site or first.config, f"Allocation does not match the model: {first}",
                              {"violations": len(violations)})
    return alloc


def _load_with_allocation(model: str, allocation_path: str,
                          cli_overrides: Dict[str, Any]) -> Tuple[ModelBundle, SensorAllocation, Dict[str, Any]]:
    data = read_json(allocation_path)
    stored = data.get("overrides") if isinstance(data, dict) else None
    bundle = _load_bundle(model, _merge_overrides(stored, cli_overrides))
    return bundle, _parse_allocation(data, bundle, allocation_path), data


def _step_context(result: Any) -> Dict[str, Any]:
    stats = result.milp_stats
    return {
        "objective": result.objective,
        "nodes": stats.nodes if stats else 0,
        "wall_time": stats.wall_time if stats else 0.0,
    }


def _summary_context(model: str, method: str, result: PipelineResult, mu: float) -> Dict[str, Any]:
    bundle, alloc = result.bundle, result.allocation
    fn_model = bundle.fn_model
    eps = f"{fn_model.default:g}"
    if fn_model.overrides:
        eps += f" ({len(fn_model.overrides)} site overrides)"
    return {
        "model": model,
        "method": method,
        "k": bundle.constraints.detector_budget,
        "h": bundle.constraints.stealthy_budget,
        "eps": eps,
        "mu": mu,
        "attacker_optimum": result.detectors.success_rate,
        "perceived": result.stealthy.perceived_rate,
        "actual": result.stealthy.success_rate,
        "reduction": result.stealthy.reduction,
        "configs": [
            {
                "name": config,
                "detectors": format_sites(alloc.detectors_in(config)),
                "stealthy": format_sites(alloc.stealthy_in(config)),
            }
            for config in bundle.configs
        ],
        "step1": _step_context(result.detectors),
        "step2": _step_context(result.stealthy),
    }


def validate_command(validate_config: ValidateConfig) -> int:
    """Load and validate a model file."""
    try:
        bundle = _load_bundle(validate_config.model)
        console.print(model_table(bundle, validate_config.model))
        console.print(f"✅ Model {validate_config.model} is valid", style="green")
        return 0
    except Exception as e:
        return _report_error(e)


def product_command(product_config: ProductConfig) -> int:
    """Build the product MDP (optionally with sensors applied) and dump it as DOT."""
    try:
        if product_config.allocation:
            bundle, alloc, _ = _load_with_allocation(product_config.model, product_config.allocation,
                                                     product_config.overrides())
        else:
            bundle, alloc = _load_bundle(product_config.model, product_config.overrides()), None
        mdp = build_base_mdp(bundle, include_invalid_actions=product_config.include_invalid_actions)
        if alloc is not None:
            _, mdp = build_defender_mdp(bundle, alloc.x, alloc.y, base=mdp)

        dot = render_product_dot(mdp)
        if product_config.out:
            write_text(dot, product_config.out)
            console.print(product_table(mdp))
            console.print(f"✅ Product MDP written to {product_config.out}", style="green")
        else:
            print(dot, end="")
        return 0
    except Exception as e:
        return _report_error(e)


def solve_command(solve_config: SolveConfig) -> int:
    """Optimal attack success probabilities of M, or of M^{x,y} for a given allocation."""
    try:
        solver = get_value_solver(solve_config.method)
        if solve_config.allocation:
            bundle, alloc, _ = _load_with_allocation(solve_config.model, solve_config.allocation,
                                                     solve_config.overrides())
            _, mdp = build_defender_mdp(bundle, alloc.x, alloc.y)
        else:
            bundle = _load_bundle(solve_config.model, solve_config.overrides())
            mdp = build_base_mdp(bundle)

        values = solver.solve(mdp, tol=solve_config.tol)
        success = values.initial_value(mdp)
        console.print(values_table(mdp, values))
        console.print(f"📊 Attack success probability from the initial distribution: {success:.9f}", style="blue")
        if solve_config.out:
            write_json({"method": solver.name, "success_rate": success, "values": values.to_dict()},
                       solve_config.out)
            console.print(f"✅ Values written to {solve_config.out}", style="green")
        return 0
    except Exception as e:
        return _report_error(e)


def allocate_command(allocate_config: AllocateConfig) -> int:
    """Run both allocation steps and write allocation.json, values.json and summary.txt."""
    try:
        bundle = _load_bundle(allocate_config.model, allocate_config.overrides())
        strategy = _strategy(allocate_config.method, allocate_config.workers)
        constraints = bundle.constraints
        console.print(f"🔧 Allocating with '{strategy.name}' (k={constraints.detector_budget}, "
                      f"h={constraints.stealthy_budget}, mu={allocate_config.mu:g})", style="blue")

        result = strategy.run(bundle, mu=allocate_config.mu)
        out_dir = Path(allocate_config.out)
        alloc = result.allocation

        allocation_data: Dict[str, Any] = {
            "model": allocate_config.model,
            "method": strategy.name,
            "overrides": allocate_config.overrides(),
            "mu": allocate_config.mu,
            **alloc.to_dict(bundle.configs),
            "step1": result.detectors.to_dict(),
            "step2": result.stealthy.to_dict(),
        }
        write_json(allocation_data, out_dir / "allocation.json")
        write_json({
            "attacker_value": result.detectors.attacker_value.to_dict(),
            "policy_value": result.stealthy.policy_value.to_dict(),
            "defender_value": result.stealthy.defender_value.to_dict(),
            "policy": result.stealthy.policy.to_dict(),
        }, out_dir / "values.json")
        summary = render_summary(_summary_context(allocate_config.model, strategy.name, result, allocate_config.mu))
        write_text(summary, out_dir / "summary.txt")

        if allocate_config.export_lp:
            exporter = strategy if isinstance(strategy, MilpAllocationStrategy) else MilpAllocationStrategy()
            result.exported = exporter.export_models(bundle, allocate_config.mu, out_dir,
                                                     detectors=result.detectors)

        console.print(allocation_table(bundle, alloc))
        console.print(results_table(result))
        console.print(f"✅ Results written to {out_dir}", style="green")
        return 0
    except Exception as e:
        return _report_error(e)


def simulate_command(simulate_config: SimulateConfig) -> int:
    """Simulate the attack policy on M^{x,y} and compare with its analytic value."""
    try:
        cli_overrides = {"eps": simulate_config.eps if simulate_config.eps >= 0 else None}
        bundle, alloc, data = _load_with_allocation(simulate_config.model, simulate_config.allocation,
                                                    cli_overrides)
        mu = simulate_config.mu if simulate_config.mu >= 0 else float(data.get("mu", DEFAULT_TEMPERATURE))

        mdp_x, mdp_xy = build_defender_mdp(bundle, alloc.x, alloc.y)
        pi = extract_policy(mdp_x, value_iteration(mdp_x), mu)
        report = simulate(mdp_xy, pi, simulate_config.trials, seed=simulate_config.seed,
                          max_steps=simulate_config.max_steps, trace_path=simulate_config.trace or None)
        analytic = evaluate_policy(mdp_xy, pi).initial_value(mdp_xy)

        payload = report.to_dict()
        payload["analytic_success_rate"] = analytic
        payload["mu"] = mu
        console.print(sim_table(report, analytic))
        console.print_json(json.dumps(payload, sort_keys=True))
        if simulate_config.out:
            write_json(payload, simulate_config.out)
            console.print(f"✅ Report written to {simulate_config.out}", style="green")
        return 0
    except Exception as e:
        return _report_error(e)


def _sweep_cell(strategy: BaseAllocationStrategy, bundle: ModelBundle, mu: float,
                det: DetectorAllocResult, trials: Optional[int], seed: int) -> Dict[str, Any]:
    result = strategy.run(bundle, mu=mu, detectors=det)
    row: Dict[str, Any] = {
        "k": bundle.constraints.detector_budget,
        "h": bundle.constraints.stealthy_budget,
        "eps": bundle.fn_model.default,
        "attacker_value_V2": result.detectors.success_rate,
        "defender_value_V1": result.stealthy.success_rate,
        "milp_time_step1": _step_context(result.detectors)["wall_time"],
        "milp_time_step2": _step_context(result.stealthy)["wall_time"],
    }
    if trials:
        mdp_xy = apply_stealthy(result.mdp_x, result.stealthy.y, bundle.fn_model.stealthy_eps)
        report = simulate(mdp_xy, result.stealthy.policy, trials, seed=seed)
        row["empirical_rate"] = report.empirical_success_rate
        row["stderr"] = report.stderr
    return row


def sweep_command(sweep_config: SweepConfig) -> int:
    """Solve every (k, h, eps) cell of a sweep and write one CSV row per cell."""
    out_path = Path(sweep_config.out)
    started = False
    try:
        manager = get_config_manager()
        spec = (manager.load_sweep_spec(Path(sweep_config.spec)) if sweep_config.spec
                else manager.validate_sweep(sweep_config.spec_data()))
        bundle = _load_bundle(sweep_config.model)
        strategy = _strategy(sweep_config.method, 1)
        columns = SWEEP_COLUMNS + (SIM_COLUMNS if spec.trials else [])
        cells = spec.cells()
        console.print(f"📈 Sweeping {len(cells)} cells with '{strategy.name}'", style="blue")

        # Step 1 does not depend on h: solve it once per (k, eps).
        step1_keys = list(dict.fromkeys((k, eps) for k, _, eps in cells))

        def step1(key: Tuple[int, float]) -> DetectorAllocResult:
            k, eps = key
            cell_bundle = bundle.with_budgets(k=k).with_uniform_eps(eps)
            return strategy.allocate_detectors(cell_bundle, build_base_mdp(cell_bundle))

        def step2(cell: Tuple[int, int, float]) -> Dict[str, Any]:
            k, h, eps = cell
            cell_bundle = bundle.with_budgets(k=k, h=h).with_uniform_eps(eps)
            return _sweep_cell(strategy, cell_bundle, spec.temperature, detectors[(k, eps)],
                               spec.trials, sweep_config.seed)

        with ThreadPoolExecutor(max_workers=max(1, sweep_config.workers)) as executor:
            detectors = dict(zip(step1_keys, executor.map(step1, step1_keys)))
            rows: List[Dict[str, Any]] = []
            out_path.parent.mkdir(parents=True, exist_ok=True)
            with open(out_path, "w", newline="") as f:
                started = True
                writer = csv.DictWriter(f, fieldnames=columns)
                writer.writeheader()
                for row in executor.map(step2, cells):
                    writer.writerow({column: row[column] for column in columns})
                    rows.append(row)

        console.print(sweep_table(rows, columns))
        console.print(f"✅ Sweep written to {out_path}", style="green")
        return 0
    except Exception as e:
        if started:
            out_path.unlink(missing_ok=True)
        if isinstance(e, OSError):
            e = ModelIOError(str(out_path), f"Cannot write sweep: {e}")
        return _report_error(e)


def export_lp_command(export_config: ExportLpConfig) -> int:
    """Write the allocation MILPs in CPLEX LP format."""
    try:
        steps = export_config.steps()
        bundle = _load_bundle(export_config.model, export_config.overrides())
        paths = MilpAllocationStrategy().export_models(bundle, export_config.mu, Path(export_config.out),
                                                       steps=steps)
        for path in paths:
            console.print(f"✅ Wrote {path}", style="green")
        return 0
    except Exception as e:
        return _report_error(e)
