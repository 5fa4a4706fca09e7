#!/usr/bin/env python3
"""Display utilities for the mtd CLI."""

from typing import Dict, Iterable, List, Sequence, Tuple

from rich import box
from rich.table import Table

from .core.model import ModelBundle, SensorAllocation
from .core.product import ProductMdp, ProductState, state_label
from .core.sim import SimReport
from .core.ssp import ValueVector
from .core.strategies import PipelineResult


def create_table(title: str, columns: List[Tuple[str, str]], show_header: bool = True) -> Table:
    """Create a standardized table."""
    table = Table(box=box.ROUNDED, title=title, show_header=show_header)

    for col_name, style in columns:
        table.add_column(col_name, style=style)

    return table


def format_sites(sites: Iterable[Tuple[str, str]]) -> List[str]:
    return [f"{state}:{action}" for state, action in sites]


def model_table(bundle: ModelBundle, name: str) -> Table:
    """Overview of a validated model."""
    table = create_table(f"📊 Model {name}", [("Property", "cyan"), ("Value", "white")])
    constraints = bundle.constraints
    table.add_row("States", str(len(bundle.states)))
    table.add_row("Actions", str(len(bundle.actions)))
    table.add_row("Goal states", ", ".join(sorted(bundle.goal_states)))
    table.add_row("Configurations", ", ".join(bundle.configs))
    table.add_row("Detector sites", f"{len(constraints.detector_sites)} (budget k={constraints.detector_budget})")
    table.add_row("Stealthy sites", f"{len(constraints.stealthy_sites)} (budget h={constraints.stealthy_budget})")
    table.add_row("False negative rate", f"{bundle.fn_model.default:g} "
                                         f"({len(bundle.fn_model.overrides)} site overrides)")
    if bundle.fn_model.stealthy_eps:
        table.add_row("Stealthy false negative", f"{bundle.fn_model.stealthy_eps:g}")
    return table


def product_table(mdp: ProductMdp) -> Table:
    table = create_table("📊 Product MDP", [("Property", "cyan"), ("Value", "white")])
    table.add_row("Product states", str(len(mdp.states)))
    table.add_row("Transient states", str(len(mdp.transient_states)))
    table.add_row("Transitions", str(mdp.num_transitions))
    table.add_row("Detectors", str(len(mdp.detectors)))
    table.add_row("Stealthy sensors", str(len(mdp.stealthy)))
    return table


def allocation_table(bundle: ModelBundle, alloc: SensorAllocation) -> Table:
    """Per-configuration placement of both sensor kinds."""
    table = create_table("🛡️ Sensor placement", [
        ("Configuration", "cyan"),
        ("Intrusion detectors", "green"),
        ("Stealthy sensors", "magenta"),
    ])
    for config in bundle.configs:
        table.add_row(
            config,
            ", ".join(format_sites(alloc.detectors_in(config))) or "-",
            ", ".join(format_sites(alloc.stealthy_in(config))) or "-",
        )
    return table


def results_table(result: PipelineResult) -> Table:
    table = create_table("📊 Attack success rate", [("Quantity", "cyan"), ("Value", "white")])
    det, stealthy = result.detectors, result.stealthy
    table.add_row("V2 optimum on M^x (attacker best response)", f"{det.success_rate:.6f}")
    table.add_row("V2 of attack policy on M^x (perceived)", f"{stealthy.perceived_rate:.6f}")
    table.add_row("V1 of attack policy on M^{x,y} (actual)", f"{stealthy.success_rate:.6f}")
    table.add_row("Reduction from stealthy sensors", f"{100.0 * stealthy.reduction:.2f}%")
    for step, stats in (("Step 1", det.milp_stats), ("Step 2", stealthy.milp_stats)):
        if stats is not None:
            table.add_row(f"{step} solve", f"{stats.nodes} nodes, {stats.wall_time:.3f} s")
    return table


def values_table(mdp: ProductMdp, values: ValueVector, limit: int = 40) -> Table:
    """Largest values first, truncated to ``limit`` rows."""
    table = create_table("📊 Reachability values", [("State", "cyan"), ("Value", "white")])
    ranked: Sequence[ProductState] = sorted(mdp.states, key=lambda z: (-values[z], state_label(z)))
    for z in ranked[:limit]:
        table.add_row(state_label(z), f"{values[z]:.6f}")
    if len(ranked) > limit:
        table.add_row("...", f"{len(ranked) - limit} more")
    return table


def sim_table(report: SimReport, analytic: float) -> Table:
    table = create_table("🎲 Simulation", [("Quantity", "cyan"), ("Value", "white")])
    table.add_row("Trials", str(report.trials))
    table.add_row("Empirical success rate", f"{report.empirical_success_rate:.6f} ± {report.stderr:.6f}")
    table.add_row("Analytic success rate", f"{analytic:.6f}")
    table.add_row("Detection rate", f"{report.detection_rate:.6f}")
    table.add_row("Truncated trials", str(report.truncations))
    return table


def sweep_table(rows: List[Dict[str, object]], columns: List[str]) -> Table:
    table = create_table("📈 Sweep", [(column, "cyan" if column in ("k", "h", "eps") else "white")
                                     for column in columns])
    for row in rows:
        table.add_row(*[_cell(row[column]) for column in columns])
    return table


def _cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
