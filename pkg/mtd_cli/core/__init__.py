"""Core abstractions for MTD sensor allocation."""

from .model import (
    AttackGraph, MtdSchedule, SensorConstraints, FalseNegativeModel, SensorAllocation,
    ModelBundle, AllocationViolation, ViolationKind, validate_allocation, load_model,
)
from .configuration import ConfigurationManager, SweepSpec, get_config_manager, dump_model
from .product import ProductMdp, ProductState, SINK, build_base_mdp, apply_detectors, apply_stealthy
from .ssp import (
    ValueVector, StochasticPolicy, StateRelevanceWeights,
    solve_ssp_lp, value_iteration, extract_policy, evaluate_policy,
)
from .milp import MilpModel, MilpSolution, SolveOptions, SolveStatus, Tolerances, solve, solve_lp_relaxation
from .lp_format import export_lp_file
from .alloc import (
    BigMConstants, DetectorAllocResult, StealthyAllocResult,
    build_step1_milp, build_step2_milp, allocate_detectors, allocate_stealthy,
    brute_force_detectors, brute_force_stealthy,
)
from .strategies import (
    BaseAllocationStrategy, PipelineResult, get_allocation_strategy, register_allocation_strategy,
    get_value_solver,
)
from .sim import SimReport, simulate
from .templating import TemplateEngine, get_template_engine, render_product_dot, render_summary
from .exceptions import (
    MtdError, ModelIOError, ModelParseError, ModelValidationError, AllocationError,
    SolverError, PolicyError, CertificateError, InstanceTooLargeError,
)

__all__ = [
    # Domain model
    'AttackGraph', 'MtdSchedule', 'SensorConstraints', 'FalseNegativeModel', 'SensorAllocation',
    'ModelBundle', 'AllocationViolation', 'ViolationKind', 'validate_allocation', 'load_model',

    # Configuration management
    'ConfigurationManager', 'SweepSpec', 'get_config_manager', 'dump_model',

    # Product MDPs
    'ProductMdp', 'ProductState', 'SINK', 'build_base_mdp', 'apply_detectors', 'apply_stealthy',

    # Reachability
    'ValueVector', 'StochasticPolicy', 'StateRelevanceWeights',
    'solve_ssp_lp', 'value_iteration', 'extract_policy', 'evaluate_policy',

    # MILP
    'MilpModel', 'MilpSolution', 'SolveOptions', 'SolveStatus', 'Tolerances',
    'solve', 'solve_lp_relaxation', 'export_lp_file',

    # Allocation
    'BigMConstants', 'DetectorAllocResult', 'StealthyAllocResult',
    'build_step1_milp', 'build_step2_milp', 'allocate_detectors', 'allocate_stealthy',
    'brute_force_detectors', 'brute_force_stealthy',

    # Strategy system
    'BaseAllocationStrategy', 'PipelineResult', 'get_allocation_strategy',
    'register_allocation_strategy', 'get_value_solver',

    # Simulation
    'SimReport', 'simulate',

    # Templating system
    'TemplateEngine', 'get_template_engine', 'render_product_dot', 'render_summary',

    # Exception hierarchy
    'MtdError', 'ModelIOError', 'ModelParseError', 'ModelValidationError', 'AllocationError',
    'SolverError', 'PolicyError', 'CertificateError', 'InstanceTooLargeError',
]
