#!/usr/bin/env python3
"""Mixed-integer linear programs with a self-contained solver.

``MilpModel`` is a small builder for minimisation problems over continuous
and binary variables. ``solve`` runs best-bound branch-and-bound on the
binaries; every node is an LP solved by a two-phase dense tableau simplex.
"""

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from .exceptions import SolverError

logger = logging.getLogger(__name__)

INF = math.inf
REFACTOR_INTERVAL = 50
SAFE_REFACTOR_INTERVAL = 10


class VarType(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Relation(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    GAP_LIMIT = "gap_limit"


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the simplex and branch-and-bound."""
    feasibility: float = 1e-7
    integrality: float = 1e-6
    gap: float = 1e-8
    pivot: float = 1e-7
    verification: float = 1e-6
    optimality: float = 1e-9


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SolveOptions:
    tolerances: Tolerances = DEFAULT_TOLERANCES
    max_nodes: int = 100_000
    time_limit: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.tolerances.gap


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float = 0.0
    ub: float = INF
    vtype: VarType = VarType.CONTINUOUS

    @property
    def is_binary(self) -> bool:
        return self.vtype == VarType.BINARY


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, float]
    relation: Relation
    rhs: float
    name: Optional[str] = None


@dataclass
class MilpModel:
    """Minimisation MILP over named variables."""
    name: str = "model"
    variables: List[Variable] = field(default_factory=list)
    objective: Dict[str, float] = field(default_factory=dict)
    constraints: List[Constraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._index = {var.name: n for n, var in enumerate(self.variables)}

    def add_variable(self, name: str, lb: float = 0.0, ub: float = INF,
                     vtype: VarType = VarType.CONTINUOUS) -> str:
        if name in self._index:
            raise ValueError(f"Duplicate variable: {name}")
        if vtype == VarType.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, lb, ub, vtype))
        return name

    def add_binary(self, name: str) -> str:
        return self.add_variable(name, 0.0, 1.0, VarType.BINARY)

    def add_constraint(self, coeffs: Mapping[str, float], relation: Relation, rhs: float,
                       name: Optional[str] = None) -> Constraint:
        merged: Dict[str, float] = {}
        for var, coef in coeffs.items():
            merged[var] = merged.get(var, 0.0) + coef
        constraint = Constraint({v: c for v, c in merged.items() if c != 0.0}, Relation(relation), rhs, name)
        self.constraints.append(constraint)
        return constraint

    def set_objective(self, coeffs: Mapping[str, float]) -> None:
        self.objective = {v: c for v, c in coeffs.items() if c != 0.0}

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def index_of(self, name: str) -> int:
        return self._index[name]

    def variable(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    @property
    def binaries(self) -> List[str]:
        return [var.name for var in self.variables if var.is_binary]

    def with_bounds(self, bounds: Mapping[str, Tuple[float, float]]) -> "MilpModel":
        """Copy with some variable bounds replaced."""
        variables = [
            replace(var, lb=bounds[var.name][0], ub=bounds[var.name][1]) if var.name in bounds else var
            for var in self.variables
        ]
        return replace(self, variables=variables, objective=dict(self.objective),
                       constraints=list(self.constraints))

    def fix(self, values: Mapping[str, float]) -> "MilpModel":
        """Copy with the given variables fixed to constants."""
        return self.with_bounds({name: (value, value) for name, value in values.items()})

    def relaxed(self) -> "MilpModel":
        """Copy with integrality dropped."""
        variables = [replace(var, vtype=VarType.CONTINUOUS) for var in self.variables]
        return replace(self, variables=variables, objective=dict(self.objective),
                       constraints=list(self.constraints))

    def validate(self) -> None:
        for var in self.variables:
            if math.isnan(var.lb) or math.isnan(var.ub):
                raise ValueError(f"NaN bound on {var.name}")
            if var.is_binary and (var.lb < 0.0 or var.ub > 1.0):
                raise ValueError(f"Binary variable {var.name} has bounds outside [0, 1]")
        expressions = [("objective", self.objective)]
        expressions.extend((c.name or f"c{n}", c.coeffs) for n, c in enumerate(self.constraints))
        for label, coeffs in expressions:
            for var, coef in coeffs.items():
                if var not in self._index:
                    raise ValueError(f"Undeclared variable {var} in {label}")
                if not math.isfinite(coef):
                    raise ValueError(f"Non-finite coefficient for {var} in {label}")
        for n, c in enumerate(self.constraints):
            if not math.isfinite(c.rhs):
                raise ValueError(f"Non-finite right-hand side in {c.name or f'c{n}'}")

    def stats(self) -> Dict[str, int]:
        return {
            "variables": len(self.variables),
            "binaries": len(self.binaries),
            "constraints": len(self.constraints),
            "nonzeros": sum(len(c.coeffs) for c in self.constraints),
        }


@dataclass(frozen=True)
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    gap: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": self.nodes,
            "lp_iterations": self.lp_iterations,
            "wall_time": self.wall_time,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class MilpSolution:
    status: SolveStatus
    objective_value: float
    assignment: Dict[str, float]
    stats: SolveStats = SolveStats()

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    @property
    def has_solution(self) -> bool:
        return bool(self.assignment)

    def value(self, name: str) -> float:
        return self.assignment[name]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "objective": self.objective_value,
            "stats": self.stats.to_dict(),
        }


class _LpResult(NamedTuple):
    status: SolveStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int


@dataclass
class _LpData:
    """Dense arrays of a model, shared by all branch-and-bound nodes."""
    A: np.ndarray
    senses: List[Relation]
    b: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray

    @classmethod
    def from_model(cls, model: MilpModel) -> "_LpData":
        n = len(model.variables)
        A = np.zeros((len(model.constraints), n))
        for row, constraint in enumerate(model.constraints):
            for var, coef in constraint.coeffs.items():
                A[row, model.index_of(var)] += coef
        c = np.zeros(n)
        for var, coef in model.objective.items():
            c[model.index_of(var)] += coef
        return cls(
            A=A,
            senses=[con.relation for con in model.constraints],
            b=np.array([con.rhs for con in model.constraints], dtype=float),
            c=c,
            lb=np.array([var.lb for var in model.variables], dtype=float),
            ub=np.array([var.ub for var in model.variables], dtype=float),
            binary=np.array([var.is_binary for var in model.variables], dtype=bool),
        )


class _NumericalTrouble(Exception):
    """The working tableau no longer describes a feasible basis of the original rows."""


class _Tableau:
    """Dense simplex tableau kept in step with the original constraint rows.

    The working rows are rebuilt from ``original`` and the current basis every
    ``refactor_every`` pivots and again before optimality or unboundedness is
    reported. The last row holds reduced costs.
    """

    def __init__(self, original: np.ndarray, basis: np.ndarray, tol: Tolerances, refactor_every: int):
        self.original = original
        self.m = original.shape[0]
        self.ncols = original.shape[1] - 1
        self.T = np.zeros((self.m + 1, self.ncols + 1))
        self.T[:self.m] = original
        self.basis = basis
        self.tol = tol
        self.refactor_every = refactor_every
        self.cost = np.zeros(self.ncols)

    @property
    def objective(self) -> float:
        return float(-self.T[self.m, -1])

    def basic_values(self) -> np.ndarray:
        values = np.zeros(self.ncols)
        values[self.basis] = self.T[:self.m, -1]
        return values

    def price(self, cost: np.ndarray) -> None:
        self.cost = cost
        rows = self.T[:self.m]
        self.T[self.m, :-1] = cost - cost[self.basis] @ rows[:, :-1]
        self.T[self.m, -1] = -cost[self.basis] @ rows[:, -1]

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        nonzero = np.flatnonzero(factors)
        if nonzero.size:
            T[nonzero] -= np.outer(factors[nonzero], T[row])
        T[nonzero, col] = 0.0
        self.basis[row] = col
        rhs = T[:self.m, -1]
        rhs[(rhs < 0.0) & (rhs > -2.0 * self.tol.feasibility)] = 0.0

    def refactor(self) -> None:
        try:
            rows = np.linalg.solve(self.original[:, self.basis], self.original)
        except np.linalg.LinAlgError as e:
            raise _NumericalTrouble(f"singular basis ({e})") from e
        rows[:, self.basis] = np.eye(self.m)
        rhs = rows[:, -1]
        if rhs.size and rhs.min() < -self.tol.verification:
            raise _NumericalTrouble(f"basic solution infeasible by {-rhs.min():.3g}")
        rhs[rhs < 0.0] = 0.0
        self.T[:self.m] = rows
        self.price(self.cost)

    def leaving_row(self, col: int, bland: bool) -> Optional[int]:
        """Ratio test on column ``col``; None when the column is unbounded."""
        tol = self.tol
        column = self.T[:self.m, col]
        threshold = tol.pivot * max(1.0, float(np.abs(column).max()))
        eligible = np.flatnonzero(column > threshold)
        if eligible.size == 0:
            return None
        rhs = np.maximum(self.T[eligible, -1], 0.0)
        pivots = column[eligible]
        ratios = rhs / pivots
        if bland:
            ties = eligible[ratios <= ratios.min() + 1e-12]
            return int(ties[np.argmin(self.basis[ties])])
        # two passes: bound the step with relaxed rows, then take the largest pivot within it
        limit = ((rhs + tol.feasibility) / pivots).min()
        within = np.flatnonzero(ratios <= limit)
        return int(eligible[within[np.argmax(pivots[within])]])

    def run(self, phase: str, n_enter: int, bland: bool) -> Tuple[SolveStatus, int]:
        """Primal simplex; only the first ``n_enter`` columns may enter the basis."""
        tol = self.tol
        m = self.m
        stall_limit = 5 * (m + self.ncols)
        max_iter = 50 * (m + self.ncols) + 10_000
        stall = 0
        since_refactor = 0
        last_obj = self.T[m, -1]

        for iteration in range(max_iter):
            d = self.T[m, :n_enter]
            col = -1
            if bland:
                candidates = np.flatnonzero(d < -tol.optimality)
                if candidates.size:
                    col = int(candidates[0])
            elif n_enter:
                best = int(np.argmin(d))
                if d[best] < -tol.optimality:
                    col = best
            row = self.leaving_row(col, bland) if col >= 0 else None

            if col < 0 or row is None:
                if since_refactor:
                    self.refactor()
                    since_refactor = 0
                    continue
                status = SolveStatus.OPTIMAL if col < 0 else SolveStatus.UNBOUNDED
                return status, iteration

            self.pivot(row, col)
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                self.refactor()
                since_refactor = 0

            if abs(self.T[m, -1] - last_obj) <= 1e-12:
                stall += 1
                if not bland and stall > stall_limit:
                    bland = True
                    logger.debug("%s: no progress after %d pivots, switching to Bland's rule", phase, stall)
            else:
                stall = 0
                last_obj = self.T[m, -1]

        raise SolverError("numerical_failure", "Simplex did not terminate",
                          {"phase": phase, "iterations": max_iter})


def _violation(data: _LpData, x: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    """Largest row or bound violation of ``x``."""
    worst = float(max(np.max(lb - x, initial=0.0), np.max(x - ub, initial=0.0)))
    if not data.senses:
        return worst
    residual = data.A @ x - data.b
    senses = np.array([sense.value for sense in data.senses])
    residual = np.where(senses == Relation.GE.value, -residual,
                        np.where(senses == Relation.EQ.value, np.abs(residual), residual))
    return max(worst, float(residual.max()))


def _solve_lp(data: _LpData, lb: np.ndarray, ub: np.ndarray, tol: Tolerances) -> _LpResult:
    """Solve min c.x s.t. A x (senses) b, lb <= x <= ub.

    A run that loses feasibility is repeated under Bland's rule with more
    frequent refactorisation before it is reported as a numerical failure.
    """
    try:
        return _simplex(data, lb, ub, tol, bland=False, refactor_every=REFACTOR_INTERVAL)
    except _NumericalTrouble as e:
        logger.debug("simplex: %s; retrying under Bland's rule", e)
    try:
        return _simplex(data, lb, ub, tol, bland=True, refactor_every=SAFE_REFACTOR_INTERVAL)
    except _NumericalTrouble as e:
        raise SolverError("numerical_failure", "Simplex lost feasibility", {"reason": str(e)}) from e


def _simplex(data: _LpData, lb: np.ndarray, ub: np.ndarray, tol: Tolerances,
             bland: bool, refactor_every: int) -> _LpResult:
    if np.any(lb > ub + tol.feasibility):
        return _LpResult(SolveStatus.INFEASIBLE, None, INF, 0)

    n = len(data.c)
    fixed = (ub - lb) <= 1e-12
    # every x is x0 + sum(sign * column) over the columns it owns
    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    x0[fixed] = lb[fixed]

    owners: List[int] = []
    signs: List[float] = []
    uppers: List[float] = []
    for j in range(n):
        if fixed[j]:
            continue
        if np.isfinite(lb[j]):
            owners.append(j)
            signs.append(1.0)
            uppers.append(ub[j] - lb[j])
        elif np.isfinite(ub[j]):
            owners.append(j)
            signs.append(-1.0)
            uppers.append(INF)
        else:
            owners.extend((j, j))
            signs.extend((1.0, -1.0))
            uppers.extend((INF, INF))

    owners_arr = np.array(owners, dtype=int)
    signs_arr = np.array(signs)
    n_struct = len(owners)
    A_struct = data.A[:, owners_arr] * signs_arr if n_struct else np.zeros((data.A.shape[0], 0))
    rhs = data.b - data.A @ x0
    cost = data.c[owners_arr] * signs_arr if n_struct else np.zeros(0)

    upper_rows = [(k, u) for k, u in enumerate(uppers) if math.isfinite(u)]
    m = data.A.shape[0] + len(upper_rows)
    M = np.zeros((m, n_struct))
    M[:data.A.shape[0]] = A_struct
    senses = list(data.senses)
    r = np.zeros(m)
    r[:data.A.shape[0]] = rhs
    for offset, (k, u) in enumerate(upper_rows):
        M[data.A.shape[0] + offset, k] = 1.0
        r[data.A.shape[0] + offset] = u
        senses.append(Relation.LE)

    # rows without variables must already hold
    empty = ~np.any(M != 0.0, axis=1) if n_struct else np.ones(m, dtype=bool)
    for row in np.flatnonzero(empty):
        sense, value = senses[row], r[row]
        if ((sense == Relation.LE and value < -tol.feasibility)
                or (sense == Relation.GE and value > tol.feasibility)
                or (sense == Relation.EQ and abs(value) > tol.feasibility)):
            return _LpResult(SolveStatus.INFEASIBLE, None, INF, 0)
    keep_rows = np.flatnonzero(~empty)
    M = M[keep_rows]
    r = r[keep_rows]
    senses = [senses[row] for row in keep_rows]
    m = len(keep_rows)

    if n_struct == 0:
        return _LpResult(SolveStatus.OPTIMAL, x0.copy(), float(data.c @ x0), 0)

    slack_rows = [row for row in range(m) if senses[row] != Relation.EQ]
    n_slack = len(slack_rows)
    S = np.zeros((m, n_slack))
    for k, row in enumerate(slack_rows):
        S[row, k] = 1.0 if senses[row] == Relation.LE else -1.0

    negative = r < 0.0
    M[negative] *= -1.0
    S[negative] *= -1.0
    r[negative] *= -1.0

    basis = np.full(m, -1, dtype=int)
    for k, row in enumerate(slack_rows):
        if S[row, k] > 0.0:
            basis[row] = n_struct + k
    art_rows = np.flatnonzero(basis < 0)
    n_art = len(art_rows)
    first_art = n_struct + n_slack
    ncols = first_art + n_art

    original = np.zeros((m, ncols + 1))
    original[:, :n_struct] = M
    original[:, n_struct:first_art] = S
    for k, row in enumerate(art_rows):
        original[row, first_art + k] = 1.0
        basis[row] = first_art + k
    original[:, -1] = r
    tableau = _Tableau(original, basis, tol, refactor_every)

    iterations = 0
    if n_art:
        phase_one = np.zeros(ncols)
        phase_one[first_art:] = 1.0
        tableau.price(phase_one)
        status, its = tableau.run("phase 1", ncols, bland)
        iterations += its
        if status == SolveStatus.UNBOUNDED:
            raise _NumericalTrouble("phase 1 reported an unbounded ray")
        if tableau.objective > tol.feasibility:
            return _LpResult(SolveStatus.INFEASIBLE, None, INF, iterations)

        # drive remaining artificials out; rows where none can leave are redundant and keep them at zero
        for row in range(m):
            if tableau.basis[row] < first_art:
                continue
            entries = np.abs(tableau.T[row, :first_art])
            col = int(np.argmax(entries))
            if entries[col] > tol.pivot * max(1.0, float(entries.max())):
                tableau.T[row, -1] = 0.0
                tableau.pivot(row, col)
        tableau.refactor()

    phase_two = np.zeros(ncols)
    phase_two[:n_struct] = cost
    tableau.price(phase_two)
    status, its = tableau.run("phase 2", first_art, bland)
    iterations += its
    if status == SolveStatus.UNBOUNDED:
        return _LpResult(SolveStatus.UNBOUNDED, None, -INF, iterations)

    values = tableau.basic_values()
    x = x0.copy()
    np.add.at(x, owners_arr, signs_arr * values[:n_struct])
    violation = _violation(data, x, lb, ub)
    if violation > tol.verification:
        raise _NumericalTrouble(f"optimal basis violates the constraints by {violation:.3g}")
    return _LpResult(SolveStatus.OPTIMAL, x, float(data.c @ x), iterations)


def _most_fractional(x: np.ndarray, binary_idx: np.ndarray, tol: Tolerances) -> Optional[int]:
    """Binary with value closest to 0.5; ties go to the first declared."""
    if binary_idx.size == 0:
        return None
    values = x[binary_idx]
    fractionality = np.abs(values - np.round(values))
    if fractionality.max() <= tol.integrality:
        return None
    return int(binary_idx[int(np.argmax(fractionality))])


def _assignment(model: MilpModel, x: np.ndarray, snap: np.ndarray) -> Dict[str, float]:
    values = x.copy()
    values[snap] = np.round(values[snap])
    return {var.name: float(values[n]) for n, var in enumerate(model.variables)}


def solve(model: MilpModel, opts: Optional[SolveOptions] = None) -> MilpSolution:
    """Solve a MILP by best-bound branch-and-bound with most-fractional branching."""
    opts = opts or SolveOptions()
    tol = opts.tolerances
    model.validate()
    start = time.perf_counter()
    data = _LpData.from_model(model)
    binary_idx = np.flatnonzero(data.binary)

    lb0 = data.lb.copy()
    ub0 = data.ub.copy()
    lb0[binary_idx] = np.ceil(lb0[binary_idx] - tol.integrality)
    ub0[binary_idx] = np.floor(ub0[binary_idx] + tol.integrality)

    root = _solve_lp(data, lb0, ub0, tol)
    nodes = 1
    iterations = root.iterations
    if root.status != SolveStatus.OPTIMAL:
        stats = SolveStats(nodes, iterations, time.perf_counter() - start, INF)
        objective = INF if root.status == SolveStatus.INFEASIBLE else -INF
        logger.debug("%s: root LP %s", model.name, root.status.value)
        return MilpSolution(root.status, objective, {}, stats)

    incumbent: Optional[np.ndarray] = None
    incumbent_obj = INF
    counter = itertools.count()
    heap: List[Tuple[float, int, np.ndarray, np.ndarray, int]] = []

    def consider(result: _LpResult, lb: np.ndarray, ub: np.ndarray) -> None:
        nonlocal incumbent, incumbent_obj
        if result.objective >= incumbent_obj - opts.gap:
            return
        branch_var = _most_fractional(result.x, binary_idx, tol)
        if branch_var is None:
            incumbent, incumbent_obj = result.x, result.objective
            logger.debug("%s: incumbent %.10g at node %d", model.name, incumbent_obj, nodes)
        else:
            heapq.heappush(heap, (result.objective, next(counter), lb, ub, branch_var))

    consider(root, lb0, ub0)
    status = SolveStatus.OPTIMAL
    while heap:
        if nodes >= opts.max_nodes or (
                opts.time_limit is not None and time.perf_counter() - start > opts.time_limit):
            status = SolveStatus.GAP_LIMIT
            break
        bound, _, lb, ub, j = heapq.heappop(heap)
        if bound >= incumbent_obj - opts.gap:
            continue
        for value in (0.0, 1.0):
            child_lb, child_ub = lb.copy(), ub.copy()
            child_lb[j] = child_ub[j] = value
            result = _solve_lp(data, child_lb, child_ub, tol)
            nodes += 1
            iterations += result.iterations
            if result.status == SolveStatus.OPTIMAL:
                consider(result, child_lb, child_ub)
            elif result.status == SolveStatus.UNBOUNDED:
                stats = SolveStats(nodes, iterations, time.perf_counter() - start, INF)
                return MilpSolution(SolveStatus.UNBOUNDED, -INF, {}, stats)
        if nodes % 500 == 0:
            logger.debug("%s: %d nodes, %d open, incumbent %.10g", model.name, nodes, len(heap), incumbent_obj)

    best_bound = min((entry[0] for entry in heap), default=incumbent_obj)
    gap = max(0.0, incumbent_obj - best_bound) if incumbent is not None else INF
    stats = SolveStats(nodes, iterations, time.perf_counter() - start, gap)

    if incumbent is None:
        final = SolveStatus.GAP_LIMIT if status == SolveStatus.GAP_LIMIT else SolveStatus.INFEASIBLE
        return MilpSolution(final, INF, {}, stats)

    logger.debug("%s: %s objective %.10g after %d nodes, %d LP iterations",
                 model.name, status.value, incumbent_obj, nodes, iterations)
    assignment = _assignment(model, incumbent, binary_idx)
    violation = max_violation(model, assignment)
    if violation > tol.verification:
        raise SolverError("numerical_failure", "Incumbent violates the model constraints",
                          {"violation": f"{violation:.3g}"})
    return MilpSolution(status, incumbent_obj, assignment, stats)


def solve_lp_relaxation(model: MilpModel, opts: Optional[SolveOptions] = None) -> MilpSolution:
    """Solve the model with integrality dropped."""
    opts = opts or SolveOptions()
    model.validate()
    start = time.perf_counter()
    data = _LpData.from_model(model)
    result = _solve_lp(data, data.lb, data.ub, opts.tolerances)
    stats = SolveStats(1, result.iterations, time.perf_counter() - start, 0.0)
    if result.status != SolveStatus.OPTIMAL:
        objective = INF if result.status == SolveStatus.INFEASIBLE else -INF
        return MilpSolution(result.status, objective, {}, stats)
    assignment = {var.name: float(result.x[n]) for n, var in enumerate(model.variables)}
    return MilpSolution(SolveStatus.OPTIMAL, result.objective, assignment, stats)


def max_violation(model: MilpModel, assignment: Mapping[str, float]) -> float:
    """Largest constraint or bound violation of an assignment."""
    worst = 0.0
    for var in model.variables:
        value = assignment[var.name]
        worst = max(worst, var.lb - value, value - var.ub)
    for constraint in model.constraints:
        lhs = sum(coef * assignment[var] for var, coef in constraint.coeffs.items())
        if constraint.relation == Relation.LE:
            worst = max(worst, lhs - constraint.rhs)
        elif constraint.relation == Relation.GE:
            worst = max(worst, constraint.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - constraint.rhs))
    return worst
