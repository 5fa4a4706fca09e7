#!/usr/bin/env python3
"""Reachability (stochastic shortest path) solvers, policy extraction and evaluation."""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .exceptions import PolicyError, SolverError
from .milp import MilpModel, Relation, SolveOptions, SolveStatus, solve_lp_relaxation
from .product import SINK, ProductMdp, ProductState, parse_state_label, state_label

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_FLOOR = 1e-6
DEFAULT_VI_TOL = 1e-9
DEFAULT_VI_MAX_ITER = 100_000
DIRECT_SOLVE_THRESHOLD = 2000
HARDMAX_TIE_TOL = 1e-9
POLISH_MAX_ROUNDS = 50


@dataclass(frozen=True)
class ValueVector:
    """Probability of reaching the goal set from each product state."""
    values: Mapping[ProductState, float]

    def __getitem__(self, z: ProductState) -> float:
        return self.values[z]

    def initial_value(self, mdp: ProductMdp) -> float:
        """iota . v, the success probability from the initial distribution."""
        return float(sum(p * self.values[z] for z, p in mdp.initial_dist.items()))

    def weighted(self, weights: "StateRelevanceWeights") -> float:
        return float(sum(c * self.values[z] for z, c in weights.weights.items()))

    def as_array(self, mdp: ProductMdp) -> np.ndarray:
        return np.array([self.values[z] for z in mdp.states])

    @classmethod
    def from_array(cls, mdp: ProductMdp, values: np.ndarray) -> "ValueVector":
        clipped = np.clip(values, 0.0, 1.0)
        return cls({z: float(clipped[n]) for n, z in enumerate(mdp.states)})

    def max_difference(self, other: "ValueVector") -> float:
        return max(abs(self.values[z] - other.values[z]) for z in self.values)

    def to_dict(self) -> Dict[str, float]:
        return {state_label(z): v for z, v in self.values.items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ValueVector":
        return cls({parse_state_label(label): float(v) for label, v in data.items()})


@dataclass(frozen=True)
class StochasticPolicy:
    """pi(a|z) on the non-absorbing states; ``temperature`` 0 means hardmax."""
    probs: Mapping[ProductState, Mapping[str, float]]
    temperature: float

    def action_probs(self, z: ProductState) -> Mapping[str, float]:
        try:
            return self.probs[z]
        except KeyError:
            raise PolicyError(z, "Policy is undefined at this state")

    def covers(self, z: ProductState) -> bool:
        return z in self.probs

    def to_dict(self) -> Dict[str, object]:
        return {
            "temperature": self.temperature,
            "probs": {state_label(z): dict(dist) for z, dist in self.probs.items()},
        }


@dataclass(frozen=True)
class StateRelevanceWeights:
    """Strictly positive LP objective weights c_z."""
    weights: Mapping[ProductState, float]

    def __post_init__(self) -> None:
        for z, c in self.weights.items():
            if not c > 0.0:
                raise ValueError(f"State relevance weight must be positive at {z}: {c}")

    @classmethod
    def default(cls, mdp: ProductMdp, floor: float = DEFAULT_WEIGHT_FLOOR) -> "StateRelevanceWeights":
        """c_z = iota(z) + floor."""
        return cls({z: mdp.initial_dist.get(z, 0.0) + floor for z in mdp.states})

    @classmethod
    def uniform(cls, mdp: ProductMdp) -> "StateRelevanceWeights":
        return cls({z: 1.0 for z in mdp.states})

    def scaled(self, factor: float) -> "StateRelevanceWeights":
        return StateRelevanceWeights({z: c * factor for z, c in self.weights.items()})

    def get(self, z: ProductState) -> float:
        return self.weights.get(z, 0.0)


def value_var(z: ProductState) -> str:
    return f"v[{state_label(z)}]"


def _boundary_bounds(mdp: ProductMdp, z: ProductState) -> Tuple[float, float]:
    if z == SINK:
        return 0.0, 0.0
    if z in mdp.final_states:
        return 1.0, 1.0
    return 0.0, 1.0


def add_value_variables(model: MilpModel, mdp: ProductMdp, upper: Optional[float] = 1.0) -> Dict[ProductState, str]:
    """Declare v_z for every product state with the goal/sink boundary fixed."""
    names = {}
    for z in mdp.states:
        lb, ub = _boundary_bounds(mdp, z)
        if upper is None and not mdp.is_absorbing(z):
            ub = float("inf")
        names[z] = model.add_variable(value_var(z), lb, ub)
    return names


def _pair_arrays(mdp: ProductMdp) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense transition rows of all (z, a) pairs, grouped by z.

    Returns (P, owner state index per row, start offsets of each owner group).
    """
    index = mdp.index
    rows = []
    owners = []
    for z in mdp.transient_states:
        for action in mdp.available_actions(z):
            row = np.zeros(len(mdp.states))
            for target, p in mdp.successors(z, action).items():
                row[index[target]] += p
            rows.append(row)
            owners.append(index[z])
    if not rows:
        return np.zeros((0, len(mdp.states))), np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    owners_arr = np.array(owners, dtype=int)
    starts = np.flatnonzero(np.r_[True, owners_arr[1:] != owners_arr[:-1]])
    return np.vstack(rows), owners_arr, starts


def _rewards(mdp: ProductMdp) -> np.ndarray:
    return np.array([mdp.reward(z) for z in mdp.states])


def solve_ssp_lp(mdp: ProductMdp, c: Optional[StateRelevanceWeights] = None,
                 opts: Optional[SolveOptions] = None) -> ValueVector:
    """Optimal reachability values as the minimal feasible point of the SSP LP.

    min sum c_z v_z  s.t.  v_z >= sum P(z'|z,a) v_z' for every (z, a),
    v = 1 on goal states, v = 0 at the sink, v >= 0.
    """
    c = c or StateRelevanceWeights.default(mdp)
    model = MilpModel(name="ssp")
    names = add_value_variables(model, mdp, upper=None)
    for z in mdp.transient_states:
        for action in mdp.available_actions(z):
            coeffs: Dict[str, float] = {names[z]: 1.0}
            for target, p in mdp.successors(z, action).items():
                coeffs[names[target]] = coeffs.get(names[target], 0.0) - p
            model.add_constraint(coeffs, Relation.GE, 0.0)
    model.set_objective({names[z]: c.get(z) for z in mdp.states})

    solution = solve_lp_relaxation(model, opts)
    if solution.status != SolveStatus.OPTIMAL:
        raise SolverError(solution.status.value, "Reachability LP has no optimum")
    logger.debug("SSP LP: %d rows, objective %.12g, %d iterations",
                 len(model.constraints), solution.objective_value, solution.stats.lp_iterations)
    values = np.array([solution.value(names[z]) for z in mdp.states])
    return ValueVector.from_array(mdp, values)


def _bellman_sweeps(P: np.ndarray, starts: np.ndarray, updated: np.ndarray, v: np.ndarray,
                    tol: float, max_iter: int) -> int:
    """Sweep v in place until the sup-norm change drops below ``tol``."""
    residual = float("inf")
    for iteration in range(1, max_iter + 1):
        best = np.maximum.reduceat(P @ v, starts)
        residual = float(np.max(np.abs(best - v[updated])))
        v[updated] = best
        if residual < tol:
            return iteration
    raise SolverError("not_converged", "Value iteration did not converge",
                      {"residual": f"{residual:.3g}", "iterations": max_iter})


def _greedy_rows(q: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Row of the first maximising action in each owner group."""
    ends = np.r_[starts[1:], q.size]
    return np.array([start + int(np.argmax(q[start:end])) for start, end in zip(starts, ends)], dtype=int)


def value_iteration(mdp: ProductMdp, tol: float = DEFAULT_VI_TOL,
                    max_iter: int = DEFAULT_VI_MAX_ITER, polish: bool = True) -> ValueVector:
    """Bellman iteration for maximal reachability, starting from v = R.

    With ``polish`` the converged iterate is raised to the exact value of its
    greedy policy and swept again until the greedy policy repeats. Iterates
    stay monotone non-decreasing.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = _rewards(mdp)
    P, owners, starts = _pair_arrays(mdp)
    if owners.size == 0:
        return ValueVector.from_array(mdp, v)
    updated = owners[starts]

    sweeps = _bellman_sweeps(P, starts, updated, v, tol, max_iter)
    rounds = 0
    if polish:
        previous: Optional[np.ndarray] = None
        for rounds in range(1, POLISH_MAX_ROUNDS + 1):
            chosen = _greedy_rows(P @ v, starts)
            if previous is not None and np.array_equal(chosen, previous):
                break
            previous = chosen
            P_pi = np.zeros((len(mdp.states), len(mdp.states)))
            P_pi[updated] = P[chosen]
            np.maximum(v, _chain_values(mdp, P_pi), out=v)
            sweeps += _bellman_sweeps(P, starts, updated, v, tol, max_iter)
    logger.debug("Value iteration converged after %d sweeps and %d policy rounds", sweeps, rounds)
    return ValueVector.from_array(mdp, v)


def q_values(mdp: ProductMdp, v: ValueVector, z: ProductState) -> Dict[str, float]:
    """Q(z, a) = sum P(z'|z,a) v(z') for each action defined at z."""
    return {
        action: sum(p * v[target] for target, p in mdp.successors(z, action).items())
        for action in mdp.available_actions(z)
    }


def extract_policy(mdp: ProductMdp, v: ValueVector, mu: float) -> StochasticPolicy:
    """Softmax attack policy at temperature ``mu``.

    Weights exp((Q(z,a) - v_z)/mu) are normalised over the actions defined at
    z. ``mu == 0`` gives the hardmax policy, uniform over maximising actions.
    """
    if mu < 0:
        raise ValueError("Temperature must be non-negative")
    probs: Dict[ProductState, Dict[str, float]] = {}
    for z in mdp.transient_states:
        q = q_values(mdp, v, z)
        if not q:
            raise PolicyError(z, "Non-absorbing state has no defined action")
        actions = list(q)
        q_arr = np.array([q[a] for a in actions])
        best = q_arr.max()
        if mu == 0:
            weights = (q_arr >= best - HARDMAX_TIE_TOL).astype(float)
        else:
            weights = np.exp((q_arr - best) / mu)
        weights /= weights.sum()
        probs[z] = {a: float(w) for a, w in zip(actions, weights)}
    return StochasticPolicy(probs, mu)


def policy_matrix(mdp: ProductMdp, pi: StochasticPolicy) -> np.ndarray:
    """State-to-state transition matrix of the Markov chain induced by ``pi``."""
    index = mdp.index
    P = np.zeros((len(mdp.states), len(mdp.states)))
    for z in mdp.transient_states:
        row = index[z]
        for action, pa in pi.action_probs(z).items():
            if pa == 0.0:
                continue
            if (z, action) not in mdp.trans:
                raise PolicyError(z, f"Policy uses action {action} which is not defined here")
            for target, p in mdp.successors(z, action).items():
                P[row, index[target]] += pa * p
    return P


def _can_reach(P: np.ndarray, targets: List[int]) -> np.ndarray:
    """Boolean mask of states with a positive-probability path into ``targets``."""
    reach = np.zeros(P.shape[0], dtype=bool)
    reach[targets] = True
    queue = deque(targets)
    predecessors = [np.flatnonzero(P[:, col] > 0.0) for col in range(P.shape[0])]
    while queue:
        col = queue.popleft()
        for row in predecessors[col]:
            if not reach[row]:
                reach[row] = True
                queue.append(row)
    return reach


def _chain_values(mdp: ProductMdp, P: np.ndarray, direct_threshold: int = DIRECT_SOLVE_THRESHOLD,
                  tol: float = DEFAULT_VI_TOL, max_iter: int = 10 * DEFAULT_VI_MAX_ITER) -> np.ndarray:
    """Reachability values of the Markov chain with state-to-state matrix ``P``."""
    index = mdp.index
    finals = [index[z] for z in mdp.final_states]
    values = _rewards(mdp)

    reach = _can_reach(P, finals)
    transient = np.array([index[z] for z in mdp.transient_states], dtype=int)
    solve_idx = transient[reach[transient]] if transient.size else transient
    if solve_idx.size == 0:
        return values

    P_kk = P[np.ix_(solve_idx, solve_idx)]
    b = P[np.ix_(solve_idx, finals)].sum(axis=1) if finals else np.zeros(solve_idx.size)

    if len(mdp.states) < direct_threshold:
        try:
            solution = np.linalg.solve(np.eye(solve_idx.size) - P_kk, b)
        except np.linalg.LinAlgError as e:
            raise SolverError("singular", f"Policy evaluation system is singular: {e}")
    else:
        solution = np.zeros(solve_idx.size)
        for iteration in range(max_iter):
            updated = P_kk @ solution + b
            residual = float(np.max(np.abs(updated - solution)))
            solution = updated
            if residual < tol:
                break
        else:
            raise SolverError("not_converged", "Iterative policy evaluation did not converge",
                              {"residual": f"{residual:.3g}"})
    values[solve_idx] = solution
    return values


def evaluate_policy(mdp: ProductMdp, pi: StochasticPolicy,
                    direct_threshold: int = DIRECT_SOLVE_THRESHOLD,
                    tol: float = DEFAULT_VI_TOL, max_iter: int = 10 * DEFAULT_VI_MAX_ITER) -> ValueVector:
    """Reachability value of a fixed policy: v = P_pi v with the goal/sink boundary.

    States from which the goal is unreachable under ``pi`` get value 0; the
    remaining system is solved directly (LU with partial pivoting) below
    ``direct_threshold`` states and iteratively above it.
    """
    P = policy_matrix(mdp, pi)
    return ValueVector.from_array(mdp, _chain_values(mdp, P, direct_threshold, tol, max_iter))
