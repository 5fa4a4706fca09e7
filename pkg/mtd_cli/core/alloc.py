#!/usr/bin/env python3
"""Two-step sensor allocation.

Step 1 places intrusion detectors against a fully informed attacker by a
big-M MILP over the attacker's reachability LP. Step 2 fixes the attacker's
softmax policy on the resulting MDP and places stealthy sensors by a MILP
over the policy-evaluation equations of the defender's MDP. Brute-force
enumerations of both steps serve as oracles.
"""

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .exceptions import CertificateError, InstanceTooLargeError, PolicyError, SolverError
from .milp import MilpModel, MilpSolution, Relation, SolveOptions, SolveStats, SolveStatus, solve
from .model import FalseNegativeModel, ModelBundle, SensorConstraints, SensorSite, Site
from .product import SINK, ProductMdp, ProductState, apply_detectors, apply_stealthy, build_base_mdp
from .ssp import (
    StateRelevanceWeights,
    StochasticPolicy,
    ValueVector,
    add_value_variables,
    evaluate_policy,
    extract_policy,
    value_iteration,
)

logger = logging.getLogger(__name__)

CERTIFICATE_WARN_TOL = 1e-5
CERTIFICATE_FAIL_TOL = 1e-4
DEFAULT_ENUMERATION_LIMIT = 1_000_000
SLOW_SOLVE_SECONDS = 10.0
DEFAULT_TEMPERATURE = 0.1


@dataclass(frozen=True)
class BigMConstants:
    """Bounds on (aux - value) products; M=1, m=-1 suffice since values lie in [0, 1]."""
    M: float = 1.0
    m: float = -1.0


@dataclass(frozen=True)
class DetectorAllocResult:
    x: FrozenSet[SensorSite]
    attacker_value: ValueVector
    objective: float
    milp_stats: Optional[SolveStats]
    success_rate: float
    method: str = "milp"

    def to_dict(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "objective": self.objective,
            "success_rate": self.success_rate,
            "stats": self.milp_stats.to_dict() if self.milp_stats else None,
        }


@dataclass(frozen=True)
class StealthyAllocResult:
    """Stealthy placement ``y`` and the attack policy's value on M^{x,y} (V1) and M^x (V2)."""
    y: FrozenSet[SensorSite]
    defender_value: ValueVector
    objective: float
    milp_stats: Optional[SolveStats]
    policy: StochasticPolicy
    policy_value: ValueVector
    success_rate: float
    perceived_rate: float
    method: str = "milp"

    @property
    def reduction(self) -> float:
        """Relative drop (V2 - V1) / V2 of the attack success rate."""
        if self.perceived_rate <= 0.0:
            return 0.0
        return (self.perceived_rate - self.success_rate) / self.perceived_rate

    def to_dict(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "objective": self.objective,
            "success_rate": self.success_rate,
            "perceived_rate": self.perceived_rate,
            "reduction": self.reduction,
            "temperature": self.policy.temperature,
            "stats": self.milp_stats.to_dict() if self.milp_stats else None,
        }


def site_var(prefix: str, site: SensorSite) -> str:
    state, config, action = site
    return f"{prefix}[{state}|{config}|{action}]"


def _flow_var(prefix: str, z: ProductState, action: str, target: ProductState) -> str:
    return f"{prefix}[{z}|{action}|{target}]"


def _goal_states(mdp: ProductMdp) -> Set[str]:
    return {z.state for z in mdp.final_states}


def eligible_sites(mdp: ProductMdp, eligible: Iterable[Site],
                   exclude: Iterable[SensorSite] = ()) -> List[SensorSite]:
    """(s, i, a) coordinates with (s, a) eligible and defined in configuration i.

    Goal states are absorbing, so sensors there can never trigger and are skipped.
    """
    eligible = set(eligible)
    exclude = set(exclude)
    goals = _goal_states(mdp)
    order = {config: n for n, config in enumerate(mdp.configs)}
    sites = [
        site for site in mdp.defined_sites
        if (site[0], site[2]) in eligible and site not in exclude and site[0] not in goals
    ]
    return sorted(sites, key=lambda site: (order[site[1]], site[0], site[2]))


def _add_link_rows(model: MilpModel, aux: str, value: str, scale: float, binary: str,
                   keep: float, big_m: BigMConstants, tag: str, skip_lower_on: bool = False) -> None:
    """Force aux = keep*scale*value when binary=1 and aux = scale*value when binary=0."""
    on = keep * scale
    # aux - on*value within [m(1-b), M(1-b)]
    model.add_constraint({aux: 1.0, value: -on, binary: big_m.M}, Relation.LE, big_m.M, f"{tag}.on_ub")
    if not skip_lower_on:
        model.add_constraint({aux: 1.0, value: -on, binary: big_m.m}, Relation.GE, big_m.m, f"{tag}.on_lb")
    # aux - scale*value within [m*b, M*b]
    model.add_constraint({aux: 1.0, value: -scale, binary: -big_m.M}, Relation.LE, 0.0, f"{tag}.off_ub")
    model.add_constraint({aux: 1.0, value: -scale, binary: -big_m.m}, Relation.GE, 0.0, f"{tag}.off_lb")


def _add_budget_rows(model: MilpModel, binaries: Dict[SensorSite, str], configs: Sequence[str],
                     budget: int, prefix: str) -> None:
    for config in configs:
        terms = {name: 1.0 for site, name in binaries.items() if site[1] == config}
        if terms:
            model.add_constraint(terms, Relation.LE, float(budget), f"{prefix}_budget[{config}]")


def build_step1_milp(mdp: ProductMdp, constraints: SensorConstraints, fn_model: FalseNegativeModel,
                     c: Optional[StateRelevanceWeights] = None,
                     big_m: BigMConstants = BigMConstants()) -> MilpModel:
    """Detector allocation MILP on the sensor-free product MDP.

    Successor terms of a monitorable (s, j, a) go through w = eps*v' (detector
    placed) or w = v' (not placed). Other terms, including failed attempts of
    actions undefined in j, use v' directly.
    """
    if mdp.detectors or mdp.stealthy:
        raise ValueError("Step 1 expects the sensor-free product MDP")
    c = c or StateRelevanceWeights.default(mdp)
    model = MilpModel(name="step1")
    v = add_value_variables(model, mdp)
    x = {site: model.add_binary(site_var("x", site))
         for site in eligible_sites(mdp, constraints.detector_sites)}

    for z in mdp.transient_states:
        for action in mdp.available_actions(z):
            coeffs: Dict[str, float] = {v[z]: 1.0}
            for target, p in mdp.successors(z, action).items():
                site = (z.state, target.config, action)
                if target != SINK and site in x:
                    w = model.add_variable(_flow_var("w", z, action, target))
                    coeffs[w] = coeffs.get(w, 0.0) - p
                    _add_link_rows(model, w, v[target], 1.0, x[site],
                                   fn_model.eps(z.state, action), big_m, w)
                else:
                    coeffs[v[target]] = coeffs.get(v[target], 0.0) - p
            model.add_constraint(coeffs, Relation.GE, 0.0, f"bellman[{z}|{action}]")

    _add_budget_rows(model, x, mdp.configs, constraints.detector_budget, "detector")
    model.set_objective({v[z]: c.get(z) for z in mdp.states})
    logger.debug("Step-1 MILP: %s", model.stats())
    return model


def _reachable(mdp: ProductMdp) -> Set[ProductState]:
    seen = set(mdp.initial_dist)
    stack = list(seen)
    while stack:
        z = stack.pop()
        for action in mdp.available_actions(z):
            for target in mdp.successors(z, action):
                if target not in seen:
                    seen.add(target)
                    stack.append(target)
    return seen


def build_step2_milp(mdp_x: ProductMdp, pi_star: StochasticPolicy, constraints: SensorConstraints,
                     x: Iterable[SensorSite], c: Optional[StateRelevanceWeights] = None,
                     big_m: BigMConstants = BigMConstants(), stealthy_eps: float = 0.0) -> MilpModel:
    """Stealthy-sensor MILP over the evaluation equations of ``pi_star``.

    v_z = sum q over (a, z'), where q = P^x(z'|z,a) pi(a|z) v_z' unless a
    stealthy sensor sits on (s, j, a) for z' = (s', j), in which case q is
    scaled by ``stealthy_eps`` (zero for a perfect sensor).
    """
    c = c or StateRelevanceWeights.default(mdp_x)
    x = frozenset(x)
    model = MilpModel(name="step2")
    v = add_value_variables(model, mdp_x)
    y = {site: model.add_binary(site_var("y", site))
         for site in eligible_sites(mdp_x, constraints.stealthy_sites, exclude=x)}
    reachable = _reachable(mdp_x)

    for z in mdp_x.transient_states:
        if not pi_star.covers(z):
            if z in reachable:
                raise PolicyError(z, "Attack policy is undefined at a reachable state")
            model.add_constraint({v[z]: 1.0}, Relation.EQ, 0.0, f"unreached[{z}]")
            continue
        coeffs: Dict[str, float] = {v[z]: 1.0}
        for action, pa in pi_star.action_probs(z).items():
            if pa == 0.0:
                continue
            for target, p in mdp_x.successors(z, action).items():
                if target == SINK:
                    continue
                kappa = p * pa
                site = (z.state, target.config, action)
                if site in y:
                    q = model.add_variable(_flow_var("q", z, action, target))
                    coeffs[q] = coeffs.get(q, 0.0) - 1.0
                    _add_link_rows(model, q, v[target], kappa, y[site], stealthy_eps, big_m, q,
                                   skip_lower_on=stealthy_eps == 0.0)
                else:
                    coeffs[v[target]] = coeffs.get(v[target], 0.0) - kappa
        model.add_constraint(coeffs, Relation.EQ, 0.0, f"evaluate[{z}]")

    _add_budget_rows(model, y, mdp_x.configs, constraints.stealthy_budget, "stealthy")
    model.set_objective({v[z]: c.get(z) for z in mdp_x.states})
    logger.debug("Step-2 MILP: %s", model.stats())
    return model


def _require_solution(solution: MilpSolution, step: str) -> None:
    if solution.status == SolveStatus.OPTIMAL:
        return
    if solution.status == SolveStatus.GAP_LIMIT and solution.has_solution:
        logger.warning("%s stopped at the node limit with gap %.3g; using the incumbent",
                       step, solution.stats.gap)
        return
    raise SolverError(solution.status.value, f"{step} MILP has no optimal solution")


def _selected(solution: MilpSolution, binaries: Dict[SensorSite, str]) -> FrozenSet[SensorSite]:
    return frozenset(site for site, name in binaries.items() if solution.value(name) > 0.5)


def _certify(expected: float, actual: float, what: str) -> None:
    diff = abs(expected - actual)
    if diff > CERTIFICATE_FAIL_TOL:
        raise CertificateError(expected, actual, f"{what} disagrees with the MILP objective")
    if diff > CERTIFICATE_WARN_TOL:
        logger.warning("%s differs from the MILP objective by %.3g", what, diff)


def _warn_if_slow(step: str, stats: SolveStats) -> None:
    if stats.wall_time > SLOW_SOLVE_SECONDS:
        logger.warning("%s MILP took %.1f s (%d nodes)", step, stats.wall_time, stats.nodes)


def allocate_detectors(bundle: ModelBundle, c: Optional[StateRelevanceWeights] = None,
                       opts: Optional[SolveOptions] = None, base: Optional[ProductMdp] = None,
                       big_m: BigMConstants = BigMConstants()) -> DetectorAllocResult:
    """Solve Step 1 and certify the attacker's value on M^x by value iteration."""
    base = base or build_base_mdp(bundle)
    c = c or StateRelevanceWeights.default(base)
    model = build_step1_milp(base, bundle.constraints, bundle.fn_model, c, big_m)
    solution = solve(model, opts)
    _require_solution(solution, "Step-1")
    _warn_if_slow("Step-1", solution.stats)

    binaries = {site: site_var("x", site) for site in eligible_sites(base, bundle.constraints.detector_sites)}
    x = _selected(solution, binaries)
    mdp_x = apply_detectors(base, x, bundle.fn_model)
    attacker_value = value_iteration(mdp_x)
    _certify(solution.objective_value, attacker_value.weighted(c), "Attacker value on M^x")

    result = DetectorAllocResult(
        x=x,
        attacker_value=attacker_value,
        objective=solution.objective_value,
        milp_stats=solution.stats,
        success_rate=attacker_value.initial_value(mdp_x),
    )
    logger.info("Step 1: %d detectors, attack success rate %.6f", len(x), result.success_rate)
    return result


def _stealthy_result(mdp_x: ProductMdp, y: FrozenSet[SensorSite], pi_star: StochasticPolicy,
                     stealthy_eps: float, objective: float, stats: Optional[SolveStats],
                     method: str) -> Tuple[StealthyAllocResult, ValueVector]:
    mdp_xy = apply_stealthy(mdp_x, y, stealthy_eps)
    defender_value = evaluate_policy(mdp_xy, pi_star)
    policy_value = evaluate_policy(mdp_x, pi_star)
    result = StealthyAllocResult(
        y=y,
        defender_value=defender_value,
        objective=objective,
        milp_stats=stats,
        policy=pi_star,
        policy_value=policy_value,
        success_rate=defender_value.initial_value(mdp_xy),
        perceived_rate=policy_value.initial_value(mdp_x),
        method=method,
    )
    return result, defender_value


def allocate_stealthy(bundle: ModelBundle, det: DetectorAllocResult, mu: float = DEFAULT_TEMPERATURE,
                      c: Optional[StateRelevanceWeights] = None, opts: Optional[SolveOptions] = None,
                      base: Optional[ProductMdp] = None,
                      big_m: BigMConstants = BigMConstants()) -> StealthyAllocResult:
    """Solve Step 2 against the softmax policy of M^x and certify V1 on M^{x,y}."""
    base = base or build_base_mdp(bundle)
    mdp_x = apply_detectors(base, det.x, bundle.fn_model)
    c = c or StateRelevanceWeights.default(mdp_x)
    pi_star = extract_policy(mdp_x, det.attacker_value, mu)
    stealthy_eps = bundle.fn_model.stealthy_eps

    model = build_step2_milp(mdp_x, pi_star, bundle.constraints, det.x, c, big_m, stealthy_eps)
    solution = solve(model, opts)
    _require_solution(solution, "Step-2")
    _warn_if_slow("Step-2", solution.stats)

    binaries = {site: site_var("y", site)
                for site in eligible_sites(mdp_x, bundle.constraints.stealthy_sites, exclude=det.x)}
    y = _selected(solution, binaries)
    result, defender_value = _stealthy_result(mdp_x, y, pi_star, stealthy_eps,
                                              solution.objective_value, solution.stats, "milp")
    _certify(solution.objective_value, defender_value.weighted(c), "Defender value on M^{x,y}")
    logger.info("Step 2: %d stealthy sensors, attack success rate %.6f (perceived %.6f)",
                len(y), result.success_rate, result.perceived_rate)
    return result


def _subsets(sites: Sequence[SensorSite], budget: int) -> List[Tuple[SensorSite, ...]]:
    return [combo for size in range(min(budget, len(sites)) + 1)
            for combo in itertools.combinations(sites, size)]


def _candidates(mdp: ProductMdp, sites: List[SensorSite], budget: int,
                limit: int) -> List[FrozenSet[SensorSite]]:
    """Every per-configuration subset combination within ``budget``, guarded by ``limit``."""
    per_config = [_subsets([s for s in sites if s[1] == config], budget) for config in mdp.configs]
    count = math.prod(len(options) for options in per_config)
    if count > limit:
        raise InstanceTooLargeError(count, limit)
    return [frozenset(itertools.chain.from_iterable(combo)) for combo in itertools.product(*per_config)]


def _argmin(candidates: List[FrozenSet[SensorSite]], score: Callable[[FrozenSet[SensorSite]], float],
            workers: int) -> Tuple[FrozenSet[SensorSite], float]:
    """Lowest score; near-ties go to the lexicographically smallest site list."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            scores = list(executor.map(score, candidates))
    else:
        scores = [score(candidate) for candidate in candidates]

    best, best_score = candidates[0], scores[0]
    for candidate, value in zip(candidates[1:], scores[1:]):
        if value < best_score - 1e-12 or (abs(value - best_score) <= 1e-12 and sorted(candidate) < sorted(best)):
            best, best_score = candidate, value
    return best, best_score


def brute_force_detectors(bundle: ModelBundle, c: Optional[StateRelevanceWeights] = None,
                          limit: int = DEFAULT_ENUMERATION_LIMIT, workers: int = 1,
                          base: Optional[ProductMdp] = None) -> DetectorAllocResult:
    """Enumerate every feasible detector placement and keep the best by value iteration."""
    base = base or build_base_mdp(bundle)
    c = c or StateRelevanceWeights.default(base)
    sites = eligible_sites(base, bundle.constraints.detector_sites)
    candidates = _candidates(base, sites, bundle.constraints.detector_budget, limit)
    logger.info("Enumerating %d detector placements", len(candidates))

    def score(x: FrozenSet[SensorSite]) -> float:
        return value_iteration(apply_detectors(base, x, bundle.fn_model)).weighted(c)

    start = time.perf_counter()
    x, objective = _argmin(candidates, score, workers)
    mdp_x = apply_detectors(base, x, bundle.fn_model)
    attacker_value = value_iteration(mdp_x)
    stats = SolveStats(nodes=len(candidates), wall_time=time.perf_counter() - start)
    return DetectorAllocResult(
        x=x,
        attacker_value=attacker_value,
        objective=objective,
        milp_stats=stats,
        success_rate=attacker_value.initial_value(mdp_x),
        method="brute-force",
    )


def brute_force_stealthy(bundle: ModelBundle, det: DetectorAllocResult,
                         pi_star: Optional[StochasticPolicy] = None, mu: float = DEFAULT_TEMPERATURE,
                         c: Optional[StateRelevanceWeights] = None, limit: int = DEFAULT_ENUMERATION_LIMIT,
                         workers: int = 1, base: Optional[ProductMdp] = None) -> StealthyAllocResult:
    """Enumerate every feasible stealthy placement and keep the best by policy evaluation."""
    base = base or build_base_mdp(bundle)
    mdp_x = apply_detectors(base, det.x, bundle.fn_model)
    c = c or StateRelevanceWeights.default(mdp_x)
    if pi_star is None:
        pi_star = extract_policy(mdp_x, det.attacker_value, mu)
    stealthy_eps = bundle.fn_model.stealthy_eps
    sites = eligible_sites(mdp_x, bundle.constraints.stealthy_sites, exclude=det.x)
    candidates = _candidates(mdp_x, sites, bundle.constraints.stealthy_budget, limit)
    logger.info("Enumerating %d stealthy placements", len(candidates))

    def score(y: FrozenSet[SensorSite]) -> float:
        return evaluate_policy(apply_stealthy(mdp_x, y, stealthy_eps), pi_star).weighted(c)

    start = time.perf_counter()
    y, objective = _argmin(candidates, score, workers)
    stats = SolveStats(nodes=len(candidates), wall_time=time.perf_counter() - start)
    result, _ = _stealthy_result(mdp_x, y, pi_star, stealthy_eps, objective, stats, "brute-force")
    return result
