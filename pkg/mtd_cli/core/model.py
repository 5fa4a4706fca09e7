#!/usr/bin/env python3
"""Domain types: attack graphs, MTD schedules, sensor constraints and allocations."""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from .exceptions import ModelValidationError

logger = logging.getLogger(__name__)

PROB_TOL = 1e-9

# (state, action) pair eligible for a sensor
Site = Tuple[str, str]
# (state, configuration, action) coordinate of a placed sensor
SensorSite = Tuple[str, str, str]


def _check_distribution(dist: Mapping[str, float], field_name: str, location: str,
                        allow_zero: bool = False) -> None:
    """Check that ``dist`` is a probability distribution within PROB_TOL."""
    for target, prob in dist.items():
        if not math.isfinite(prob) or prob > 1.0 + PROB_TOL or prob < 0.0 or (prob == 0.0 and not allow_zero):
            raise ModelValidationError(
                field_name, prob,
                f"Probability out of range at {location} -> {target}",
            )
    total = math.fsum(dist.values())
    if abs(total - 1.0) > PROB_TOL:
        raise ModelValidationError(
            field_name, f"{total:.12g}",
            f"Probabilities at {location} do not sum to 1",
        )


@dataclass(frozen=True)
class AttackGraph:
    """Attack graph of one configuration as a probabilistic transition system."""
    states: FrozenSet[str]
    actions: FrozenSet[str]
    transitions: Mapping[Site, Mapping[str, float]]
    initial_dist: Mapping[str, float]
    goal_states: FrozenSet[str]

    def is_defined(self, state: str, action: str) -> bool:
        """Whether T(.|state, action) is defined in this configuration."""
        return (state, action) in self.transitions

    def successors(self, state: str, action: str) -> Mapping[str, float]:
        """Outcome distribution of ``action`` at ``state`` (empty if undefined)."""
        return self.transitions.get((state, action), {})

    def actions_at(self, state: str) -> List[str]:
        """Actions with a defined transition at ``state``, sorted."""
        return sorted(a for (s, a) in self.transitions if s == state)

    def validate(self, name: str = "graph") -> None:
        """Check the transition-system invariants, raising on the first violation."""
        for state in self.goal_states:
            if state not in self.states:
                raise ModelValidationError("goal_states", state, f"Unknown goal state in {name}")
        for (state, action), dist in self.transitions.items():
            location = f"configs.{name}.transitions.{state}.{action}"
            if state not in self.states:
                raise ModelValidationError("transitions", state, f"Unknown state at {location}")
            if action not in self.actions:
                raise ModelValidationError("transitions", action, f"Unknown action at {location}")
            for target in dist:
                if target not in self.states:
                    raise ModelValidationError("transitions", target, f"Unknown state at {location}")
            _check_distribution(dist, "transitions", location)
        for state in self.initial_dist:
            if state not in self.states:
                raise ModelValidationError("initial_dist", state, "Unknown initial state")
        _check_distribution(self.initial_dist, "initial_dist", "initial_dist", allow_zero=True)


@dataclass(frozen=True)
class MtdSchedule:
    """Proactive defense strategy: Markov chain over configurations."""
    configs: Tuple[str, ...]
    switch_matrix: Tuple[Tuple[float, ...], ...]
    initial_config_dist: Tuple[float, ...]

    def index(self, config: str) -> int:
        return self.configs.index(config)

    def prob(self, i: str, j: str) -> float:
        """P(i, j): probability of switching from configuration i to j."""
        return self.switch_matrix[self.index(i)][self.index(j)]

    def initial(self, config: str) -> float:
        return self.initial_config_dist[self.index(config)]

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.switch_matrix, dtype=float)

    def validate(self) -> None:
        n = len(self.configs)
        if n == 0:
            raise ModelValidationError("configs", n, "At least one configuration is required")
        if len(set(self.configs)) != n:
            raise ModelValidationError("configs", list(self.configs), "Configuration identifiers must be unique")
        if len(self.switch_matrix) != n or any(len(row) != n for row in self.switch_matrix):
            raise ModelValidationError("mtd.matrix", n, "Switch matrix must be square over the configurations")
        for config, row in zip(self.configs, self.switch_matrix):
            dist = {target: p for target, p in zip(self.configs, row)}
            _check_distribution(dist, "mtd.matrix", f"mtd.matrix row {config}", allow_zero=True)
        if len(self.initial_config_dist) != n:
            raise ModelValidationError("mtd.initial", len(self.initial_config_dist),
                                       "Initial configuration distribution must cover every configuration")
        _check_distribution(dict(zip(self.configs, self.initial_config_dist)), "mtd.initial",
                            "mtd.initial", allow_zero=True)


@dataclass(frozen=True)
class SensorConstraints:
    """Eligible sensor sites and per-configuration budgets.

    ``detector_budget`` (k) bounds intrusion detectors and ``stealthy_budget``
    (h) bounds stealthy sensors, each per configuration.
    """
    detector_sites: FrozenSet[Site]
    stealthy_sites: FrozenSet[Site]
    detector_budget: int
    stealthy_budget: int

    def validate(self) -> None:
        if self.detector_budget < 0:
            raise ModelValidationError("sensors.detector_budget", self.detector_budget, "Budget must be non-negative")
        if self.stealthy_budget < 0:
            raise ModelValidationError("sensors.stealthy_budget", self.stealthy_budget, "Budget must be non-negative")


@dataclass(frozen=True)
class FalseNegativeModel:
    """False negative rates eps(s, a) of intrusion detectors.

    ``stealthy_eps`` is the (uniform) false negative rate of stealthy sensors;
    zero models a perfect honey patch.
    """
    default: float
    overrides: Mapping[Site, float] = field(default_factory=dict)
    stealthy_eps: float = 0.0

    def eps(self, state: str, action: str) -> float:
        return self.overrides.get((state, action), self.default)

    @classmethod
    def uniform(cls, eps: float, stealthy_eps: float = 0.0) -> "FalseNegativeModel":
        return cls(default=eps, overrides={}, stealthy_eps=stealthy_eps)

    def validate(self) -> None:
        rates = [("false_negative.default", self.default), ("false_negative.stealthy", self.stealthy_eps)]
        rates.extend((f"false_negative.overrides.{s}.{a}", v) for (s, a), v in self.overrides.items())
        for name, value in rates:
            if not math.isfinite(value) or value < 0.0 or value > 1.0:
                raise ModelValidationError(name, value, "False negative rate must lie in [0, 1]")
            if value in (0.0, 1.0) and name != "false_negative.stealthy":
                logger.warning("Degenerate false negative rate %s=%s (open interval expected)", name, value)


@dataclass(frozen=True)
class SensorAllocation:
    """Placed sensors: ``x`` intrusion detectors and ``y`` stealthy sensors.

    Both are the sets of (state, configuration, action) coordinates whose
    Boolean indicator is 1.
    """
    x: FrozenSet[SensorSite] = frozenset()
    y: FrozenSet[SensorSite] = frozenset()

    @classmethod
    def empty(cls) -> "SensorAllocation":
        return cls()

    def detectors_in(self, config: str) -> List[Site]:
        return sorted((s, a) for (s, i, a) in self.x if i == config)

    def stealthy_in(self, config: str) -> List[Site]:
        return sorted((s, a) for (s, i, a) in self.y if i == config)

    def to_dict(self, configs: Iterable[str]) -> Dict[str, Dict[str, List[List[str]]]]:
        """Site lists per configuration, the on-disk allocation format."""
        configs = list(configs)
        return {
            "detectors": {c: [list(site) for site in self.detectors_in(c)] for c in configs},
            "stealthy": {c: [list(site) for site in self.stealthy_in(c)] for c in configs},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, Iterable[Iterable[str]]]]) -> "SensorAllocation":
        def collect(key: str) -> FrozenSet[SensorSite]:
            sites = set()
            for config, pairs in (data.get(key) or {}).items():
                for pair in pairs:
                    state, action = list(pair)
                    sites.add((str(state), str(config), str(action)))
            return frozenset(sites)
        return cls(x=collect("detectors"), y=collect("stealthy"))


@dataclass(frozen=True)
class ModelBundle:
    """Everything the pipeline needs: one attack graph per configuration,
    the MTD schedule, sensor constraints and false negative rates."""
    graphs: Mapping[str, AttackGraph]
    schedule: MtdSchedule
    constraints: SensorConstraints
    fn_model: FalseNegativeModel

    @property
    def configs(self) -> Tuple[str, ...]:
        return self.schedule.configs

    @property
    def _reference(self) -> AttackGraph:
        return self.graphs[self.configs[0]]

    @property
    def states(self) -> List[str]:
        return sorted(self._reference.states)

    @property
    def actions(self) -> List[str]:
        return sorted(self._reference.actions)

    @property
    def goal_states(self) -> FrozenSet[str]:
        return self._reference.goal_states

    @property
    def initial_dist(self) -> Mapping[str, float]:
        return self._reference.initial_dist

    def is_defined(self, state: str, config: str, action: str) -> bool:
        return self.graphs[config].is_defined(state, action)

    def with_budgets(self, k: Optional[int] = None, h: Optional[int] = None) -> "ModelBundle":
        """Copy with detector budget ``k`` and/or stealthy budget ``h`` replaced."""
        constraints = replace(
            self.constraints,
            detector_budget=self.constraints.detector_budget if k is None else k,
            stealthy_budget=self.constraints.stealthy_budget if h is None else h,
        )
        constraints.validate()
        return replace(self, constraints=constraints)

    def with_uniform_eps(self, eps: Optional[float]) -> "ModelBundle":
        """Copy where every detector shares the false negative rate ``eps``."""
        if eps is None:
            return self
        fn_model = FalseNegativeModel.uniform(eps, stealthy_eps=self.fn_model.stealthy_eps)
        fn_model.validate()
        return replace(self, fn_model=fn_model)

    def validate(self) -> None:
        """Check every bundle invariant, raising on the first violation."""
        self.schedule.validate()
        if set(self.graphs) != set(self.configs):
            raise ModelValidationError("configs", sorted(self.graphs), "Attack graphs must match the MTD configurations")
        reference = self._reference
        for config in self.configs:
            graph = self.graphs[config]
            if (graph.states != reference.states or graph.actions != reference.actions
                    or graph.goal_states != reference.goal_states
                    or dict(graph.initial_dist) != dict(reference.initial_dist)):
                raise ModelValidationError("configs", config, "Configurations must share states, actions, initial and goal sets")
            graph.validate(config)
        for state in sorted(reference.states - reference.goal_states):
            if not any(self.graphs[c].actions_at(state) for c in self.configs):
                raise ModelValidationError("transitions", state, "Non-goal state has no defined action in any configuration")
        self.constraints.validate()
        for field_name, sites in (("sensors.detector_sites", self.constraints.detector_sites),
                                  ("sensors.stealthy_sites", self.constraints.stealthy_sites)):
            for state, action in sorted(sites):
                if state not in reference.states or action not in reference.actions:
                    raise ModelValidationError(field_name, f"{state}/{action}", "Unknown state or action in sensor site")
                if not any(self.graphs[c].is_defined(state, action) for c in self.configs):
                    raise ModelValidationError(field_name, f"{state}/{action}",
                                               "Sensor site has no defined transition in any configuration")
        for state, action in self.fn_model.overrides:
            if state not in reference.states or action not in reference.actions:
                raise ModelValidationError("false_negative.overrides", f"{state}/{action}", "Unknown state or action")
        self.fn_model.validate()


class ViolationKind(str, Enum):
    """Kinds of allocation invariant violations."""
    UNKNOWN = "unknown"
    INELIGIBLE = "ineligible"
    UNDEFINED = "undefined"
    EXCLUSION = "mutual_exclusion"
    BUDGET = "budget"


@dataclass(frozen=True)
class AllocationViolation:
    kind: ViolationKind
    sensor: str
    config: str
    site: Optional[Site] = None
    message: str = ""

    def __str__(self) -> str:
        where = f"{self.site[0]}/{self.config}/{self.site[1]}" if self.site else self.config
        return f"{self.kind.value} ({self.sensor}) at {where}: {self.message}"


def validate_allocation(bundle: ModelBundle, alloc: SensorAllocation) -> List[AllocationViolation]:
    """List every violated allocation invariant; empty iff the allocation is feasible."""
    violations: List[AllocationViolation] = []
    constraints = bundle.constraints
    known_states = set(bundle.states)
    known_actions = set(bundle.actions)

    for sensor, sites, eligible in (("detector", alloc.x, constraints.detector_sites),
                                    ("stealthy", alloc.y, constraints.stealthy_sites)):
        for state, config, action in sorted(sites):
            site = (state, action)
            if config not in bundle.configs or state not in known_states or action not in known_actions:
                violations.append(AllocationViolation(ViolationKind.UNKNOWN, sensor, config, site,
                                                      "unknown state, configuration or action"))
                continue
            if site not in eligible:
                violations.append(AllocationViolation(ViolationKind.INELIGIBLE, sensor, config, site,
                                                      "site not in the eligible set"))
            if not bundle.is_defined(state, config, action):
                violations.append(AllocationViolation(ViolationKind.UNDEFINED, sensor, config, site,
                                                      "no defined transition in this configuration"))

    for state, config, action in sorted(alloc.x & alloc.y):
        violations.append(AllocationViolation(ViolationKind.EXCLUSION, "both", config, (state, action),
                                              "detector and stealthy sensor on the same site"))

    for config in bundle.configs:
        n_detectors = sum(1 for (_, i, _) in alloc.x if i == config)
        if n_detectors > constraints.detector_budget:
            violations.append(AllocationViolation(ViolationKind.BUDGET, "detector", config, None,
                                                  f"{n_detectors} > k={constraints.detector_budget}"))
        n_stealthy = sum(1 for (_, i, _) in alloc.y if i == config)
        if n_stealthy > constraints.stealthy_budget:
            violations.append(AllocationViolation(ViolationKind.BUDGET, "stealthy", config, None,
                                                  f"{n_stealthy} > h={constraints.stealthy_budget}"))
    return violations


def load_model(path: Union[str, Path]) -> ModelBundle:
    """Load and validate a model file (JSON or YAML)."""
    from .configuration import get_config_manager

    return get_config_manager().load_bundle(Path(path))
