#!/usr/bin/env python3
"""Product MDPs over attack-graph states and MTD configurations.

Three constructions share one representation:

* ``build_base_mdp``: the attacker's planning MDP without sensors.
* ``apply_detectors``: the attacker's MDP when intrusion detectors (with
  false negatives) divert monitored exploits to the detection sink.
* ``apply_stealthy``: the defender's MDP, which additionally routes exploits
  hitting stealthy sensors to the sink. The attacker does not know about
  these sensors.

States are ``ProductState(state, config)`` pairs plus the distinguished
``SINK``. Goal states and the sink are absorbing and carry no transitions.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple

from .exceptions import AllocationError
from .model import PROB_TOL, FalseNegativeModel, ModelBundle, SensorSite

logger = logging.getLogger(__name__)


class ProductState(NamedTuple):
    state: str
    config: str

    def __str__(self) -> str:
        return "sink" if self == SINK else f"{self.state}@{self.config}"


# Identifiers are non-empty, so this never collides with a real product state.
SINK = ProductState("", "")

Transitions = Mapping[Tuple[ProductState, str], Mapping[ProductState, float]]


def state_label(z: ProductState) -> str:
    """Stable textual key of a product state, used in JSON output."""
    return str(z)


def parse_state_label(label: str) -> ProductState:
    if label == "sink":
        return SINK
    state, _, config = label.rpartition("@")
    return ProductState(state, config)


@dataclass(frozen=True)
class ProductMdp:
    """Joint attacker/defender MDP over Z = S x configs plus the sink."""
    configs: Tuple[str, ...]
    states: Tuple[ProductState, ...]
    actions: Tuple[str, ...]
    trans: Transitions
    initial_dist: Mapping[ProductState, float]
    final_states: FrozenSet[ProductState]
    defined_sites: FrozenSet[SensorSite]
    detectors: FrozenSet[SensorSite] = frozenset()
    stealthy: FrozenSet[SensorSite] = frozenset()
    switch: Mapping[Tuple[str, str], float] = field(default_factory=dict)

    @cached_property
    def index(self) -> Dict[ProductState, int]:
        return {z: n for n, z in enumerate(self.states)}

    @cached_property
    def _available(self) -> Dict[ProductState, Tuple[str, ...]]:
        order = {a: n for n, a in enumerate(self.actions)}
        available: Dict[ProductState, List[str]] = defaultdict(list)
        for (z, action) in self.trans:
            available[z].append(action)
        return {z: tuple(sorted(acts, key=order.__getitem__)) for z, acts in available.items()}

    def is_absorbing(self, z: ProductState) -> bool:
        return z == SINK or z in self.final_states

    def reward(self, z: ProductState) -> float:
        return 1.0 if z in self.final_states else 0.0

    def available_actions(self, z: ProductState) -> Tuple[str, ...]:
        """Actions defined at ``z``, in declaration order."""
        if self.is_absorbing(z):
            return ()
        return self._available.get(z, ())

    def successors(self, z: ProductState, action: str) -> Mapping[ProductState, float]:
        return self.trans.get((z, action), {})

    @property
    def transient_states(self) -> List[ProductState]:
        return [z for z in self.states if not self.is_absorbing(z)]

    def validate(self) -> None:
        """Check row stochasticity and probability ranges."""
        for (z, action), dist in self.trans.items():
            if self.is_absorbing(z):
                raise ValueError(f"Absorbing state {z} has an outgoing transition under {action}")
            for target, prob in dist.items():
                if prob < 0.0 or prob > 1.0 + PROB_TOL:
                    raise ValueError(f"Probability {prob} out of range at {z}/{action} -> {target}")
            total = sum(dist.values())
            if abs(total - 1.0) > PROB_TOL:
                raise ValueError(f"Row {z}/{action} sums to {total}")

    @property
    def num_transitions(self) -> int:
        return sum(len(dist) for dist in self.trans.values())


def build_base_mdp(bundle: ModelBundle, include_invalid_actions: bool = False) -> ProductMdp:
    """Build the sensor-free product MDP.

    For each ((s, i), a) and each next configuration j: if a is defined at s
    in j, mass P(i, j) * T^j(s'|s, a) goes to (s', j); otherwise the attempt
    fails and P(i, j) goes to (s, j). Contributions to the same target add up.
    An action is available at (s, i) iff it is defined at s in some
    configuration, unless ``include_invalid_actions`` makes every action
    available everywhere.
    """
    configs = bundle.configs
    schedule = bundle.schedule
    actions = tuple(bundle.actions)
    goal_states = bundle.goal_states

    states = tuple(ProductState(s, i) for s in bundle.states for i in configs) + (SINK,)
    final_states = frozenset(ProductState(s, i) for s in goal_states for i in configs)
    defined_sites = frozenset(
        (s, j, a) for j in configs for (s, a) in bundle.graphs[j].transitions
    )
    switch = {(i, j): schedule.prob(i, j) for i in configs for j in configs}

    trans: Dict[Tuple[ProductState, str], Dict[ProductState, float]] = {}
    for s in bundle.states:
        if s in goal_states:
            continue
        if include_invalid_actions:
            available = list(actions)
        else:
            available = [a for a in actions if any(bundle.is_defined(s, j, a) for j in configs)]
        for i in configs:
            z = ProductState(s, i)
            for a in available:
                dist: Dict[ProductState, float] = defaultdict(float)
                for j in configs:
                    p_switch = switch[(i, j)]
                    if p_switch == 0.0:
                        continue
                    graph = bundle.graphs[j]
                    if graph.is_defined(s, a):
                        for s_next, p in graph.successors(s, a).items():
                            dist[ProductState(s_next, j)] += p_switch * p
                    else:
                        dist[ProductState(s, j)] += p_switch
                trans[(z, a)] = dict(dist)

    initial_dist = {}
    for s, p_state in bundle.initial_dist.items():
        for i in configs:
            p = p_state * schedule.initial(i)
            if p > 0.0:
                initial_dist[ProductState(s, i)] = p

    mdp = ProductMdp(
        configs=configs,
        states=states,
        actions=actions,
        trans=trans,
        initial_dist=initial_dist,
        final_states=final_states,
        defined_sites=defined_sites,
        switch=switch,
    )
    logger.debug("Built base product MDP: %d states, %d state-action pairs",
                 len(states), len(trans))
    return mdp


def _check_sites(mdp: ProductMdp, sites: Iterable[SensorSite], sensor: str) -> FrozenSet[SensorSite]:
    sites = frozenset(sites)
    for site in sorted(sites):
        if site not in mdp.defined_sites:
            raise AllocationError(site, f"{sensor.capitalize()} placed on an undefined transition")
    return sites


def _monitor(mdp: ProductMdp, sites: FrozenSet[SensorSite], keep: Mapping[Tuple[str, str], float]) -> Dict:
    """Scale monitored outcomes by their keep rate and send the rest to the sink.

    An outcome (s', j) of ((s, i), a) is monitored iff (s, j, a) is in
    ``sites``; ``keep`` maps (s, a) to the fraction of such mass that evades
    the sensor.
    """
    trans = {}
    for (z, action), dist in mdp.trans.items():
        new_dist: Dict[ProductState, float] = defaultdict(float)
        sink_mass = 0.0
        for target, p in dist.items():
            if target != SINK and (z.state, target.config, action) in sites:
                rate = keep[(z.state, action)]
                new_dist[target] += p * rate
                sink_mass += p * (1.0 - rate)
            else:
                new_dist[target] += p
        if sink_mass > 0.0:
            new_dist[SINK] += sink_mass
        trans[(z, action)] = {t: p for t, p in new_dist.items() if p > 0.0}
    return trans


def apply_detectors(mdp: ProductMdp, x: Iterable[SensorSite], fn_model: FalseNegativeModel) -> ProductMdp:
    """Attacker MDP with intrusion detectors on the sites in ``x``.

    A monitored exploit evades detection with probability eps(s, a); the
    detected mass goes to the sink.
    """
    if mdp.detectors or mdp.stealthy:
        raise ValueError("apply_detectors expects a sensor-free product MDP")
    x = _check_sites(mdp, x, "detector")
    if not x:
        return mdp
    keep = {(s, a): fn_model.eps(s, a) for (s, _, a) in x}
    trans = _monitor(mdp, x, keep)
    return ProductMdp(
        configs=mdp.configs,
        states=mdp.states,
        actions=mdp.actions,
        trans=trans,
        initial_dist=mdp.initial_dist,
        final_states=mdp.final_states,
        defined_sites=mdp.defined_sites,
        detectors=x,
        stealthy=frozenset(),
        switch=mdp.switch,
    )


def apply_stealthy(mdp_x: ProductMdp, y: Iterable[SensorSite], stealthy_eps: float = 0.0) -> ProductMdp:
    """Defender MDP with stealthy sensors on the sites in ``y``.

    Monitored mass is added to the detector sink mass already in ``mdp_x``.
    ``stealthy_eps`` is the fraction that still evades a stealthy sensor.
    """
    if mdp_x.stealthy:
        raise ValueError("Stealthy sensors are already applied")
    y = _check_sites(mdp_x, y, "stealthy sensor")
    overlap = sorted(y & mdp_x.detectors)
    if overlap:
        raise AllocationError(overlap[0], "Detector and stealthy sensor on the same site")
    if not y:
        return mdp_x
    keep = {(s, a): stealthy_eps for (s, _, a) in y}
    trans = _monitor(mdp_x, y, keep)
    return ProductMdp(
        configs=mdp_x.configs,
        states=mdp_x.states,
        actions=mdp_x.actions,
        trans=trans,
        initial_dist=mdp_x.initial_dist,
        final_states=mdp_x.final_states,
        defined_sites=mdp_x.defined_sites,
        detectors=mdp_x.detectors,
        stealthy=y,
        switch=mdp_x.switch,
    )


def build_defender_mdp(bundle: ModelBundle, x: Iterable[SensorSite], y: Iterable[SensorSite],
                       base: Optional[ProductMdp] = None) -> Tuple[ProductMdp, ProductMdp]:
    """Return (M^x, M^{x,y}) for an allocation."""
    base = base or build_base_mdp(bundle)
    mdp_x = apply_detectors(base, x, bundle.fn_model)
    return mdp_x, apply_stealthy(mdp_x, y, bundle.fn_model.stealthy_eps)
