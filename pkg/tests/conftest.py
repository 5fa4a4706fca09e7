#!/usr/bin/env python3
"""Shared model builders for the test suite."""

import copy
import json
from typing import Any, Dict, List, Optional

import numpy as np
import pytest

from mtd_cli.core.configuration import BUNDLED_MODEL, get_config_manager, load_bundled_model
from mtd_cli.core.model import ModelBundle

TOY_MODEL: Dict[str, Any] = {
    "states": ["start", "foothold", "goal"],
    "actions": ["scan", "exploit", "escalate"],
    "goal_states": ["goal"],
    "initial_dist": {"start": 1.0},
    "configs": {
        "a": {
            "transitions": {
                "start": {
                    "scan": {"foothold": 0.6, "start": 0.4},
                    "exploit": {"goal": 0.2, "start": 0.8},
                },
                "foothold": {"escalate": {"goal": 0.5, "foothold": 0.5}},
            }
        },
        "b": {
            "transitions": {
                "start": {"scan": {"foothold": 0.3, "start": 0.7}},
                "foothold": {
                    "escalate": {"goal": 0.9, "foothold": 0.1},
                    "exploit": {"goal": 0.4, "start": 0.6},
                },
            }
        },
    },
    "mtd": {"matrix": [[0.5, 0.5], [0.2, 0.8]], "initial": [0.5, 0.5]},
    "sensors": {
        "detector_sites": [["start", "scan"], ["foothold", "escalate"]],
        "stealthy_sites": [["start", "scan"], ["start", "exploit"], ["foothold", "escalate"]],
        "detector_budget": 1,
        "stealthy_budget": 1,
    },
    "false_negative": {"default": 0.3, "overrides": [], "stealthy": 0.0},
}


def toy_model_data() -> Dict[str, Any]:
    return copy.deepcopy(TOY_MODEL)


def bundled_model_data() -> Dict[str, Any]:
    with open(BUNDLED_MODEL) as f:
        return json.load(f)


def bundle_from_data(data: Dict[str, Any]) -> ModelBundle:
    manager = get_config_manager()
    return manager.build_bundle(manager.validate_config(data))


def random_model_data(seed: int, n_states: int = 5, n_actions: int = 3, n_configs: int = 2,
                      max_sites: Optional[int] = None, detector_budget: int = 1,
                      stealthy_budget: int = 1, eps: float = 0.3) -> Dict[str, Any]:
    """Random attack graphs over ``n_configs`` configurations with one goal state.

    Every non-goal state has at least one action in the first configuration.
    Eligible sensor sites are all defined (state, action) pairs, or a random
    subset of ``max_sites`` of them.
    """
    rng = np.random.default_rng(seed)
    states = [f"s{n}" for n in range(n_states)]
    actions = [f"a{n}" for n in range(n_actions)]
    goal = states[-1]
    configs: Dict[str, Any] = {}
    defined = set()
    for c in range(n_configs):
        transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
        for s in states[:-1]:
            chosen = [a for a in actions if rng.random() < 0.6]
            if not chosen and c == 0:
                chosen = [actions[int(rng.integers(n_actions))]]
            for a in chosen:
                k = int(rng.integers(1, min(3, n_states) + 1))
                targets = list(rng.choice(states, size=k, replace=False))
                if s not in targets and rng.random() < 0.7:
                    targets.append(s)
                probs = rng.dirichlet(np.ones(len(targets)))
                transitions.setdefault(s, {})[a] = {str(t): float(p) for t, p in zip(targets, probs)}
                defined.add((s, a))
        configs[str(c)] = {"transitions": transitions}

    matrix = rng.dirichlet(np.ones(n_configs), size=n_configs).tolist()
    sites: List[List[str]] = [list(site) for site in sorted(defined)]
    if max_sites is not None and len(sites) > max_sites:
        picks = sorted(rng.choice(len(sites), size=max_sites, replace=False).tolist())
        sites = [sites[n] for n in picks]
    return {
        "states": states,
        "actions": actions,
        "goal_states": [goal],
        "initial_dist": {states[0]: 1.0},
        "configs": configs,
        "mtd": {"matrix": matrix, "initial": [1.0] + [0.0] * (n_configs - 1)},
        "sensors": {
            "detector_sites": sites,
            "stealthy_sites": sites,
            "detector_budget": detector_budget,
            "stealthy_budget": stealthy_budget,
        },
        "false_negative": {"default": eps, "overrides": [], "stealthy": 0.0},
    }


def random_bundle(seed: int, **kwargs: Any) -> ModelBundle:
    return bundle_from_data(random_model_data(seed, **kwargs))


@pytest.fixture
def toy_bundle() -> ModelBundle:
    return bundle_from_data(toy_model_data())


@pytest.fixture(scope="session")
def bundled() -> ModelBundle:
    return load_bundled_model()


@pytest.fixture
def model_file(tmp_path):
    """Write a model dict to a JSON file and return its path."""
    def write(data: Dict[str, Any], name: str = "model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return write
