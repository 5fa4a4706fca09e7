#!/usr/bin/env python3
"""Monte Carlo rollouts of an attack policy on a product MDP."""

import bisect
import json
import logging
import math
from dataclasses import dataclass
from itertools import accumulate
from pathlib import Path
from typing import Dict, IO, List, Optional, Tuple, Union

import numpy as np

from .exceptions import ModelIOError, PolicyError
from .product import SINK, ProductMdp, state_label
from .ssp import StochasticPolicy

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000
_DRAW_BATCH = 64


@dataclass(frozen=True)
class SimReport:
    trials: int
    successes: int
    detections: int
    truncations: int
    seed: int
    max_steps: int

    @property
    def empirical_success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def detection_rate(self) -> float:
        return self.detections / self.trials

    @property
    def stderr(self) -> float:
        """Binomial standard error of the success rate."""
        p = self.empirical_success_rate
        return math.sqrt(p * (1.0 - p) / self.trials)

    def to_dict(self) -> Dict[str, Union[int, float]]:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "detections": self.detections,
            "truncations": self.truncations,
            "empirical_success_rate": self.empirical_success_rate,
            "stderr": self.stderr,
            "seed": self.seed,
            "max_steps": self.max_steps,
        }


class _Sampler:
    """Cumulative distributions over integer-indexed states, precomputed once."""

    def __init__(self, mdp: ProductMdp, pi: StochasticPolicy):
        self.mdp = mdp
        self.states = list(mdp.states)
        index = mdp.index
        self.initial = self._table({index[z]: p for z, p in mdp.initial_dist.items()})
        self.final = {index[z] for z in mdp.final_states}
        self.sink = index[SINK]
        self.policy: Dict[int, Tuple[List[str], List[float]]] = {}
        self.outcomes: Dict[Tuple[int, str], Tuple[List[int], List[float]]] = {}
        for z in mdp.transient_states:
            if not pi.covers(z):
                continue
            dist = {a: p for a, p in pi.action_probs(z).items() if p > 0.0}
            self.policy[index[z]] = self._table(dist)
            for action in dist:
                if (z, action) not in mdp.trans:
                    raise PolicyError(z, f"Policy uses action {action} which is not defined here")
                targets = {index[t]: p for t, p in mdp.successors(z, action).items()}
                self.outcomes[(index[z], action)] = self._table(targets)

    @staticmethod
    def _table(dist):
        keys = list(dist)
        return keys, list(accumulate(dist[k] for k in keys))

    @staticmethod
    def draw(table, u: float):
        keys, cumulative = table
        position = bisect.bisect_right(cumulative, u * cumulative[-1])
        return keys[min(position, len(keys) - 1)]


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for each trial."""
    return np.random.Generator(np.random.Philox(key=seed, counter=trial << 128))


def simulate(mdp: ProductMdp, pi: StochasticPolicy, trials: int, seed: int = 0,
             max_steps: int = DEFAULT_MAX_STEPS, trace_path: Optional[Union[str, Path]] = None) -> SimReport:
    """Roll out ``pi`` from the initial distribution until absorption or ``max_steps``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    sampler = _Sampler(mdp, pi)

    trace: Optional[IO[str]] = None
    if trace_path is not None:
        try:
            trace = open(trace_path, "w")
        except OSError as e:
            raise ModelIOError(str(trace_path), f"Cannot write trace: {e}")

    counts = {"success": 0, "detected": 0, "truncated": 0}
    try:
        for trial in range(trials):
            outcome, path = _run_trial(sampler, _trial_rng(seed, trial), max_steps, trace is not None)
            counts[outcome] += 1
            if trace is not None:
                trace.write(json.dumps({"trial": trial, "outcome": outcome, "path": path}) + "\n")
    finally:
        if trace is not None:
            trace.close()

    report = SimReport(
        trials=trials,
        successes=counts["success"],
        detections=counts["detected"],
        truncations=counts["truncated"],
        seed=seed,
        max_steps=max_steps,
    )
    if report.truncations:
        logger.warning("%d of %d trials hit the %d step cap", report.truncations, trials, max_steps)
    return report


def _run_trial(sampler: _Sampler, rng: np.random.Generator, max_steps: int,
               record: bool) -> Tuple[str, List[List[str]]]:
    draws = rng.random(_DRAW_BATCH)
    used = 0

    def uniform() -> float:
        nonlocal draws, used
        if used == len(draws):
            draws = rng.random(_DRAW_BATCH)
            used = 0
        used += 1
        return float(draws[used - 1])

    path: List[List[str]] = []
    z = sampler.draw(sampler.initial, uniform())
    for _ in range(max_steps):
        if z in sampler.final:
            return "success", path
        if z == sampler.sink:
            return "detected", path
        table = sampler.policy.get(z)
        if table is None:
            raise PolicyError(sampler.states[z], "Attack policy is undefined at a visited state")
        action = sampler.draw(table, uniform())
        if record:
            path.append([state_label(sampler.states[z]), action])
        z = sampler.draw(sampler.outcomes[(z, action)], uniform())

    if z in sampler.final:
        return "success", path
    if z == sampler.sink:
        return "detected", path
    return "truncated", path
