#!/usr/bin/env python3
"""End-to-end checks of the allocation pipeline on the bundled and random models."""

import itertools

import numpy as np
import pytest

from mtd_cli.core.alloc import (
    allocate_detectors,
    allocate_stealthy,
    brute_force_detectors,
    brute_force_stealthy,
    build_step1_milp,
    eligible_sites,
    site_var,
)
from mtd_cli.core.configuration import load_bundled_model
from mtd_cli.core.milp import solve
from mtd_cli.core.product import SINK, ProductState, apply_detectors, build_base_mdp, build_defender_mdp
from mtd_cli.core.sim import simulate
from mtd_cli.core.ssp import StateRelevanceWeights, evaluate_policy, extract_policy, solve_ssp_lp, value_iteration
from mtd_cli.core.strategies import get_allocation_strategy
from tests.conftest import bundle_from_data, random_bundle, toy_model_data

pytestmark = pytest.mark.integration

# Objectives weight every state by at least 1e-6, so iota . v may move by that much
# against the trend when the optimizer trades it for mass elsewhere.
RATE_SLACK = 2e-5
OBJECTIVE_SLACK = 1e-7

K_VALUES = range(5)
EPS_VALUES = (0.1, 0.3, 0.5)
H_VALUES = range(4)


@pytest.fixture(scope="module")
def bundled_grid():
    """Step-1 results on the bundled model for every (k, eps)."""
    bundle = load_bundled_model()
    base = build_base_mdp(bundle)
    grid = {}
    for k, eps in itertools.product(K_VALUES, EPS_VALUES):
        cell = bundle.with_budgets(k=k).with_uniform_eps(eps)
        grid[(k, eps)] = (cell, allocate_detectors(cell, base=base))
    return grid


def test_golden_detector_fragment():
    """Outgoing mass of (A, 0) under w1 with one detector on (A, 0, w1)."""
    bundle = load_bundled_model()
    mdp_x = apply_detectors(build_base_mdp(bundle), {("A", "0", "w1")}, bundle.fn_model)
    expected = {
        SINK: 0.21,
        ProductState("A", "0"): 0.027,
        ProductState("A", "1"): 0.7,
        ProductState("h1_user", "0"): 0.063,
    }
    dist = mdp_x.successors(ProductState("A", "0"), "w1")
    assert set(dist) == set(expected)
    for target, p in expected.items():
        assert abs(dist[target] - p) <= 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_lp_matches_value_iteration(seed):
    """LP and VI agree per state on random models."""
    bundle = random_bundle(seed, n_states=4 + seed % 4, n_configs=2 + seed % 2)
    mdp = build_base_mdp(bundle)
    assert len(mdp.states) <= 50
    assert solve_ssp_lp(mdp).max_difference(value_iteration(mdp, tol=1e-12)) < 1e-6


@pytest.mark.parametrize("seed", range(12))
def test_milp_matches_brute_force(seed):
    """Both MILPs reach the enumerated optimum on toy instances."""
    bundle = random_bundle(100 + seed, n_states=4, max_sites=3,
                           detector_budget=1 + seed % 2, stealthy_budget=1)
    base = build_base_mdp(bundle)
    assert len(eligible_sites(base, bundle.constraints.detector_sites)) <= 6

    det = allocate_detectors(bundle, base=base)
    oracle_det = brute_force_detectors(bundle, base=base)
    assert det.objective == pytest.approx(oracle_det.objective, abs=1e-6)

    stealthy = allocate_stealthy(bundle, det, mu=0.1, base=base)
    oracle = brute_force_stealthy(bundle, det, mu=0.1, base=base)
    assert stealthy.objective == pytest.approx(oracle.objective, abs=1e-6)


@pytest.mark.slow
def test_detector_budget_monotone(bundled_grid):
    """V2 never increases with the detector budget."""
    for eps in EPS_VALUES:
        for k in list(K_VALUES)[:-1]:
            _, fewer = bundled_grid[(k, eps)]
            _, more = bundled_grid[(k + 1, eps)]
            assert more.objective <= fewer.objective + OBJECTIVE_SLACK
            assert more.success_rate <= fewer.success_rate + RATE_SLACK


@pytest.mark.slow
def test_false_negative_monotone(bundled_grid):
    """V2 never decreases as detectors miss more often."""
    for k in K_VALUES:
        for low, high in zip(EPS_VALUES, EPS_VALUES[1:]):
            _, better = bundled_grid[(k, low)]
            _, worse = bundled_grid[(k, high)]
            assert worse.objective >= better.objective - OBJECTIVE_SLACK
            assert worse.success_rate >= better.success_rate - RATE_SLACK


@pytest.mark.slow
def test_stealthy_budget_monotone(bundled_grid):
    """V1 never increases with the stealthy budget for a fixed Step-1 result."""
    for k in range(4):
        cell, det = bundled_grid[(k, 0.3)]
        previous = None
        for h in H_VALUES:
            result = allocate_stealthy(cell.with_budgets(h=h), det, mu=0.1)
            if previous is not None:
                assert result.objective <= previous.objective + OBJECTIVE_SLACK
                assert result.success_rate <= previous.success_rate + RATE_SLACK
            previous = result


def test_stealthy_sensor_beats_extra_detector():
    """One detector plus one stealthy sensor does at least as well as two detectors."""
    bundle = load_bundled_model()
    strategy = get_allocation_strategy("milp")
    mixed = strategy.run(bundle.with_budgets(k=1, h=1), mu=0.1)
    detectors_only = strategy.run(bundle.with_budgets(k=2, h=0), mu=0.1)
    assert mixed.stealthy.success_rate <= detectors_only.detectors.success_rate + 1e-9


def test_big_m_sound_for_fixed_detectors():
    """Fixing the binaries to a feasible x makes Step 1 an exact LP for M^x."""
    bundle = load_bundled_model().with_budgets(k=2)
    base = build_base_mdp(bundle)
    c = StateRelevanceWeights.default(base)
    model = build_step1_milp(base, bundle.constraints, bundle.fn_model, c)
    sites = eligible_sites(base, bundle.constraints.detector_sites)
    rng = np.random.default_rng(2024)

    for _ in range(50):
        x = set()
        for config in base.configs:
            candidates = [site for site in sites if site[1] == config]
            size = int(rng.integers(0, bundle.constraints.detector_budget + 1))
            picks = rng.choice(len(candidates), size=size, replace=False)
            x.update(candidates[n] for n in picks)
        fixed = model.fix({site_var("x", site): float(site in x) for site in sites})
        solution = solve(fixed)
        assert solution.is_optimal
        expected = solve_ssp_lp(apply_detectors(base, x, bundle.fn_model), c).weighted(c)
        assert solution.objective_value == pytest.approx(expected, abs=1e-6)


def _simulation_pairs():
    bundle = load_bundled_model()
    strategy = get_allocation_strategy("milp")
    pairs = []
    for k, h in ((0, 1), (1, 0), (1, 1), (2, 1)):
        result = strategy.run(bundle.with_budgets(k=k, h=h), mu=0.1)
        pairs.append((result.bundle, result.allocation.x, result.allocation.y))
    other = bundle_from_data(toy_model_data())
    result = strategy.run(other, mu=0.1)
    pairs.append((other, result.allocation.x, result.allocation.y))
    return pairs


@pytest.mark.slow
def test_simulation_matches_analytic():
    """Empirical success rates lie within four standard errors of iota . V1."""
    for n, (bundle, x, y) in enumerate(_simulation_pairs()):
        mdp_x, mdp_xy = build_defender_mdp(bundle, x, y)
        pi = extract_policy(mdp_x, value_iteration(mdp_x), 0.1)
        analytic = evaluate_policy(mdp_xy, pi).initial_value(mdp_xy)
        report = simulate(mdp_xy, pi, trials=100_000, seed=n)
        assert abs(report.empirical_success_rate - analytic) <= 4 * max(report.stderr, 1e-4)
