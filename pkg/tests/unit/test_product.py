#!/usr/bin/env python3
"""Unit tests for product MDP construction and sensor application."""

import math

import pytest

from mtd_cli.core.exceptions import AllocationError
from mtd_cli.core.product import (
    SINK,
    ProductState,
    apply_detectors,
    apply_stealthy,
    build_base_mdp,
    build_defender_mdp,
    parse_state_label,
    state_label,
)

A0 = ProductState("A", "0")


def _row_sums_ok(mdp):
    return all(math.isclose(sum(dist.values()), 1.0, abs_tol=1e-12) for dist in mdp.trans.values())


class TestProductState:
    """Test product state labels."""

    def test_labels(self):
        """Test label formatting and parsing."""
        assert state_label(A0) == "A@0"
        assert state_label(SINK) == "sink"
        assert parse_state_label("h1_user@1") == ProductState("h1_user", "1")
        assert parse_state_label("sink") == SINK


class TestBaseMdp:
    """Test build_base_mdp on the bundled model."""

    def setup_method(self):
        """Set up test fixtures."""
        from mtd_cli.core.configuration import load_bundled_model
        self.bundle = load_bundled_model()
        self.mdp = build_base_mdp(self.bundle)

    def test_state_space(self):
        """Test that every (state, configuration) pair plus the sink is present."""
        assert len(self.mdp.states) == 6 * 2 + 1
        assert SINK in self.mdp.states
        assert self.mdp.final_states == {ProductState("h3_root", "0"), ProductState("h3_root", "1")}

    def test_initial_distribution(self):
        """Test iota(s, i) = I(s) * initial config probability."""
        assert self.mdp.initial_dist == {A0: 1.0}

    def test_rows_are_stochastic(self):
        """Test that every transition row sums to one."""
        assert _row_sums_ok(self.mdp)
        self.mdp.validate()

    def test_undefined_action_stays_put(self):
        """Test that an action undefined in the next configuration keeps the attacker in place."""
        dist = self.mdp.successors(A0, "w1")
        assert dist[ProductState("A", "1")] == pytest.approx(0.7, abs=1e-12)
        assert dist[ProductState("h1_user", "0")] == pytest.approx(0.21, abs=1e-12)
        assert dist[A0] == pytest.approx(0.09, abs=1e-12)

    def test_available_actions(self):
        """Test that actions defined in any configuration are available everywhere."""
        assert set(self.mdp.available_actions(A0)) == {"w1", "r1", "ws3"}
        assert set(self.mdp.available_actions(ProductState("h1_user", "0"))) == {"b3", "ub1"}

    def test_absorbing_states(self):
        """Test that goal states and the sink have no actions and reward only on goals."""
        goal = ProductState("h3_root", "1")
        assert self.mdp.is_absorbing(goal)
        assert self.mdp.is_absorbing(SINK)
        assert self.mdp.available_actions(goal) == ()
        assert self.mdp.reward(goal) == 1.0
        assert self.mdp.reward(SINK) == 0.0

    def test_include_invalid_actions(self):
        """Test that the flag makes every action available at every state."""
        mdp = build_base_mdp(self.bundle, include_invalid_actions=True)
        assert set(mdp.available_actions(A0)) == set(self.bundle.actions)
        assert mdp.successors(A0, "b1") == {A0: pytest.approx(0.3), ProductState("A", "1"): pytest.approx(0.7)}
        assert _row_sums_ok(mdp)


class TestSensors:
    """Test detector and stealthy sensor application."""

    def setup_method(self):
        """Set up test fixtures."""
        from mtd_cli.core.configuration import load_bundled_model
        self.bundle = load_bundled_model()
        self.base = build_base_mdp(self.bundle)

    def test_detector_fragment(self):
        """Test the transitions out of (A, 0) under w1 with a detector on (A, 0, w1)."""
        mdp_x = apply_detectors(self.base, {("A", "0", "w1")}, self.bundle.fn_model)
        dist = mdp_x.successors(A0, "w1")
        expected = {
            SINK: 0.21,
            A0: 0.027,
            ProductState("A", "1"): 0.7,
            ProductState("h1_user", "0"): 0.063,
        }
        assert set(dist) == set(expected)
        for target, p in expected.items():
            assert dist[target] == pytest.approx(p, abs=1e-12)

    def test_detectors_leave_other_rows(self):
        """Test that unmonitored rows are unchanged."""
        mdp_x = apply_detectors(self.base, {("A", "0", "w1")}, self.bundle.fn_model)
        assert mdp_x.successors(A0, "r1") == self.base.successors(A0, "r1")
        assert _row_sums_ok(mdp_x)

    def test_empty_allocation_is_identity(self):
        """Test that no detectors return the base MDP."""
        assert apply_detectors(self.base, set(), self.bundle.fn_model) is self.base

    def test_detector_on_undefined_site(self):
        """Test that a detector on an undefined transition is rejected."""
        with pytest.raises(AllocationError, match="undefined transition"):
            apply_detectors(self.base, {("A", "1", "w1")}, self.bundle.fn_model)

    def test_detectors_twice(self):
        """Test that detectors are applied to the sensor-free MDP only."""
        mdp_x = apply_detectors(self.base, {("A", "0", "w1")}, self.bundle.fn_model)
        with pytest.raises(ValueError):
            apply_detectors(mdp_x, {("A", "0", "r1")}, self.bundle.fn_model)

    def test_stealthy_blocks_monitored_mass(self):
        """Test that a perfect stealthy sensor sends all monitored mass to the sink."""
        mdp_xy = apply_stealthy(self.base, {("A", "0", "w1")})
        dist = mdp_xy.successors(A0, "w1")
        assert dist[SINK] == pytest.approx(0.3, abs=1e-12)
        assert A0 not in dist
        assert dist[ProductState("A", "1")] == pytest.approx(0.7, abs=1e-12)

    def test_imperfect_stealthy_sensor(self):
        """Test that a stealthy false negative rate keeps part of the mass."""
        mdp_xy = apply_stealthy(self.base, {("A", "0", "w1")}, stealthy_eps=0.5)
        dist = mdp_xy.successors(A0, "w1")
        assert dist[SINK] == pytest.approx(0.15, abs=1e-12)
        assert dist[A0] == pytest.approx(0.045, abs=1e-12)

    def test_mutual_exclusion(self):
        """Test that a stealthy sensor may not share a detector's site."""
        mdp_x = apply_detectors(self.base, {("A", "0", "w1")}, self.bundle.fn_model)
        with pytest.raises(AllocationError, match="same site"):
            apply_stealthy(mdp_x, {("A", "0", "w1")})

    def test_sink_mass_accumulates(self):
        """Test that detector and stealthy sink mass add up."""
        x = {("h2_root", "0", "b1")}
        y = {("h2_root", "1", "b1")}
        mdp_x, mdp_xy = build_defender_mdp(self.bundle, x, y, base=self.base)
        z = ProductState("h2_root", "0")
        # config 0 outcomes (p=0.3) lose 70%, config 1 outcomes (p=0.7) are blocked
        assert mdp_x.successors(z, "b1")[SINK] == pytest.approx(0.3 * 0.7, abs=1e-12)
        assert mdp_xy.successors(z, "b1")[SINK] == pytest.approx(0.3 * 0.7 + 0.7, abs=1e-12)
        assert mdp_xy.detectors == frozenset(x)
        assert mdp_xy.stealthy == frozenset(y)
        assert _row_sums_ok(mdp_xy)
