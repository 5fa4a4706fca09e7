#!/usr/bin/env python3
"""Unit tests for LP-format export."""

import pytest

from mtd_cli.core.exceptions import ModelIOError
from mtd_cli.core.lp_format import export_lp_file, format_lp, sanitize_names
from mtd_cli.core.milp import MilpModel, Relation


class TestSanitizeNames:
    """Test identifier sanitization."""

    def test_brackets_and_separators(self):
        """Test that non-identifier characters become underscores."""
        names = sanitize_names(["x[A|0|w1]", "v[h1_user@1]"])
        assert names == {"x[A|0|w1]": "x_A_0_w1", "v[h1_user@1]": "v_h1_user_1"}

    def test_leading_digit_and_exponent(self):
        """Test names that LP readers would parse as numbers."""
        names = sanitize_names(["0abc", "e12", ".x"])
        assert names["0abc"] == "n_0abc"
        assert names["e12"] == "n_e12"
        assert names[".x"] == "n_.x"

    def test_collisions(self):
        """Test that sanitized names stay unique."""
        names = sanitize_names(["a|b", "a@b", "a_b"])
        assert sorted(names.values()) == ["a_b", "a_b_2", "a_b_3"]
        assert names["a|b"] == "a_b"


class TestFormatLp:
    """Test LP text rendering."""

    def setup_method(self):
        """Set up test fixtures."""
        model = MilpModel(name="demo")
        model.add_variable("v[s@0]", 0.0, 1.0)
        model.add_variable("v[g@0]", 1.0, 1.0)
        model.add_variable("free", -float("inf"), float("inf"))
        model.add_variable("plain")
        model.add_binary("x[s|0|a]")
        model.add_constraint({"v[s@0]": 1.0, "v[g@0]": -0.5, "x[s|0|a]": 1.0}, Relation.GE, 0.0, "bellman[s@0|a]")
        model.add_constraint({"x[s|0|a]": 1.0}, Relation.LE, 1.0, "detector_budget[0]")
        model.add_constraint({"free": 1.0, "plain": 1.0}, Relation.EQ, 2.0)
        model.set_objective({"v[s@0]": 1.0})
        self.text = format_lp(model)

    def test_sections_in_order(self):
        """Test the section layout."""
        lines = self.text.splitlines()
        positions = [lines.index(section) for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End")]
        assert positions == sorted(positions)
        assert lines[0] == "\\ Problem: demo"

    def test_objective_and_rows(self):
        """Test objective and constraint rendering."""
        assert " obj: + 1 v_s_0" in self.text
        assert " bellman_s_0_a: + 1 v_s_0 - 0.5 v_g_0 + 1 x_s_0_a >= 0" in self.text
        assert " detector_budget_0: + 1 x_s_0_a <= 1" in self.text
        assert " c3: + 1 free + 1 plain = 2" in self.text

    def test_bounds(self):
        """Test bound rendering and omission of defaults."""
        assert " 0 <= v_s_0 <= 1" in self.text
        assert " v_g_0 = 1" in self.text
        assert " free free" in self.text
        assert "plain" not in self.text.split("Bounds")[1]

    def test_binaries(self):
        """Test the Binaries section."""
        binaries = self.text.split("Binaries")[1].split("End")[0].split()
        assert binaries == ["x_s_0_a"]

    def test_long_rows_wrap(self):
        """Test that long rows are split over several lines."""
        model = MilpModel()
        names = [model.add_variable(f"y{n}") for n in range(20)]
        model.add_constraint({name: 1.0 for name in names}, Relation.LE, 5.0, "wide")
        text = format_lp(model)
        body = text.split("Subject To")[1].split("Bounds")[0].strip().splitlines()
        assert len(body) == 3
        assert body[-1].endswith("<= 5")


class TestExportLpFile:
    """Test writing LP files."""

    def test_write(self, tmp_path):
        """Test that the file holds the formatted model."""
        model = MilpModel(name="m")
        model.add_variable("x")
        model.set_objective({"x": 1.0})
        path = tmp_path / "m.lp"
        export_lp_file(model, path)
        assert path.read_text() == format_lp(model)

    def test_unwritable(self, tmp_path):
        """Test that write failures become ModelIOError."""
        model = MilpModel(name="m")
        with pytest.raises(ModelIOError):
            export_lp_file(model, tmp_path / "missing" / "m.lp")
