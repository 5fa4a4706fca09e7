#!/usr/bin/env python3
"""Unit tests for the mtd command line."""

import csv
import json

import pytest

from mtd_cli import commands
from mtd_cli.cli import build_parser, main
from mtd_cli.config import AllocateConfig, ExportLpConfig, SweepConfig
from tests.conftest import toy_model_data


def _flat(text: str) -> str:
    return " ".join(text.split())


@pytest.fixture
def toy_file(model_file):
    return model_file(toy_model_data())


@pytest.fixture
def allocated(toy_file, tmp_path):
    """Run 'mtd allocate' on the toy model and return the output directory."""
    out_dir = tmp_path / "results"
    assert main(["allocate", str(toy_file), "--out", str(out_dir)]) == 0
    return out_dir


class TestParser:
    """Test argument parsing and dispatch."""

    def test_no_command(self, capsys):
        """Test that running without a command prints help and fails."""
        assert main([]) == 1
        assert "Commands" in capsys.readouterr().out

    def test_dispatch(self, mocker):
        """Test that subcommands receive their parsed config."""
        command = mocker.patch("mtd_cli.cli.allocate_command", return_value=0)
        assert main(["allocate", "bundled", "--k", "2", "--mu", "0"]) == 0
        config = command.call_args.args[0]
        assert isinstance(config, AllocateConfig)
        assert config.overrides() == {"k": 2, "h": None, "eps": None}
        assert config.mu == 0.0

    def test_unknown_arguments_warn(self, mocker, capsys):
        """Test that unknown arguments are reported but not fatal."""
        mocker.patch("mtd_cli.cli.validate_command", return_value=0)
        assert main(["validate", "bundled", "--frobnicate"]) == 0
        assert "--frobnicate" in capsys.readouterr().out

    def test_defaults(self):
        """Test the parsed defaults of the sweep command."""
        args = build_parser().parse_args(["sweep", "bundled"])
        config = args.sweep_config
        assert isinstance(config, SweepConfig)
        assert config.spec_data()["detector_budgets"] == [0, 1, 2, 3, 4]
        assert "trials" not in config.spec_data()

    @pytest.mark.parametrize("command,dest", [
        ("product", "product_config"),
        ("solve", "solve_config"),
        ("allocate", "allocate_config"),
        ("export-lp", "export_config"),
    ])
    def test_budget_flags(self, command, dest):
        """Test that --k and --h parse on every command with budget overrides."""
        args = build_parser().parse_args([command, "bundled", "--k", "1", "--h", "2"])
        config = getattr(args, dest)
        assert (config.detector_budget, config.stealthy_budget) == (1, 2)
        assert config.overrides()["k"] == 1
        assert config.overrides()["h"] == 2

    def test_help_flag_survives(self, capsys):
        """Test that -h still prints help next to the --h budget flag."""
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["allocate", "-h"])
        assert exc_info.value.code == 0
        assert "--h" in capsys.readouterr().out

    def test_sweep_budget_flags(self):
        """Test the sweep budget lists."""
        args = build_parser().parse_args(["sweep", "bundled", "--k", "0,1", "--h", "1"])
        data = args.sweep_config.spec_data()
        assert data["detector_budgets"] == [0, 1]
        assert data["stealthy_budgets"] == [1]

    def test_export_step_choices(self):
        """Test that --step only accepts 1, 2 or both."""
        assert ExportLpConfig(model="bundled", step="2").steps() == (2,)
        with pytest.raises(ValueError, match="--step"):
            ExportLpConfig(model="bundled", step="3").steps()


class TestValidate:
    """Test 'mtd validate'."""

    def test_bundled(self, capsys):
        """Test the shipped model."""
        assert main(["validate", "bundled"]) == 0
        assert "is valid" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        """Test that a missing model is an I/O error."""
        assert main(["validate", str(tmp_path / "nope.json")]) == 3
        assert "not found" in _flat(capsys.readouterr().out)

    def test_bad_distribution(self, model_file, capsys):
        """Test that a row not summing to one is a validation error."""
        data = toy_model_data()
        data["configs"]["a"]["transitions"]["start"]["scan"] = {"foothold": 0.6, "start": 0.5}
        assert main(["validate", str(model_file(data))]) == 1
        assert "do not sum to 1" in _flat(capsys.readouterr().out)


class TestProductAndSolve:
    """Test 'mtd product' and 'mtd solve'."""

    def test_product_stdout(self, toy_file, capsys):
        """Test DOT output on stdout."""
        assert main(["product", str(toy_file)]) == 0
        assert capsys.readouterr().out.startswith("digraph product {")

    def test_product_with_allocation(self, toy_file, allocated, tmp_path):
        """Test dumping M^{x,y} to a file."""
        out = tmp_path / "product.dot"
        assert main(["product", str(toy_file), "--allocation", str(allocated / "allocation.json"),
                     "--out", str(out)]) == 0
        assert '"sink"' in out.read_text()

    def test_solve_json(self, toy_file, tmp_path):
        """Test the value vector output."""
        out = tmp_path / "values.json"
        assert main(["solve", str(toy_file), "--method", "vi", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["method"] == "vi"
        assert data["values"]["goal@a"] == 1.0
        assert 0.0 < data["success_rate"] <= 1.0

    def test_solve_unknown_method(self, toy_file, capsys):
        """Test that an unknown solver name is reported."""
        assert main(["solve", str(toy_file), "--method", "simplex"]) == 1
        assert "No value solver" in _flat(capsys.readouterr().out)


class TestAllocate:
    """Test 'mtd allocate'."""

    def test_outputs(self, allocated):
        """Test the three result files."""
        assert {p.name for p in allocated.iterdir()} == {"allocation.json", "values.json", "summary.txt"}
        data = json.loads((allocated / "allocation.json").read_text())
        assert set(data["detectors"]) == {"a", "b"}
        assert data["method"] == "milp"
        assert data["mu"] == 0.1
        assert data["step2"]["success_rate"] <= data["step2"]["perceived_rate"] + 1e-9
        values = json.loads((allocated / "values.json").read_text())
        assert set(values) == {"attacker_value", "policy_value", "defender_value", "policy"}
        assert "Attack success rate" in (allocated / "summary.txt").read_text()

    def test_export_lp(self, toy_file, tmp_path):
        """Test that --export-lp writes both MILPs next to the results."""
        out_dir = tmp_path / "with_lp"
        assert main(["allocate", str(toy_file), "--export-lp", "--out", str(out_dir)]) == 0
        assert (out_dir / "step1.lp").exists()
        assert (out_dir / "step2.lp").exists()

    def test_brute_force(self, toy_file, tmp_path):
        """Test the enumeration back-end."""
        out_dir = tmp_path / "brute"
        assert main(["allocate", str(toy_file), "--method", "brute-force", "--workers", "2",
                     "--out", str(out_dir)]) == 0
        assert json.loads((out_dir / "allocation.json").read_text())["method"] == "brute-force"

    def test_invalid_override(self, toy_file, tmp_path, capsys):
        """Test that an out-of-range false negative rate is rejected."""
        assert main(["allocate", str(toy_file), "--eps", "1.5", "--out", str(tmp_path / "x")]) == 1
        assert "[0, 1]" in _flat(capsys.readouterr().out)


class TestSimulate:
    """Test 'mtd simulate'."""

    def test_report(self, toy_file, allocated, tmp_path):
        """Test the simulation report against the analytic rate."""
        out = tmp_path / "report.json"
        assert main(["simulate", str(toy_file), str(allocated / "allocation.json"),
                     "--trials", "2000", "--seed", "5", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["trials"] == 2000
        assert report["mu"] == 0.1
        assert abs(report["empirical_success_rate"] - report["analytic_success_rate"]) <= \
            5 * max(report["stderr"], 0.01)

    def test_policy_from_value_iteration(self, toy_file, allocated, mocker):
        """Test that the simulated policy comes from the same solver as the allocation."""
        vi = mocker.spy(commands, "value_iteration")
        assert main(["simulate", str(toy_file), str(allocated / "allocation.json"), "--trials", "10"]) == 0
        vi.assert_called_once()

    def test_analytic_rate_matches_allocation(self, toy_file, allocated, tmp_path):
        """Test that the analytic rate reproduces the allocation's Step-2 rate."""
        out = tmp_path / "report.json"
        assert main(["simulate", str(toy_file), str(allocated / "allocation.json"),
                     "--trials", "10", "--out", str(out)]) == 0
        step2 = json.loads((allocated / "allocation.json").read_text())["step2"]
        report = json.loads(out.read_text())
        assert report["analytic_success_rate"] == pytest.approx(step2["success_rate"], abs=1e-9)

    def test_unknown_state(self, toy_file, tmp_path, capsys):
        """Test that allocations naming unknown states are rejected."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"detectors": {"a": [["nowhere", "scan"]]}, "stealthy": {}}))
        assert main(["simulate", str(toy_file), str(path), "--trials", "10"]) == 1
        assert "Allocation does not match the model" in _flat(capsys.readouterr().out)

    def test_not_an_allocation(self, toy_file, tmp_path):
        """Test that arbitrary JSON is a parse error."""
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"hello": 1}))
        assert main(["simulate", str(toy_file), str(path)]) == 1


class TestSweepAndExport:
    """Test 'mtd sweep' and 'mtd export-lp'."""

    def test_single_cell(self, toy_file, tmp_path):
        """Test a one-cell sweep."""
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(toy_file), "--k", "1", "--h", "0", "--eps", "0.3", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert len(rows) == 1
        assert rows[0]["k"] == "1"
        assert float(rows[0]["defender_value_V1"]) <= float(rows[0]["attacker_value_V2"]) + 1e-9

    def test_cells_match_allocate(self, toy_file, tmp_path):
        """Test that each sweep cell reproduces 'mtd allocate' run on that cell alone."""
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(toy_file), "--k", "0,1", "--h", "1", "--eps", "0.3",
                     "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        for row in rows:
            out_dir = tmp_path / f"cell_{row['k']}"
            assert main(["allocate", str(toy_file), "--k", row["k"], "--h", row["h"], "--eps", row["eps"],
                         "--out", str(out_dir)]) == 0
            data = json.loads((out_dir / "allocation.json").read_text())
            assert float(row["attacker_value_V2"]) == pytest.approx(data["step1"]["success_rate"], abs=1e-9)
            assert float(row["defender_value_V1"]) == pytest.approx(data["step2"]["success_rate"], abs=1e-9)

    def test_with_simulation(self, toy_file, tmp_path):
        """Test that --trials adds the empirical columns."""
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(toy_file), "--k", "0,1", "--h", "1", "--trials", "200",
                     "--workers", "2", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert [row["k"] for row in rows] == ["0", "1"]
        assert "empirical_rate" in rows[0]

    def test_bad_grid(self, toy_file, tmp_path):
        """Test that invalid grids fail without leaving a CSV behind."""
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(toy_file), "--eps", "2.0", "--out", str(out)]) == 1
        assert not out.exists()

    def test_export_lp(self, toy_file, tmp_path):
        """Test exporting the Step-1 MILP only."""
        out_dir = tmp_path / "lp"
        assert main(["export-lp", str(toy_file), "--step", "1", "--out", str(out_dir)]) == 0
        assert [p.name for p in out_dir.iterdir()] == ["step1.lp"]
