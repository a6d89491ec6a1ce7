"""CLI tests for aumai-forwardrdu."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner, Result

from aumai_forwardrdu.cli import main
from aumai_forwardrdu.config import load_scenario
from aumai_forwardrdu.distortion import TabulatedDistortion, WangForwardDistortion
from aumai_forwardrdu.forward_utility import forward_u
from aumai_forwardrdu.market import kernel_law

from conftest import (
    CRRA_SCENARIO,
    CRRA_UNIT_GAMMA_SCENARIO,
    NEGATIVE_GAMMA_JSON,
    PRELEC_SCENARIO,
    SIMULATION_SCENARIO,
    YAML_SCENARIO,
    write_scenario,
)

COMMANDS = ["construct", "simulate", "verify", "solve-backward", "classify"]

# Simulation settings without a seed.
UNSEEDED_SCENARIO: dict[str, object] = {
    **CRRA_SCENARIO,
    "simulation": {"n_paths": 20, "n_steps": 4},
}

# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture()
def crra_file(tmp_path: Path) -> Path:
    return write_scenario(tmp_path, CRRA_SCENARIO)


@pytest.fixture()
def unit_gamma_file(tmp_path: Path) -> Path:
    return write_scenario(tmp_path, CRRA_UNIT_GAMMA_SCENARIO)


@pytest.fixture()
def simulation_file(tmp_path: Path) -> Path:
    return write_scenario(tmp_path, SIMULATION_SCENARIO)


@pytest.fixture()
def broken_file(tmp_path: Path) -> Path:
    path = tmp_path / "broken.json"
    path.write_text(NEGATIVE_GAMMA_JSON, encoding="utf-8")
    return path


def _invoke(
    runner: CliRunner, command: str, config: Path, out: Path, *extra: str
) -> Result:
    return runner.invoke(
        main, [command, "--config", str(config), "--out", str(out), *extra]
    )


# ---------------------------------------------------------------------------
# main group tests
# ---------------------------------------------------------------------------


class TestMainGroup:
    """Tests for the top-level CLI group."""

    def test_version_flag(self, runner: CliRunner) -> None:
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "0.1.0" in result.output

    def test_help_lists_commands(self, runner: CliRunner) -> None:
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for command in COMMANDS:
            assert command in result.output

    def test_config_is_required(self, runner: CliRunner) -> None:
        result = runner.invoke(main, ["verify"])
        assert result.exit_code == 2


# ---------------------------------------------------------------------------
# Configuration errors
# ---------------------------------------------------------------------------


class TestConfigErrors:
    """Tests for exit code 2 on bad scenario files."""

    @pytest.mark.parametrize("command", COMMANDS)
    def test_invalid_scenario_exits_two(
        self, runner: CliRunner, broken_file: Path, tmp_path: Path, command: str
    ) -> None:
        result = _invoke(runner, command, broken_file, tmp_path / "out")
        assert result.exit_code == 2
        assert f"{broken_file}:3:" in result.output

    def test_missing_file_exits_two(self, runner: CliRunner, tmp_path: Path) -> None:
        result = _invoke(runner, "verify", tmp_path / "absent.json", tmp_path / "out")
        assert result.exit_code == 2
        assert "cannot read" in result.output


# ---------------------------------------------------------------------------
# construct
# ---------------------------------------------------------------------------


class TestConstructCommand:
    """Tests for the 'construct' command."""

    def test_writes_tables(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        result = _invoke(runner, "construct", crra_file, out)
        assert result.exit_code == 0
        utility = pd.read_csv(out / "utility.csv")
        distortion = pd.read_csv(out / "distortion.csv")
        assert list(utility.columns) == ["t", "x", "u", "u_prime"]
        assert list(distortion.columns) == ["s", "t", "p", "w"]
        assert sorted(utility["t"].unique()) == [0.0, 0.5, 1.0]
        assert len(distortion) == 2 * 201

    def test_initial_utility_is_crra(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        _invoke(runner, "construct", crra_file, out)
        utility = pd.read_csv(out / "utility.csv")
        initial = utility[utility["t"] == 0.0]
        np.testing.assert_allclose(initial["u"], -1.0 / initial["x"], rtol=1e-12)

    def test_distortion_table_reloads(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        _invoke(runner, "construct", crra_file, out)
        distortion = pd.read_csv(out / "distortion.csv")
        first = distortion[distortion["s"] == 0.0]
        table = TabulatedDistortion(p=tuple(first["p"]), w=tuple(first["w"]))
        p = first["p"].to_numpy()
        np.testing.assert_allclose(table(p), first["w"], atol=1e-12)

    def test_yaml_scenario(self, runner: CliRunner, tmp_path: Path) -> None:
        path = tmp_path / "scenario.yaml"
        path.write_text(YAML_SCENARIO, encoding="utf-8")
        result = _invoke(runner, "construct", path, tmp_path / "out")
        assert result.exit_code == 0

    def test_tables_reproduce_library_values(
        self, runner: CliRunner, tmp_path: Path
    ) -> None:
        grids = {"s": [0.0, 0.5], "t": [1.0], "x": [1.0], "p_count": 2001}
        path = write_scenario(tmp_path, {**CRRA_SCENARIO, "grids": grids})
        out = tmp_path / "out"
        assert _invoke(runner, "construct", path, out).exit_code == 0
        pair = load_scenario(path).pair()
        utility = pd.read_csv(out / "utility.csv")
        for t, rows in utility.groupby("t"):
            x = rows["x"].to_numpy()
            np.testing.assert_allclose(
                rows["u"], forward_u(pair, float(t), x), rtol=1e-12
            )
        distortion = pd.read_csv(out / "distortion.csv")
        for (s, t), rows in distortion.groupby(["s", "t"]):
            table = TabulatedDistortion(p=tuple(rows["p"]), w=tuple(rows["w"]))
            p = np.linspace(0.02, 0.98, 97) + 2.5e-4
            law = kernel_law(pair.market, float(s), float(t))
            expected = WangForwardDistortion(gamma=2.0, A=law.A)(p)
            np.testing.assert_allclose(table(p), expected, atol=1e-6)

    def test_threads_option_is_not_offered(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        result = _invoke(
            runner, "construct", crra_file, tmp_path / "out", "--threads", "2"
        )
        assert result.exit_code == 2


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


class TestSimulateCommand:
    """Tests for the 'simulate' command."""

    def test_same_seed_same_bytes(
        self, runner: CliRunner, simulation_file: Path, tmp_path: Path
    ) -> None:
        first = _invoke(runner, "simulate", simulation_file, tmp_path / "a")
        second = _invoke(
            runner, "simulate", simulation_file, tmp_path / "b", "--threads", "3"
        )
        assert first.exit_code == 0
        assert second.exit_code == 0
        assert (tmp_path / "a" / "paths.csv").read_bytes() == (
            tmp_path / "b" / "paths.csv"
        ).read_bytes()

    def test_writes_summary(
        self, runner: CliRunner, simulation_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        _invoke(runner, "simulate", simulation_file, out)
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["seed"] == 20240601
        assert summary["n_paths"] == 300

    def test_seed_override(
        self, runner: CliRunner, simulation_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        result = _invoke(runner, "simulate", simulation_file, out, "--seed", "5")
        assert result.exit_code == 0
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["seed"] == 5

    def test_missing_seed_exits_two(
        self, runner: CliRunner, tmp_path: Path
    ) -> None:
        path = write_scenario(tmp_path, UNSEEDED_SCENARIO)
        result = _invoke(runner, "simulate", path, tmp_path / "out")
        assert result.exit_code == 2
        assert "seed" in result.output

    def test_seed_flag_supplies_missing_seed(
        self, runner: CliRunner, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        path = write_scenario(tmp_path, UNSEEDED_SCENARIO)
        result = _invoke(runner, "simulate", path, out, "--seed", "11")
        assert result.exit_code == 0
        assert (out / "paths.csv").exists()


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


class TestVerifyCommand:
    """Tests for the 'verify' command."""

    def test_crra_scenario_passes(
        self, runner: CliRunner, unit_gamma_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        result = _invoke(runner, "verify", unit_gamma_file, out)
        assert result.exit_code == 0
        assert "All checks passed" in result.output
        assert "reduction" in result.output
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["passed"] is True
        residuals = pd.read_csv(out / "residuals.csv")
        assert residuals.columns[0] == "check"

    def test_failed_check_exits_one(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        result = _invoke(
            runner, "verify", crra_file, out, "--tolerance-scale", "1e-9"
        )
        assert result.exit_code == 1
        assert "Verification failed" in result.output
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["passed"] is False

    def test_rejects_nonpositive_tolerance_scale(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        result = _invoke(
            runner, "verify", crra_file, tmp_path / "out", "--tolerance-scale", "0"
        )
        assert result.exit_code == 2


# ---------------------------------------------------------------------------
# solve-backward and classify
# ---------------------------------------------------------------------------


class TestSolveBackwardCommand:
    """Tests for the 'solve-backward' command."""

    def test_forward_utility_multiplier(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        result = _invoke(runner, "solve-backward", crra_file, out)
        assert result.exit_code == 0
        assert "lambda* = " in result.output
        payload = json.loads((out / "backward.json").read_text(encoding="utf-8"))
        assert payload["multiplier"] == pytest.approx(1.0, rel=1e-8)
        assert payload["branch"] == "jin_zhou"
        assert len(payload["table"]["X_star"]) == 999

    def test_prelec_log_uses_envelope(self, runner: CliRunner, tmp_path: Path) -> None:
        backward = {
            "initial_wealth": 2.0,
            "utility": {"family": "log"},
            "distortion": {"family": "prelec", "alpha": 0.65},
        }
        path = write_scenario(tmp_path, {**CRRA_SCENARIO, "backward": backward})
        out = tmp_path / "out"
        result = _invoke(runner, "solve-backward", path, out)
        assert result.exit_code == 0
        payload = json.loads((out / "backward.json").read_text(encoding="utf-8"))
        assert payload["branch"] == "envelope"
        assert payload["achieved_budget"] == pytest.approx(2.0, rel=1e-8)

    def test_tolerance_scale_reaches_the_budget_check(
        self, runner: CliRunner, tmp_path: Path
    ) -> None:
        backward = {
            "initial_wealth": 2.0,
            "utility": {"family": "log"},
            "distortion": {"family": "prelec", "alpha": 0.65},
        }
        path = write_scenario(tmp_path, {**CRRA_SCENARIO, "backward": backward})
        out = tmp_path / "out"
        scale = ["--tolerance-scale", "1e-12"]
        result = _invoke(runner, "solve-backward", path, out, *scale)
        assert result.exit_code == 1


class TestClassifyCommand:
    """Tests for the 'classify' command."""

    def test_forward_wang(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        result = _invoke(runner, "classify", crra_file, tmp_path / "out")
        assert result.exit_code == 0
        assert "classification: nondegenerate" in result.output
        assert "gamma_hat: 2" in result.output

    def test_prelec_is_neither(self, runner: CliRunner, tmp_path: Path) -> None:
        path = write_scenario(tmp_path, PRELEC_SCENARIO)
        result = _invoke(runner, "classify", path, tmp_path / "out")
        assert result.exit_code == 0
        assert "classification: neither" in result.output

    def test_degenerate_family(self, runner: CliRunner, tmp_path: Path) -> None:
        data = {**CRRA_SCENARIO, "distortion": {"family": "degenerate"}}
        path = write_scenario(tmp_path, data)
        result = _invoke(runner, "classify", path, tmp_path / "out")
        assert result.exit_code == 0
        assert "classification: degenerate" in result.output

    def test_writes_classification(
        self, runner: CliRunner, crra_file: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "out"
        assert _invoke(runner, "classify", crra_file, out).exit_code == 0
        payload = json.loads((out / "classification.json").read_text(encoding="utf-8"))
        assert payload["classification"] == "nondegenerate"
        assert payload["gamma_hat"] == pytest.approx(2.0, abs=1e-10)

    def test_tolerance_scale_reaches_the_fit(
        self, runner: CliRunner, tmp_path: Path
    ) -> None:
        data = {**CRRA_SCENARIO, "distortion": {"family": "prelec", "alpha": 0.999}}
        path = write_scenario(tmp_path, data)
        strict = _invoke(runner, "classify", path, tmp_path / "a")
        assert strict.exit_code == 0
        assert "classification: nondegenerate" not in strict.output
        loose = _invoke(
            runner, "classify", path, tmp_path / "b", "--tolerance-scale", "1e4"
        )
        assert loose.exit_code == 0
        assert "classification: nondegenerate" in loose.output
