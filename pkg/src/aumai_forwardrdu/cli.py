"""CLI entry point for aumai-forwardrdu."""

from __future__ import annotations

import json
import logging
import os
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, NoReturn, TypeVar

import click
import numpy as np
import pandas as pd

from aumai_forwardrdu.backward_solver import solve_multiplier
from aumai_forwardrdu.config import ScenarioConfig, load_scenario
from aumai_forwardrdu.distortion import check_degenerate, fit_wang_gamma
from aumai_forwardrdu.errors import ConfigError, ForwardRDUError
from aumai_forwardrdu.forward_utility import forward_u, forward_u_prime
from aumai_forwardrdu.market import kernel_law
from aumai_forwardrdu.models import VerificationReport
from aumai_forwardrdu.simulate import simulate_optimal, write_csv, write_summary
from aumai_forwardrdu.verify import run_checks

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging() -> None:
    name = os.environ.get("FRDU_LOG", "info").lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _scenario_options(func: F) -> F:
    """Options shared by every subcommand."""
    options = [
        click.option(
            "--config",
            "config_path",
            required=True,
            type=click.Path(dir_okay=False),
            help="Scenario file (JSON, or YAML by extension).",
        ),
        click.option(
            "--out",
            "out_dir",
            default=None,
            type=click.Path(file_okay=False),
            help="Output directory; defaults to the scenario's output_dir.",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


seed_option = click.option(
    "--seed",
    default=None,
    type=click.IntRange(min=0, max=2**64 - 1),
    help="Override the simulation seed.",
)

threads_option = click.option(
    "--threads",
    default=1,
    show_default=True,
    type=click.IntRange(min=1),
    help="Worker threads for checks and simulation.",
)

tolerance_option = click.option(
    "--tolerance-scale",
    default=1.0,
    show_default=True,
    type=click.FloatRange(min=0.0, min_open=True),
    help="Multiply every tolerance by this factor.",
)


def _load(config_path: str, seed: int | None = None) -> ScenarioConfig:
    """Load the scenario, exiting with code 2 on configuration errors."""
    try:
        scenario = load_scenario(config_path)
    except ConfigError as exc:
        click.echo(_format_config_error(config_path, exc), err=True)
        sys.exit(2)
    if seed is not None:
        simulation = scenario.simulation.model_copy(update={"seed": seed})
        scenario = scenario.model_copy(update={"simulation": simulation})
    return scenario


def _format_config_error(config_path: str, exc: ConfigError) -> str:
    """Return ``path:line: message`` (the line is omitted when unknown)."""
    if exc.line is not None:
        return f"{config_path}:{exc.line}: {exc}"
    return f"{config_path}: {exc}"


def _output_dir(scenario: ScenarioConfig, out_dir: str | None) -> Path:
    target = Path(out_dir if out_dir is not None else scenario.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    return target


def _fail(exc: ForwardRDUError) -> NoReturn:
    click.echo(f"Error: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.version_option()
def main() -> None:
    """AumAI ForwardRDU CLI: forward rank-dependent performance criteria."""
    _configure_logging()


@main.command("construct")
@_scenario_options
def construct_command(config_path: str, out_dir: str | None) -> None:
    """Tabulate u_t(x) and w_{s,t}(p) on the scenario grids."""
    scenario = _load(config_path)
    target = _output_dir(scenario, out_dir)
    pair = scenario.pair()
    grids = scenario.grids
    times = sorted({0.0, *grids.s, *grids.t})
    wealth = np.geomspace(min(grids.x) / 10.0, max(grids.x) * 10.0, 201)
    try:
        utility = pd.concat(
            [
                pd.DataFrame(
                    {
                        "t": t,
                        "x": wealth,
                        "u": forward_u(pair, t, wealth),
                        "u_prime": forward_u_prime(pair, t, wealth),
                    }
                )
                for t in times
            ],
            ignore_index=True,
        )
        p = np.linspace(0.0, 1.0, grids.p_count)
        tables: list[pd.DataFrame] = []
        for s in grids.s:
            for t in grids.t:
                if s < t:
                    law = kernel_law(pair.market, s, t)
                    w = scenario.distortion_for(law.A)
                    tables.append(pd.DataFrame({"s": s, "t": t, "p": p, "w": w(p)}))
    except ForwardRDUError as exc:
        _fail(exc)
    if not tables:
        click.echo(f"{config_path}: grids contain no interval with s < t", err=True)
        sys.exit(2)
    distortion = pd.concat(tables, ignore_index=True)
    utility.to_csv(target / "utility.csv", index=False, float_format="%.17g")
    distortion.to_csv(target / "distortion.csv", index=False, float_format="%.17g")
    logger.info("construct: wrote tables to %s", target)
    click.echo(f"Written {target / 'utility.csv'} and {target / 'distortion.csv'}")


@main.command("simulate")
@_scenario_options
@seed_option
@threads_option
def simulate_command(
    config_path: str, out_dir: str | None, seed: int | None, threads: int
) -> None:
    """Simulate optimal wealth and strategy paths."""
    scenario = _load(config_path, seed)
    sim = scenario.simulation
    if sim.seed is None:
        message = "simulation.seed is required (or pass --seed)"
        click.echo(f"{config_path}: {message}", err=True)
        sys.exit(2)
    target = _output_dir(scenario, out_dir)
    grid = np.linspace(0.0, scenario.horizon, sim.n_steps + 1)
    try:
        paths = simulate_optimal(
            scenario.pair(),
            sim.x0,
            grid,
            sim.n_paths,
            sim.seed,
            threads=threads,
            block_size=sim.block_size,
            record_every=sim.record_every,
        )
    except ForwardRDUError as exc:
        _fail(exc)
    write_csv(paths, target / "paths.csv")
    write_summary(paths, target / "summary.json")
    if paths.flagged_count:
        click.echo(f"{paths.flagged_count} paths flagged", err=True)
    click.echo(f"Written {target / 'paths.csv'}")


def _residual_table(report: VerificationReport) -> pd.DataFrame:
    frames = [
        pd.DataFrame(check.rows).assign(check=check.name)
        for check in report.checks
        if check.rows
    ]
    if not frames:
        return pd.DataFrame({"check": []})
    table = pd.concat(frames, ignore_index=True)
    return table[["check", *[c for c in table.columns if c != "check"]]]


@main.command("verify")
@_scenario_options
@seed_option
@threads_option
@tolerance_option
def verify_command(
    config_path: str,
    out_dir: str | None,
    seed: int | None,
    threads: int,
    tolerance_scale: float,
) -> None:
    """Run the enabled checks; exits with code 1 when any fails."""
    scenario = _load(config_path, seed)
    target = _output_dir(scenario, out_dir)
    try:
        report = run_checks(scenario, threads=threads, tolerance_scale=tolerance_scale)
    except ForwardRDUError as exc:
        _fail(exc)
    report_path = target / "report.json"
    payload = report.model_dump()
    payload["passed"] = report.passed
    report_path.write_text(json.dumps(payload, indent=2, default=str), encoding="utf-8")
    _residual_table(report).to_csv(
        target / "residuals.csv", index=False, float_format="%.17g"
    )
    for check in report.checks:
        status = click.style("PASS", fg="green") if check.passed else click.style(
            "FAIL", fg="red"
        )
        click.echo(f"[{status}] {check.name}")
    if not report.passed:
        click.echo(click.style(f"Verification failed: {report_path}", fg="red"))
        sys.exit(1)
    click.echo(f"All checks passed: {report_path}")


@main.command("solve-backward")
@_scenario_options
@tolerance_option
def solve_backward_command(
    config_path: str, out_dir: str | None, tolerance_scale: float
) -> None:
    """Solve the backward RDU problem on [0, horizon]."""
    scenario = _load(config_path)
    tol = scenario.tolerances.scaled(tolerance_scale)
    target = _output_dir(scenario, out_dir)
    law = kernel_law(scenario.curve(), 0.0, scenario.horizon)
    spec = scenario.backward
    try:
        w = spec.distortion.to_distortion(law.A, scenario.gamma)
        solution = solve_multiplier(
            scenario.backward_utility(),
            w,
            law,
            spec.initial_wealth,
            budget_tol=tol.budget,
            envelope_tol=tol.envelope,
            fit_tol=tol.fit,
            slack=tol.monotone_slack,
        )
    except ForwardRDUError as exc:
        _fail(exc)
    path = target / "backward.json"
    path.write_text(json.dumps(solution.summary(), indent=2), encoding="utf-8")
    click.echo(
        f"lambda* = {solution.multiplier:.12g} ({solution.branch}); written {path}"
    )


@main.command("classify")
@_scenario_options
@tolerance_option
def classify_command(
    config_path: str, out_dir: str | None, tolerance_scale: float
) -> None:
    """Classify the scenario's distortion on [0, horizon].

    Prints the class and the fitted Wang parameter and writes both to
    ``classification.json``.
    """
    scenario = _load(config_path)
    tol = scenario.tolerances.scaled(tolerance_scale)
    target = _output_dir(scenario, out_dir)
    law = kernel_law(scenario.curve(), 0.0, scenario.horizon)
    try:
        w = scenario.distortion_for(law.A)
        label = check_degenerate(w, law, fit_tol=tol.fit, slack=tol.monotone_slack)
        gamma_hat = None if law.degenerate else fit_wang_gamma(w, law)
    except ForwardRDUError as exc:
        _fail(exc)
    path = target / "classification.json"
    payload = {"classification": label.value, "gamma_hat": gamma_hat, "A": law.A}
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(f"classification: {label.value}")
    if gamma_hat is not None:
        click.echo(f"gamma_hat: {gamma_hat:.10g}")


if __name__ == "__main__":
    main()
