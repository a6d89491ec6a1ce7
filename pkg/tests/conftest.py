"""Shared pytest fixtures for aumai-forwardrdu tests."""

from __future__ import annotations

import json
import textwrap
from pathlib import Path

import pytest

from aumai_forwardrdu.models import DiracMixture, ForwardPair, KernelLaw, MarketCurve

# ---------------------------------------------------------------------------
# Market constants
# ---------------------------------------------------------------------------

LAMBDA = 0.3
SIGMA = 0.2
HORIZON = 1.0
# A_{0,1} for the constant market above.
A_UNIT = 0.09

# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

CRRA_SCENARIO: dict[str, object] = {
    "name": "crra-gamma-2",
    "gamma": 2.0,
    "horizon": 1.0,
    "market": {"lambda": LAMBDA, "sigma": SIGMA},
    "mixture": {"crra": {"alpha": 2.0}},
    "grids": {"s": [0.0, 0.5], "t": [1.0], "x": [1.0], "p_count": 201},
    "checks": {"martingale": False},
}

CRRA_UNIT_GAMMA_SCENARIO: dict[str, object] = {
    **CRRA_SCENARIO,
    "name": "crra-gamma-1",
    "gamma": 1.0,
}

PRELEC_SCENARIO: dict[str, object] = {
    **CRRA_SCENARIO,
    "name": "prelec",
    "distortion": {"family": "prelec", "alpha": 0.65},
}

SIMULATION_SCENARIO: dict[str, object] = {
    **CRRA_SCENARIO,
    "name": "simulation",
    "simulation": {
        "enabled": True,
        "n_paths": 300,
        "n_steps": 8,
        "seed": 20240601,
        "block_size": 64,
    },
}

YAML_SCENARIO = textwrap.dedent(
    """\
    name: yaml-log
    gamma: 0.5
    market:
      segments:
        - {t0: 0.0, t1: 0.5, lambda: [0.3], sigma: [[0.2]]}
        - {t0: 0.5, t1: 1.0, lambda: [0.4], sigma: [[0.25]]}
    mixture:
      log: {}
    """
)

NEGATIVE_GAMMA_JSON = textwrap.dedent(
    """\
    {
      "name": "broken",
      "gamma": -1.0,
      "market": {"lambda": 0.3, "sigma": 0.2},
      "mixture": {"log": {}}
    }
    """
)


def write_scenario(
    directory: Path, data: dict[str, object], name: str = "scenario.json"
) -> Path:
    """Write *data* as an indented JSON scenario file."""
    path = directory / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Model fixtures
# ---------------------------------------------------------------------------


@pytest.fixture()
def market() -> MarketCurve:
    return MarketCurve.from_constant(LAMBDA, SIGMA, HORIZON)


@pytest.fixture()
def two_segment_market() -> MarketCurve:
    return MarketCurve.model_validate(
        {
            "segments": [
                {"t0": 0.0, "t1": 0.5, "lambda": [0.3], "sigma": [[0.2]]},
                {"t0": 0.5, "t1": 1.0, "lambda": [0.4], "sigma": [[0.25]]},
            ]
        }
    )


@pytest.fixture()
def unit_law() -> KernelLaw:
    return KernelLaw(A=A_UNIT)


@pytest.fixture()
def crra_pair(market: MarketCurve) -> ForwardPair:
    return ForwardPair(gamma=2.0, mixture=DiracMixture.crra(2.0), market=market)


@pytest.fixture()
def log_pair(market: MarketCurve) -> ForwardPair:
    return ForwardPair(gamma=1.5, mixture=DiracMixture.log(), market=market)


@pytest.fixture()
def two_dirac_pair(market: MarketCurve) -> ForwardPair:
    return ForwardPair(gamma=0.8, mixture=DiracMixture.two_dirac(0.5), market=market)


@pytest.fixture()
def degenerate_pair(market: MarketCurve) -> ForwardPair:
    return ForwardPair(gamma=0.0, mixture=DiracMixture.crra(2.0), market=market)
