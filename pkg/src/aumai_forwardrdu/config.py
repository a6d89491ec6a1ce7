"""Scenario configuration: pydantic models and JSON/YAML loading."""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Any

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from aumai_forwardrdu.distortion import (
    Distortion,
    WangForwardDistortion,
    distortion_from_spec,
)
from aumai_forwardrdu.errors import ConfigError
from aumai_forwardrdu.market import accumulate_risk
from aumai_forwardrdu.models import (
    DiracAtom,
    DiracMixture,
    ForwardPair,
    MarketCurve,
    MarketSegment,
)
from aumai_forwardrdu.utility import CRRAUtility, ForwardUtility, LogUtility, Utility

logger = logging.getLogger(__name__)


class SegmentSpec(BaseModel):
    """One piecewise-constant market segment."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    t0: float = Field(ge=0.0)
    t1: float
    lambda_: list[float] = Field(alias="lambda")
    sigma: list[list[float]]


class MarketSpec(BaseModel):
    """Market coefficients: explicit segments or constant ``lambda``/``sigma``."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    segments: list[SegmentSpec] | None = None
    lambda_: float | list[float] | None = Field(default=None, alias="lambda")
    sigma: float | list[list[float]] | None = None

    @model_validator(mode="after")
    def _one_form(self) -> MarketSpec:
        """Require either segments or a constant lambda/sigma pair."""
        constant = self.lambda_ is not None or self.sigma is not None
        complete = self.lambda_ is not None and self.sigma is not None
        if self.segments is None and not complete:
            raise ValueError("market needs 'segments' or both 'lambda' and 'sigma'")
        if self.segments is not None and constant:
            raise ValueError("market takes 'segments' or 'lambda'/'sigma', not both")
        return self

    def to_curve(self, horizon: float) -> MarketCurve:
        """Build the validated market curve."""
        if self.segments is not None:
            return MarketCurve(
                segments=tuple(
                    MarketSegment(
                        t0=s.t0,
                        t1=s.t1,
                        **{"lambda": tuple(s.lambda_)},
                        sigma=tuple(tuple(row) for row in s.sigma),
                    )
                    for s in self.segments
                )
            )
        if self.lambda_ is None or self.sigma is None:
            raise ValueError("market needs both 'lambda' and 'sigma'")
        return MarketCurve.from_constant(self.lambda_, self.sigma, horizon)


class AtomSpec(BaseModel):
    """A single Dirac atom."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    y: float = Field(gt=0.0)
    m: float = Field(default=1.0, gt=0.0)


class MixtureSpec(BaseModel):
    """Dirac mixture given by atoms or one of the named constructors."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    atoms: list[AtomSpec] | None = None
    crra: dict[str, float] | None = None
    log: dict[str, Any] | None = None
    two_dirac: dict[str, float] | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> MixtureSpec:
        """Exactly one representation must be present."""
        forms = (self.atoms, self.crra, self.log, self.two_dirac)
        given = [v for v in forms if v is not None]
        if len(given) != 1:
            raise ValueError("mixture needs exactly one of atoms, crra, log, two_dirac")
        if self.crra is not None and "alpha" not in self.crra:
            raise ValueError("crra mixture needs alpha")
        if self.two_dirac is not None and "theta" not in self.two_dirac:
            raise ValueError("two_dirac mixture needs theta")
        return self

    def to_mixture(self) -> DiracMixture:
        """Build the mixture."""
        if self.atoms is not None:
            atoms = tuple(DiracAtom(y=a.y, m=a.m) for a in self.atoms)
            return DiracMixture(atoms=atoms)
        if self.crra is not None:
            return DiracMixture.crra(self.crra["alpha"])
        if self.two_dirac is not None:
            return DiracMixture.two_dirac(self.two_dirac["theta"])
        return DiracMixture.log()


class DistortionSpec(BaseModel):
    """Distortion family and its parameters (``family`` plus free keys)."""

    model_config = ConfigDict(frozen=True, extra="allow")

    family: str = "wang_forward"

    def to_distortion(self, A: float, gamma: float) -> Distortion:
        """Distortion for cumulated risk *A*; forward Wang defaults to *gamma*."""
        spec = self.model_dump()
        if spec["family"] == "wang_forward":
            spec.setdefault("gamma", gamma)
        return distortion_from_spec(spec, A)


class UtilitySpec(BaseModel):
    """Backward-problem utility: the forward utility at the horizon, CRRA or log."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: str = Field(default="forward", pattern="^(forward|crra|log)$")
    alpha: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _alpha_for_crra(self) -> UtilitySpec:
        """CRRA needs alpha."""
        if self.family == "crra" and self.alpha is None:
            raise ValueError("crra utility needs alpha")
        return self


class BackwardSpec(BaseModel):
    """Inputs of ``solve-backward``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_wealth: float = Field(default=1.0, gt=0.0)
    utility: UtilitySpec = Field(default_factory=UtilitySpec)
    distortion: DistortionSpec = Field(default_factory=DistortionSpec)


class GridSpec(BaseModel):
    """Evaluation grids."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    s: list[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5])
    t: list[float] = Field(default_factory=lambda: [0.5, 1.0])
    x: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    p_count: int = Field(default=1001, ge=3)

    @field_validator("x")
    @classmethod
    def wealth_must_be_positive(cls, value: list[float]) -> list[float]:
        """Wealth grid points are positive."""
        if any(v <= 0.0 for v in value):
            raise ValueError("wealth grid points must be positive")
        return value


class SimulationSpec(BaseModel):
    """Monte Carlo settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    enabled: bool = False
    n_paths: int = Field(default=10_000, gt=0)
    n_steps: int = Field(default=100, gt=0)
    seed: int | None = Field(default=None, ge=0)
    block_size: int = Field(default=4096, gt=0)
    record_every: int = Field(default=1, gt=0)
    x0: float = Field(default=1.0, gt=0.0)


class CheckSpec(BaseModel):
    """Checks run by ``verify``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    value_preservation: bool = True
    suboptimality: bool = True
    bifurcation: bool = True
    pde: bool = True
    reduction: bool = True
    dynamic: bool = True
    martingale: bool = True
    kappas: list[float] | None = None
    dynamic_t: float | None = None
    dynamic_x: float = Field(default=1.0, gt=0.0)


class ToleranceSpec(BaseModel):
    """Every documented tolerance, scaled together by ``--tolerance-scale``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    value_preservation: float = 1e-6
    suboptimality: float = 1e-6
    dynamic_gap: float = 1e-6
    negative_control: float = 1e-3
    budget: float = 1e-8
    envelope: float = 1e-12
    fit: float = 1e-6
    monotone_slack: float = 1e-10
    pde: float = 1e-4
    standard_errors: float = 4.0

    def scaled(self, factor: float) -> ToleranceSpec:
        """Multiply the acceptance tolerances by *factor*.

        The negative-control threshold is a lower bound and is divided instead.
        """
        if factor <= 0.0:
            raise ValueError("tolerance scale must be positive")
        values = {name: value * factor for name, value in self.model_dump().items()}
        values["negative_control"] = self.negative_control / factor
        return ToleranceSpec(**values)


class ScenarioConfig(BaseModel):
    """A complete scenario."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    gamma: float = Field(ge=0.0)
    horizon: float = Field(default=1.0, gt=0.0)
    market: MarketSpec
    mixture: MixtureSpec
    distortion: DistortionSpec | None = None
    grids: GridSpec = Field(default_factory=GridSpec)
    simulation: SimulationSpec = Field(default_factory=SimulationSpec)
    checks: CheckSpec = Field(default_factory=CheckSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    backward: BackwardSpec = Field(default_factory=BackwardSpec)
    output_dir: str = "out"

    @model_validator(mode="after")
    def _consistent(self) -> ScenarioConfig:
        """Check grids against the horizon, the seed and the market."""
        curve = self.market.to_curve(self.horizon)
        self.mixture.to_mixture()
        if abs(curve.horizon - self.horizon) > 1e-12:
            raise ValueError(
                f"market covers [0, {curve.horizon}], horizon is {self.horizon}"
            )
        for name in ("s", "t"):
            points = getattr(self.grids, name)
            if any(p < 0.0 or p > self.horizon for p in points):
                raise ValueError(f"grid {name!r} leaves [0, {self.horizon}]")
        if self.simulation.enabled and self.simulation.seed is None:
            raise ValueError("simulation.seed is required when simulation is enabled")
        total = accumulate_risk(curve, 0.0, self.horizon)
        for spec in (self.distortion, self.backward.distortion):
            if spec is not None:
                spec.to_distortion(total, self.gamma)
        return self

    def curve(self) -> MarketCurve:
        """The market curve."""
        return self.market.to_curve(self.horizon)

    def pair(self) -> ForwardPair:
        """The forward pair of the scenario."""
        return ForwardPair(
            gamma=self.gamma, mixture=self.mixture.to_mixture(), market=self.curve()
        )

    def distortion_for(self, A: float) -> Distortion:
        """Distortion on an interval of cumulated risk *A*."""
        if self.distortion is None:
            return WangForwardDistortion(gamma=self.gamma, A=A)
        return self.distortion.to_distortion(A, self.gamma)

    def backward_utility(self) -> Utility:
        """Utility of the backward problem."""
        spec = self.backward.utility
        if spec.family == "crra":
            if spec.alpha is None:
                raise ConfigError("crra utility needs alpha")
            return CRRAUtility(spec.alpha)
        if spec.family == "log":
            return LogUtility()
        return ForwardUtility(self.pair(), self.horizon)


def _line_of_key(text: str, key: str) -> int | None:
    pattern = re.compile(rf'(^|[\s{{,])"?{re.escape(key)}"?\s*:')
    for number, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return number
    return None


def _parse(text: str, suffix: str) -> Any:
    if suffix in (".yaml", ".yml"):
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"invalid YAML: {exc}", line=line) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def parse_scenario(text: str, suffix: str = ".json") -> ScenarioConfig:
    """Parse and validate a scenario from text.

    Raises:
        ConfigError: With the 1-based line of the problem when it can be located.
    """
    data = _parse(text, suffix.lower())
    if not isinstance(data, dict):
        raise ConfigError("a scenario must be a mapping", line=1)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        keys = [str(part) for part in first["loc"] if isinstance(part, str)]
        line = None
        for key in reversed(keys):
            line = _line_of_key(text, key)
            if line is not None:
                break
        location = ".".join(str(part) for part in first["loc"]) or "scenario"
        raise ConfigError(f"{location}: {first['msg']}", line=line) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a JSON (canonical) or YAML scenario file.

    Raises:
        ConfigError: If the file cannot be read, parsed or validated.
    """
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc
    scenario = parse_scenario(text, source.suffix)
    logger.info("loaded scenario %r from %s", scenario.name, source)
    return scenario


__all__ = [
    "SegmentSpec",
    "MarketSpec",
    "AtomSpec",
    "MixtureSpec",
    "DistortionSpec",
    "UtilitySpec",
    "BackwardSpec",
    "GridSpec",
    "SimulationSpec",
    "CheckSpec",
    "ToleranceSpec",
    "ScenarioConfig",
    "parse_scenario",
    "load_scenario",
]
