"""Pydantic models for aumai-forwardrdu."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Segments may leave gaps or overlaps no larger than this.
_CONTIGUITY_TOL = 1e-12


class MarketSegment(BaseModel):
    """A time interval on which the market coefficients are constant."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    t_start: float = Field(alias="t0", ge=0.0, description="Segment start time")
    t_end: float = Field(alias="t1", description="Segment end time")
    lambda_: tuple[float, ...] = Field(
        alias="lambda", description="Market price of risk vector on the segment"
    )
    sigma: tuple[tuple[float, ...], ...] = Field(
        description="Volatility matrix (columns are assets, rows Brownian factors)"
    )

    @model_validator(mode="after")
    def _check_shapes(self) -> MarketSegment:
        """Reject empty intervals and mismatched coefficient shapes."""
        if self.t_end <= self.t_start:
            raise ValueError(
                f"segment end {self.t_end} must exceed its start {self.t_start}"
            )
        n = len(self.lambda_)
        if n == 0:
            raise ValueError("lambda must have at least one component")
        if len(self.sigma) != n or any(len(row) != n for row in self.sigma):
            raise ValueError(f"sigma must be a {n}x{n} matrix")
        return self

    @property
    def length(self) -> float:
        """Length of the time interval."""
        return self.t_end - self.t_start

    @property
    def risk_rate(self) -> float:
        """Squared norm of lambda, the integrand of the cumulated risk."""
        return float(sum(component * component for component in self.lambda_))

    def lambda_array(self) -> np.ndarray:
        """Return lambda as a float array."""
        return np.asarray(self.lambda_, dtype=float)

    def sigma_array(self) -> np.ndarray:
        """Return sigma as a float matrix."""
        return np.asarray(self.sigma, dtype=float)

    def drift(self) -> np.ndarray:
        """Stock drift on the segment, ``mu = sigma^T lambda`` (zero interest rate).

        Wealth then follows ``dX = (sigma pi) . (lambda dt + dW)``.
        """
        return self.sigma_array().T @ self.lambda_array()

    def strategy_direction(self) -> np.ndarray:
        """Return sigma^{-1} lambda, the direction of every optimal strategy."""
        return np.linalg.solve(self.sigma_array(), self.lambda_array())


class MarketCurve(BaseModel):
    """Piecewise-constant deterministic market coefficients on [0, horizon].

    The market price of risk must be component-wise positive and every
    volatility matrix invertible with a condition number below
    ``max_condition``.
    """

    model_config = ConfigDict(frozen=True)

    segments: tuple[MarketSegment, ...] = Field(description="Contiguous segments")
    max_condition: float = Field(default=1e12, gt=1.0)

    @model_validator(mode="after")
    def _check_segments(self) -> MarketCurve:
        """Enforce contiguity, coverage from zero, positivity and invertibility."""
        if not self.segments:
            raise ValueError("a market curve needs at least one segment")
        if abs(self.segments[0].t_start) > _CONTIGUITY_TOL:
            raise ValueError("the first segment must start at time 0")
        n_assets = len(self.segments[0].lambda_)
        previous_end = self.segments[0].t_start
        for index, segment in enumerate(self.segments):
            if abs(segment.t_start - previous_end) > _CONTIGUITY_TOL:
                raise ValueError(
                    f"segment {index} starts at {segment.t_start}, "
                    f"expected {previous_end}"
                )
            if len(segment.lambda_) != n_assets:
                raise ValueError(f"segment {index} has a different asset count")
            if any(component <= 0.0 for component in segment.lambda_):
                raise ValueError(
                    f"segment {index}: lambda must be component-wise positive"
                )
            condition = float(np.linalg.cond(segment.sigma_array()))
            if not math.isfinite(condition) or condition > self.max_condition:
                raise ValueError(
                    f"segment {index}: sigma is singular or ill-conditioned "
                    f"(condition number {condition:.3e})"
                )
            previous_end = segment.t_end
        return self

    @classmethod
    def from_constant(
        cls,
        lambda_: float | list[float],
        sigma: float | list[list[float]],
        horizon: float = 1.0,
    ) -> MarketCurve:
        """Build a single-segment market with constant coefficients."""
        lam = [float(lambda_)] if isinstance(lambda_, (int, float)) else lambda_
        sig = [[float(sigma)]] if isinstance(sigma, (int, float)) else sigma
        segment = MarketSegment(t0=0.0, t1=horizon, **{"lambda": lam}, sigma=sig)
        return cls(segments=(segment,))

    @property
    def horizon(self) -> float:
        """End of the last segment."""
        return self.segments[-1].t_end

    @property
    def n_assets(self) -> int:
        """Number of risky assets N."""
        return len(self.segments[0].lambda_)

    @property
    def boundaries(self) -> list[float]:
        """All segment boundaries, including 0 and the horizon."""
        return [self.segments[0].t_start] + [segment.t_end for segment in self.segments]

    def segment_at(self, t: float) -> MarketSegment:
        """Return the segment containing *t* (right-continuous, last segment closed)."""
        for segment in self.segments:
            if segment.t_start <= t < segment.t_end:
                return segment
        if abs(t - self.horizon) <= _CONTIGUITY_TOL:
            return self.segments[-1]
        raise ValueError(f"time {t} lies outside [0, {self.horizon}]")


class KernelLaw(BaseModel):
    """Lognormal law of the pricing kernel over an interval.

    ``rho = exp(-A/2 - sqrt(A) Z)`` with ``Z`` standard normal, so that
    ``E[rho] = 1``; ``A = 0`` is the point mass at 1.
    """

    model_config = ConfigDict(frozen=True)

    A: float = Field(ge=0.0, description="Cumulated squared market price of risk")

    @property
    def scale(self) -> float:
        """Standard deviation of log(rho), sqrt(A)."""
        return math.sqrt(self.A)

    @property
    def degenerate(self) -> bool:
        """True for the point mass at 1."""
        return self.A == 0.0


class DistortedMarket(BaseModel):
    """The gamma-distorted market: market price of risk gamma * lambda."""

    model_config = ConfigDict(frozen=True)

    base: MarketCurve
    gamma: float = Field(ge=0.0)

    @property
    def horizon(self) -> float:
        """Horizon of the underlying market."""
        return self.base.horizon

    def lambda_at(self, t: float) -> np.ndarray:
        """Distorted market price of risk at time *t*."""
        return self.gamma * self.base.segment_at(t).lambda_array()


class DiracAtom(BaseModel):
    """A point mass ``m * delta_y`` of the measure generating h."""

    model_config = ConfigDict(frozen=True)

    y: float = Field(gt=0.0, description="Atom location")
    m: float = Field(gt=0.0, description="Atom mass")


class DiracMixture(BaseModel):
    """A finite positive mixture of Dirac atoms on (0, infinity)."""

    model_config = ConfigDict(frozen=True)

    atoms: tuple[DiracAtom, ...]

    @field_validator("atoms")
    @classmethod
    def atoms_must_be_distinct(
        cls, value: tuple[DiracAtom, ...]
    ) -> tuple[DiracAtom, ...]:
        """Require a non-empty list of distinct atom locations, sorted by y."""
        if not value:
            raise ValueError("a mixture needs at least one atom")
        locations = [atom.y for atom in value]
        if len(set(locations)) != len(locations):
            raise ValueError("atom locations must be distinct")
        return tuple(sorted(value, key=lambda atom: atom.y))

    @classmethod
    def crra(cls, alpha: float) -> DiracMixture:
        """Mixture of ``u0(x) = x^(1-alpha)/(1-alpha)``: a single atom at 1/alpha."""
        if alpha <= 0.0:
            raise ValueError("alpha must be positive")
        return cls(atoms=(DiracAtom(y=1.0 / alpha, m=1.0),))

    @classmethod
    def log(cls) -> DiracMixture:
        """Mixture of ``u0(x) = log x``: a single atom at 1."""
        return cls(atoms=(DiracAtom(y=1.0, m=1.0),))

    @classmethod
    def two_dirac(cls, theta: float) -> DiracMixture:
        """Two atoms at 1/(1-theta) and 2/(1-theta), unit masses, 0 < theta < 1."""
        if not 0.0 < theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        scale = 1.0 / (1.0 - theta)
        return cls(atoms=(DiracAtom(y=scale, m=1.0), DiracAtom(y=2.0 * scale, m=1.0)))

    def locations(self) -> np.ndarray:
        """Atom locations y_i as an array."""
        return np.array([atom.y for atom in self.atoms])

    def masses(self) -> np.ndarray:
        """Atom masses m_i as an array."""
        return np.array([atom.m for atom in self.atoms])


class ForwardPair(BaseModel):
    """Forward rank-dependent pair generated by (gamma, mixture, market)."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(ge=0.0, description="Distortion parameter")
    mixture: DiracMixture
    market: MarketCurve

    @property
    def degenerate(self) -> bool:
        """True when gamma = 0: no risky investment at any time."""
        return self.gamma == 0.0


class Classification(str, Enum):
    """Outcome of the bifurcation test for a forward distortion."""

    nondegenerate = "nondegenerate"
    degenerate = "degenerate"
    neither = "neither"


class GridFunction(BaseModel):
    """A real function tabulated on a strictly increasing grid of [0, 1]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nodes: np.ndarray
    values: np.ndarray
    vertices: tuple[int, ...] = Field(
        default=(), description="Hull vertex indices when the function is an envelope"
    )

    @model_validator(mode="after")
    def _check_grid(self) -> GridFunction:
        """Require at least three increasing nodes spanning [0, 1] and finite values."""
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must be 1-d arrays of equal length")
        if self.nodes.size < 3:
            raise ValueError("a grid function needs at least 3 nodes")
        if np.any(np.diff(self.nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0:
            raise ValueError("nodes must include 0 and 1")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        return self

    def __call__(self, z: np.ndarray | float) -> np.ndarray:
        """Linear interpolation between nodes."""
        return np.interp(z, self.nodes, self.values)


class CheckResult(BaseModel):
    """Residual table and verdict of one verification check."""

    name: str = Field(description="Check identifier")
    rows: list[dict[str, float | str]] = Field(
        default_factory=list, description="One row per grid point (inputs and residual)"
    )
    tolerance: float = Field(description="Tolerance applied to the residuals")
    passed: bool = Field(description="True when every row is within tolerance")
    note: str = Field(default="", description="Free-form remark")


class RiskPremiumDecomposition(BaseModel):
    """Split of the risk premium E[X] - CE into pessimism and utility parts."""

    model_config = ConfigDict(frozen=True)

    expected_value: float = Field(description="E[X]")
    distorted_mean: float = Field(description="Distorted mean int q(1-z) dw(z)")
    certainty_equivalent: float = Field(description="u^{-1}(V(X))")
    pessimism_premium: float = Field(description="E[X] minus the distorted mean")
    utility_premium: float = Field(
        description="Distorted mean minus the certainty equivalent"
    )

    @property
    def total(self) -> float:
        """The full risk premium E[X] - CE."""
        return self.pessimism_premium + self.utility_premium


class VerificationReport(BaseModel):
    """All checks of a verification run."""

    scenario: str = Field(default="", description="Scenario label")
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every check passed."""
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        """Return the check called *name*."""
        for result in self.checks:
            if result.name == name:
                return result
        raise KeyError(name)


__all__ = [
    "MarketSegment",
    "MarketCurve",
    "KernelLaw",
    "DistortedMarket",
    "DiracAtom",
    "DiracMixture",
    "ForwardPair",
    "Classification",
    "GridFunction",
    "RiskPremiumDecomposition",
    "CheckResult",
    "VerificationReport",
]
