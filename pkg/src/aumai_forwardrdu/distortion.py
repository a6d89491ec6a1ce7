"""Probability distortions, the forward Wang family and the bifurcation test.

Every distortion maps [0, 1] onto [0, 1], is strictly increasing and fixes
both end points.  Besides ``__call__`` each family provides its derivative,
its inverse and ``normal_density(zeta) = w'(Phi(zeta))``, the density of the
distorted law in the normal coordinate used by all kernel quadratures.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from functools import cached_property
from typing import Any, Final

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import PchipInterpolator

from aumai_forwardrdu.errors import (
    DomainError,
    InvariantViolationError,
    QuadratureError,
)
from aumai_forwardrdu.market import (
    kernel_partial_expectation,
    kernel_power_mean,
    kernel_quantile,
)
from aumai_forwardrdu.models import Classification, KernelLaw
from aumai_forwardrdu.numerics import norm_cdf, norm_ppf, quad, unit_interval_rule

logger = logging.getLogger(__name__)

MONOTONE_SLACK: Final[float] = 1e-10
CROSS_REPRESENTATION_TOL: Final[float] = 1e-8
FIT_TOL: Final[float] = 1e-6

# Smallest and largest probabilities at which derivatives are evaluated.
_P_FLOOR: Final[float] = 1e-300
_P_CEIL: Final[float] = 1.0 - 2.0**-53

_BISECTION_STEPS: Final[int] = 64


def _as_probability(p: ArrayLike) -> np.ndarray:
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)) or np.any(np.isnan(p_arr)):
        raise DomainError("probabilities must lie in [0, 1]")
    return p_arr


def _output(value: np.ndarray, like: ArrayLike) -> np.ndarray | float:
    if np.ndim(like) == 0:
        return float(value)
    return value


class Distortion(BaseModel, ABC):
    """Base class of probability distortion functions."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    @abstractmethod
    def _value(self, p: np.ndarray) -> np.ndarray:
        """Evaluate w on validated probabilities."""

    @abstractmethod
    def _derivative(self, p: np.ndarray) -> np.ndarray:
        """Evaluate w' on validated probabilities."""

    def __call__(self, p: ArrayLike) -> np.ndarray | float:
        """Evaluate w(p), exact at 0 and 1."""
        p_arr = _as_probability(p)
        value = np.clip(self._value(p_arr), 0.0, 1.0)
        value = np.where(p_arr == 0.0, 0.0, np.where(p_arr == 1.0, 1.0, value))
        return _output(value, p)

    def derivative(self, p: ArrayLike) -> np.ndarray | float:
        """Evaluate w'(p)."""
        p_arr = _as_probability(p)
        return _output(self._derivative(p_arr), p)

    def inverse(self, s: ArrayLike) -> np.ndarray | float:
        """Evaluate w^{-1}(s) by vectorised bisection on [0, 1]."""
        s_arr = _as_probability(s)
        lo = np.zeros_like(s_arr)
        hi = np.ones_like(s_arr)
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self(mid)) < s_arr
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        result = 0.5 * (lo + hi)
        result = np.where(s_arr == 0.0, 0.0, np.where(s_arr == 1.0, 1.0, result))
        return _output(result, s)

    def normal_density(self, zeta: ArrayLike) -> np.ndarray:
        """Return ``w'(Phi(zeta))``, the distorted density relative to phi."""
        p = np.clip(norm_cdf(zeta), _P_FLOOR, _P_CEIL)
        return np.asarray(self._derivative(p), dtype=float)


class IdentityDistortion(Distortion):
    """No distortion, w(p) = p."""

    family: str = "identity"

    def _value(self, p: np.ndarray) -> np.ndarray:
        return p.copy()

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        return np.ones_like(p)

    def inverse(self, s: ArrayLike) -> np.ndarray | float:
        s_arr = _as_probability(s)
        return _output(s_arr.copy(), s)

    def normal_density(self, zeta: ArrayLike) -> np.ndarray:
        return np.ones_like(np.asarray(zeta, dtype=float))


class WangDistortion(Distortion):
    """Wang transform ``w(p) = Phi(Phi^{-1}(p) + shift)`` with a static shift."""

    family: str = "wang"
    shift: float = Field(default=0.0, description="Displacement in normal space")

    @property
    def displacement(self) -> float:
        """The shift actually applied in normal space."""
        return self.shift

    def _value(self, p: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return norm_cdf(norm_ppf(p) + self.displacement)

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        a = self.displacement
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-a * norm_ppf(p) - 0.5 * a * a)

    def inverse(self, s: ArrayLike) -> np.ndarray | float:
        s_arr = _as_probability(s)
        with np.errstate(divide="ignore"):
            value = norm_cdf(norm_ppf(s_arr) - self.displacement)
        value = np.where(s_arr == 0.0, 0.0, np.where(s_arr == 1.0, 1.0, value))
        return _output(value, s)

    def normal_density(self, zeta: ArrayLike) -> np.ndarray:
        a = self.displacement
        return np.exp(-a * np.asarray(zeta, dtype=float) - 0.5 * a * a)


class WangForwardDistortion(WangDistortion):
    """Forward distortion ``Phi(Phi^{-1}(p) + (gamma - 1) sqrt(A))`` on an interval.

    ``gamma = 1`` or ``A = 0`` is the identity.
    """

    family: str = "wang_forward"
    gamma: float = Field(ge=0.0, description="Distortion parameter")
    A: float = Field(ge=0.0, description="Cumulated risk of the interval")

    @property
    def displacement(self) -> float:
        return (self.gamma - 1.0) * math.sqrt(self.A)


class DegenerateDistortion(Distortion):
    """``(1 - slack) E[rho 1{rho <= F^{-1}(p)}] + slack p``, always degenerate."""

    family: str = "degenerate"
    A: float = Field(ge=0.0)
    slack: float = Field(default=0.0, ge=0.0, le=1.0)

    def _value(self, p: np.ndarray) -> np.ndarray:
        law = KernelLaw(A=self.A)
        base = np.asarray(kernel_partial_expectation(law, p), dtype=float)
        return (1.0 - self.slack) * base + self.slack * p

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        root = math.sqrt(self.A)
        with np.errstate(divide="ignore", over="ignore"):
            base = np.exp(root * norm_ppf(p) - 0.5 * self.A)
        return (1.0 - self.slack) * base + self.slack


class PrelecDistortion(Distortion):
    """Prelec distortion ``exp(-beta (-ln p)^alpha)``."""

    family: str = "prelec"
    alpha: float = Field(gt=0.0)
    beta: float = Field(default=1.0, gt=0.0)

    def _value(self, p: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.exp(-self.beta * np.power(-np.log(p), self.alpha))

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_term = -np.log(p)
            value = (
                np.exp(-self.beta * np.power(log_term, self.alpha))
                * self.beta
                * self.alpha
                * np.power(log_term, self.alpha - 1.0)
                / p
            )
        return np.nan_to_num(value, nan=0.0, posinf=np.inf)

    def inverse(self, s: ArrayLike) -> np.ndarray | float:
        s_arr = _as_probability(s)
        with np.errstate(divide="ignore"):
            value = np.exp(-np.power(-np.log(s_arr) / self.beta, 1.0 / self.alpha))
        value = np.where(s_arr == 0.0, 0.0, np.where(s_arr == 1.0, 1.0, value))
        return _output(value, s)


class TverskyKahnemanDistortion(Distortion):
    """Tversky-Kahneman weighting ``p^d / (p^d + (1-p)^d)^(1/d)``."""

    family: str = "tversky_kahneman"
    delta: float = Field(gt=0.28, le=1.0)

    def _value(self, p: np.ndarray) -> np.ndarray:
        d = self.delta
        q = 1.0 - p
        return np.power(p, d) / np.power(np.power(p, d) + np.power(q, d), 1.0 / d)

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        d = self.delta
        q = 1.0 - p
        with np.errstate(divide="ignore", invalid="ignore"):
            denominator = np.power(p, d) + np.power(q, d)
            tilt = np.power(p, d - 1.0) - np.power(q, d - 1.0)
            log_slope = d / p - tilt / denominator
            value = self._value(p) * log_slope
        return np.nan_to_num(value, nan=np.inf)


class TabulatedDistortion(Distortion):
    """Distortion interpolated through a table with monotone cubic (PCHIP) splines."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: str = "table"
    p: tuple[float, ...]
    w: tuple[float, ...]

    @model_validator(mode="after")
    def _check_table(self) -> TabulatedDistortion:
        """Require strictly increasing coordinates anchored at (0, 0) and (1, 1)."""
        p_arr, w_arr = np.asarray(self.p), np.asarray(self.w)
        if p_arr.size < 3 or p_arr.size != w_arr.size:
            raise ValueError("a distortion table needs at least 3 matching points")
        if np.any(np.diff(p_arr) <= 0.0) or np.any(np.diff(w_arr) <= 0.0):
            raise ValueError("distortion tables must be strictly increasing in p and w")
        if (p_arr[0], w_arr[0], p_arr[-1], w_arr[-1]) != (0.0, 0.0, 1.0, 1.0):
            raise ValueError("distortion tables must start at (0, 0) and end at (1, 1)")
        return self

    @cached_property
    def spline(self) -> PchipInterpolator:
        """The interpolant, built once per table."""
        return PchipInterpolator(np.asarray(self.p), np.asarray(self.w))

    @cached_property
    def slope(self) -> PchipInterpolator:
        return self.spline.derivative()

    def _value(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.spline(p), dtype=float)

    def _derivative(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.slope(p), dtype=float)


def degenerate_distortion(law: KernelLaw, slack: float = 0.0) -> DegenerateDistortion:
    """Build ``Phi(Phi^{-1}(p) - sqrt(A))``, optionally mixed with the identity."""
    return DegenerateDistortion(A=law.A, slack=slack)


def wang_eval(d: WangForwardDistortion, p: ArrayLike) -> np.ndarray | float:
    """Evaluate the forward Wang distortion in closed form."""
    return d(p)


def wang_eval_integral(gamma: float, law: KernelLaw, p: float) -> float:
    """Evaluate ``int_0^p (F^{-1}(q))^(1-gamma) dq / E[rho^(1-gamma)]`` by quadrature.

    The substitution ``q = Phi(z)`` turns the integrand into a smooth
    Gaussian-type function of z; the integral runs over ``(-inf, Phi^{-1}(p)]``.

    Raises:
        DomainError: If ``p`` lies outside [0, 1], ``gamma <= 0`` or ``A = 0``.
        QuadratureError: If the integral does not converge.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if gamma <= 0.0:
        raise DomainError("gamma must be positive")
    if law.degenerate:
        raise DomainError("the integral representation needs A > 0")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    k = 1.0 - gamma
    root = law.scale
    log_norm = math.log(kernel_power_mean(law, k))

    def integrand(z: float) -> float:
        exponent = k * (root * z - 0.5 * law.A) - log_norm - 0.5 * z * z
        return math.exp(exponent) / math.sqrt(2.0 * math.pi)

    upper = float(norm_ppf(p))
    centre = k * root
    lower = min(upper, centre) - 40.0
    points = [centre] if lower < centre < upper else None
    try:
        return quad(integrand, lower, upper, epsabs=1e-14, epsrel=1e-12, points=points)
    except QuadratureError:
        logger.warning(
            "wang_eval_integral: quadrature failed at gamma=%g, A=%g, p=%g",
            gamma,
            law.A,
            p,
        )
        raise


def _interior_grid(grid_size: int) -> np.ndarray:
    return np.arange(1, grid_size + 1, dtype=float) / (grid_size + 1)


def fit_wang_gamma(d: Distortion, law: KernelLaw) -> float:
    """Fit gamma from the displacement at p = 1/2: ``1 + Phi^{-1}(w(1/2)) / sqrt(A)``.

    Raises:
        DomainError: If ``A = 0`` (the displacement is not identifiable).
    """
    if law.degenerate:
        raise DomainError("gamma cannot be identified when A = 0")
    return 1.0 + float(norm_ppf(float(d(0.5)))) / law.scale


def check_degenerate(
    d: Distortion,
    law: KernelLaw,
    grid_size: int = 10_000,
    fit_tol: float = FIT_TOL,
    slack: float = MONOTONE_SLACK,
) -> Classification:
    """Classify *d* against the bifurcation of forward distortions.

    The forward-Wang fit is tested first (gamma fitted at p = 1/2, then
    validated pointwise to *fit_tol*); otherwise the distortion is
    degenerate when it dominates the kernel partial expectation on the
    grid up to *slack* and neither when it does not.

    Raises:
        DomainError: If ``grid_size < 3``.
    """
    if grid_size < 3:
        raise DomainError("grid_size must be at least 3")
    grid = _interior_grid(grid_size)
    w_grid = np.asarray(d(grid))
    if law.degenerate:
        if np.max(np.abs(w_grid - grid)) <= fit_tol:
            return Classification.nondegenerate
    else:
        gamma_hat = fit_wang_gamma(d, law)
        if gamma_hat > fit_tol:
            candidate = WangForwardDistortion(gamma=gamma_hat, A=law.A)
            gap = float(np.max(np.abs(w_grid - np.asarray(candidate(grid)))))
            logger.debug(
                "check_degenerate: gamma_hat=%.10g, fit gap %.3e", gamma_hat, gap
            )
            if gap <= fit_tol:
                return Classification.nondegenerate
    floor = np.asarray(kernel_partial_expectation(law, grid))
    if np.all(w_grid - floor >= -slack):
        return Classification.degenerate
    return Classification.neither


def jin_zhou_monotone(
    d: Distortion,
    law: KernelLaw,
    grid_size: int = 10_000,
    slack: float = MONOTONE_SLACK,
) -> bool:
    """Test whether ``p -> F^{-1}(p) / w'(p)`` is nondecreasing on the grid.

    Raises:
        InvariantViolationError: If w' is not positive at some grid point.
    """
    grid = _interior_grid(grid_size)
    slope = np.asarray(d.derivative(grid))
    if np.any(~(slope > 0.0)):
        bad = float(grid[np.argmax(~(slope > 0.0))])
        raise InvariantViolationError(f"w' is not positive at p={bad:.6g}")
    ratio = np.asarray(kernel_quantile(law, grid)) / slope
    return bool(np.all(ratio[:-1] <= ratio[1:] + slack))


def pessimism_premium(
    d: Distortion, prospect_quantile: Callable[[np.ndarray], ArrayLike]
) -> float:
    """Return ``E[X] - int_0^1 q(1 - z) dw(z)`` for a nonnegative prospect.

    Raises:
        QuadratureError: If the quantile is not integrable on the rule.
    """
    nodes, weights = unit_interval_rule()
    mean = float(np.sum(weights * np.asarray(prospect_quantile(nodes), dtype=float)))
    distorted = float(
        np.sum(
            weights
            * np.asarray(prospect_quantile(1.0 - nodes), dtype=float)
            * np.asarray(d.derivative(nodes))
        )
    )
    premium = mean - distorted
    if not math.isfinite(premium):
        raise QuadratureError("prospect quantile is not integrable")
    return premium


_FAMILIES: Final[dict[str, type[Distortion]]] = {
    "identity": IdentityDistortion,
    "wang": WangDistortion,
    "wang_forward": WangForwardDistortion,
    "degenerate": DegenerateDistortion,
    "prelec": PrelecDistortion,
    "tversky_kahneman": TverskyKahnemanDistortion,
    "table": TabulatedDistortion,
}


def distortion_from_spec(spec: dict[str, Any], A: float) -> Distortion:
    """Build a distortion from its JSON description.

    ``wang_forward`` and ``degenerate`` take the cumulated risk from *A*.

    Raises:
        DomainError: For unknown families.
        pydantic.ValidationError: For missing or unknown parameters.
    """
    params = dict(spec)
    family = params.pop("family", None)
    if family not in _FAMILIES:
        raise DomainError(f"unknown distortion family {family!r}")
    if family in ("wang_forward", "degenerate"):
        params.setdefault("A", A)
    return _FAMILIES[family](**params)


__all__ = [
    "MONOTONE_SLACK",
    "CROSS_REPRESENTATION_TOL",
    "FIT_TOL",
    "Distortion",
    "IdentityDistortion",
    "WangDistortion",
    "WangForwardDistortion",
    "DegenerateDistortion",
    "PrelecDistortion",
    "TverskyKahnemanDistortion",
    "TabulatedDistortion",
    "degenerate_distortion",
    "wang_eval",
    "wang_eval_integral",
    "fit_wang_gamma",
    "check_degenerate",
    "jin_zhou_monotone",
    "pessimism_premium",
    "distortion_from_spec",
]
