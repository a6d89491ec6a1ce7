"""Rank-dependent utility of nonnegative prospects, in quantile form.

``V(X) = int_0^1 u(q_X(1 - z)) dw(z)``.  Every prospect supplies its own
quadrature rule: a triple of outcomes, distorted weights ``dw`` and plain
probability weights, so the value, the distorted mean and the expectation
of a prospect are all computed on the same nodes.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike

from aumai_forwardrdu.distortion import Distortion
from aumai_forwardrdu.errors import DomainError, QuadratureError
from aumai_forwardrdu.market import kernel_quantile, kernel_quantile_normal
from aumai_forwardrdu.models import KernelLaw, RiskPremiumDecomposition
from aumai_forwardrdu.numerics import norm_ppf, normal_rule, unit_interval_rule
from aumai_forwardrdu.utility import Utility

logger = logging.getLogger(__name__)

Rule = tuple[np.ndarray, np.ndarray, np.ndarray]


class Prospect(ABC):
    """A nonnegative random payoff described by its quantile function."""

    @abstractmethod
    def quantile(self, p: ArrayLike) -> np.ndarray:
        """Nondecreasing quantile function on (0, 1)."""

    def rule(self, d: Distortion) -> Rule:
        """Return ``(outcomes, distorted_weights, probabilities)`` for *d*.

        The default rule integrates in the distortion coordinate with the
        composite Gauss-Legendre rule of :func:`unit_interval_rule`.
        """
        z, weights = unit_interval_rule()
        outcomes = np.asarray(self.quantile(1.0 - z), dtype=float)
        return outcomes, weights * np.asarray(d.derivative(z)), weights


class ConstantProspect(Prospect):
    """The sure payoff *c*."""

    def __init__(self, c: float) -> None:
        if c < 0.0:
            raise DomainError("prospects are nonnegative")
        self.c = c

    def quantile(self, p: ArrayLike) -> np.ndarray:
        return np.full_like(np.asarray(p, dtype=float), self.c)

    def rule(self, d: Distortion) -> Rule:
        one = np.ones(1)
        return np.array([self.c]), one, one


class QuantileProspect(Prospect):
    """Prospect given by an arbitrary quantile function."""

    def __init__(self, quantile_fn: Callable[[np.ndarray], ArrayLike]) -> None:
        self._quantile_fn = quantile_fn

    @classmethod
    def from_table(cls, p: ArrayLike, q: ArrayLike) -> QuantileProspect:
        """Linear interpolation through a tabulated quantile function."""
        p_arr, q_arr = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        if np.any(np.diff(p_arr) <= 0.0) or np.any(np.diff(q_arr) < 0.0):
            raise DomainError("quantile tables must be increasing")
        if np.any(q_arr < 0.0):
            raise DomainError("prospects are nonnegative")
        return cls(lambda x: np.interp(x, p_arr, q_arr))

    def quantile(self, p: ArrayLike) -> np.ndarray:
        return np.asarray(self._quantile_fn(np.asarray(p, dtype=float)), dtype=float)


class KernelProspect(Prospect):
    """Prospect ``X = payoff(rho)`` with *payoff* nonincreasing in the kernel.

    The z-quantile of the kernel carries the outcome ranked ``1 - z``, so the
    rule is Gauss-Hermite in the normal coordinate of the kernel.
    """

    def __init__(
        self, law: KernelLaw, payoff: Callable[[np.ndarray], ArrayLike]
    ) -> None:
        self.law = law
        self.payoff = payoff

    def quantile(self, p: ArrayLike) -> np.ndarray:
        rho = kernel_quantile(self.law, 1.0 - np.asarray(p, dtype=float))
        return np.asarray(self.payoff(np.asarray(rho)), dtype=float)

    def rule(self, d: Distortion) -> Rule:
        if self.law.degenerate:
            one = np.ones(1)
            return np.asarray(self.payoff(np.ones(1)), dtype=float), one, one
        zeta, probabilities = normal_rule()
        rho = kernel_quantile_normal(self.law, zeta)
        outcomes = np.asarray(self.payoff(rho), dtype=float)
        return outcomes, probabilities * d.normal_density(zeta), probabilities


class LognormalProspect(Prospect):
    """``X = exp(mu + sigma Z)``."""

    def __init__(self, mu: float, sigma: float) -> None:
        if sigma < 0.0:
            raise DomainError("sigma must be nonnegative")
        self.mu = mu
        self.sigma = sigma

    def mean(self) -> float:
        """``exp(mu + sigma^2 / 2)``."""
        return math.exp(self.mu + 0.5 * self.sigma * self.sigma)

    def quantile(self, p: ArrayLike) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.exp(self.mu + self.sigma * norm_ppf(np.asarray(p, dtype=float)))

    def rule(self, d: Distortion) -> Rule:
        zeta, probabilities = normal_rule()
        outcomes = np.exp(self.mu - self.sigma * zeta)
        return outcomes, probabilities * d.normal_density(zeta), probabilities


def _utilities(u: Utility, outcomes: np.ndarray) -> np.ndarray:
    values = np.full_like(outcomes, u.value_at_zero())
    positive = outcomes > 0.0
    if np.any(positive):
        values[positive] = np.asarray(u.value(outcomes[positive]), dtype=float)
    return values


def _integrate(values: np.ndarray, weights: np.ndarray) -> float:
    """Sum positive and negative parts separately, applying the sentinel convention."""
    active = weights > 0.0
    values, weights = values[active], weights[active]
    with np.errstate(over="ignore", invalid="ignore"):
        positive = float(np.sum(weights * np.where(values > 0.0, values, 0.0)))
        negative = float(np.sum(weights * np.where(values < 0.0, values, 0.0)))
    if math.isnan(positive) or math.isnan(negative):
        raise QuadratureError("RDU integrand is not a number")
    if math.isinf(negative):
        return -math.inf
    if math.isinf(positive):
        logger.warning("rdu_value: positive part diverges, returning +inf")
        return math.inf
    return positive + negative


def rdu_value(u: Utility, w: Distortion, x: Prospect) -> float:
    """Rank-dependent utility ``int_0^1 u(q_X(1 - z)) dw(z)``.

    Returns ``-inf`` when the negative part diverges (also when both parts do)
    and ``+inf`` when only the positive part diverges.
    """
    outcomes, distorted, _ = x.rule(w)
    return _integrate(_utilities(u, outcomes), distorted)


def distorted_mean(w: Distortion, x: Prospect) -> float:
    """``int_0^1 q_X(1 - z) dw(z)``, the mean under the distorted law."""
    outcomes, distorted, _ = x.rule(w)
    return float(np.sum(distorted * outcomes))


def certainty_equivalent(u: Utility, w: Distortion, x: Prospect) -> float:
    """``u^{-1}(V(X))``.

    Raises:
        DomainError: If V(X) is infinite or outside the range of u.
    """
    value = rdu_value(u, w, x)
    if not math.isfinite(value):
        raise DomainError(f"V(X) = {value} has no certainty equivalent")
    return u.inverse(value)


def risk_premium_decomposition(
    u: Utility, w: Distortion, x: Prospect
) -> RiskPremiumDecomposition:
    """Split ``E[X] - CE`` into the pessimism premium and the utility premium."""
    outcomes, distorted, probabilities = x.rule(w)
    expected = float(np.sum(probabilities * outcomes))
    mean_w = float(np.sum(distorted * outcomes))
    value = _integrate(_utilities(u, outcomes), distorted)
    if not math.isfinite(value):
        raise DomainError(f"V(X) = {value} has no certainty equivalent")
    ce = u.inverse(value)
    return RiskPremiumDecomposition(
        expected_value=expected,
        distorted_mean=mean_w,
        certainty_equivalent=ce,
        pessimism_premium=expected - mean_w,
        utility_premium=mean_w - ce,
    )


def expected_utility_mc(
    u: Utility, x: Prospect, n: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of ``E[u(X)]`` with its standard error."""
    rng = np.random.Generator(np.random.Philox(seed))
    levels = rng.uniform(size=n)
    samples = _utilities(u, x.quantile(levels))
    mean = float(np.mean(samples))
    return mean, float(np.std(samples, ddof=1) / math.sqrt(n))


__all__ = [
    "Prospect",
    "ConstantProspect",
    "QuantileProspect",
    "KernelProspect",
    "LognormalProspect",
    "rdu_value",
    "distorted_mean",
    "certainty_equivalent",
    "risk_premium_decomposition",
    "expected_utility_mc",
]
