"""Market model: cumulated risk, the pricing-kernel law and the gamma-distorted market.

All pricing-kernel quantities depend on the interval [s, t] only through the
cumulated risk ``A = int_s^t |lambda_r|^2 dr``: the kernel is lognormal,
``rho = exp(-A/2 - sqrt(A) Z)``.  ``A = 0`` is handled as an explicit point
mass at 1 and never divides by ``sqrt(A)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike

from aumai_forwardrdu.errors import DomainError
from aumai_forwardrdu.models import DistortedMarket, KernelLaw, MarketCurve
from aumai_forwardrdu.numerics import norm_cdf, norm_ppf, quad

logger = logging.getLogger(__name__)

_TIME_TOL = 1e-12


class SmoothMarketCurve:
    """Market with user-supplied smooth coefficient curves.

    Args:
        lambda_fn: ``t -> lambda_t`` (vector of length N).
        sigma_fn: ``t -> sigma_t`` (N x N matrix).
        horizon: End of the modelled interval.
    """

    def __init__(
        self,
        lambda_fn: Callable[[float], ArrayLike],
        sigma_fn: Callable[[float], ArrayLike],
        horizon: float,
    ) -> None:
        if horizon <= 0.0:
            raise DomainError("horizon must be positive")
        self._lambda_fn = lambda_fn
        self._sigma_fn = sigma_fn
        self.horizon = horizon

    def lambda_at(self, t: float) -> np.ndarray:
        """Market price of risk at *t*."""
        return np.atleast_1d(np.asarray(self._lambda_fn(t), dtype=float))

    def sigma_at(self, t: float) -> np.ndarray:
        """Volatility matrix at *t*."""
        return np.atleast_2d(np.asarray(self._sigma_fn(t), dtype=float))

    def risk_rate(self, t: float) -> float:
        """Squared norm of lambda at *t*."""
        lam = self.lambda_at(t)
        return float(lam @ lam)


Curve = MarketCurve | DistortedMarket | SmoothMarketCurve


def _check_interval(curve: Curve, s: float, t: float) -> None:
    if s > t:
        raise DomainError(f"interval start {s} exceeds its end {t}")
    if s < -_TIME_TOL or t > curve.horizon + _TIME_TOL:
        raise DomainError(
            f"[{s}, {t}] is not covered by the market on [0, {curve.horizon}]"
        )


def accumulate_risk(curve: Curve, s: float, t: float) -> float:
    """Return ``A_{s,t} = int_s^t |lambda_r|^2 dr``.

    Exact for piecewise-constant curves; smooth curves are integrated
    adaptively to an absolute tolerance of 1e-10.

    Raises:
        DomainError: If ``s > t`` or [s, t] leaves the market's time range.
    """
    _check_interval(curve, s, t)
    if s == t:
        return 0.0
    if isinstance(curve, DistortedMarket):
        return curve.gamma * curve.gamma * accumulate_risk(curve.base, s, t)
    if isinstance(curve, SmoothMarketCurve):
        return quad(curve.risk_rate, s, t, epsabs=1e-10, epsrel=1e-12)
    total = 0.0
    for segment in curve.segments:
        overlap = min(t, segment.t_end) - max(s, segment.t_start)
        if overlap > 0.0:
            total += segment.risk_rate * overlap
    return total


def kernel_law(curve: Curve, s: float, t: float) -> KernelLaw:
    """Law of the pricing kernel ``rho_{s,t}``."""
    return KernelLaw(A=accumulate_risk(curve, s, t))


def _output(value: np.ndarray, like: ArrayLike) -> np.ndarray | float:
    """Return a float for scalar input and an array otherwise."""
    if np.ndim(like) == 0:
        return float(value)
    return value


def kernel_cdf(law: KernelLaw, x: ArrayLike) -> np.ndarray | float:
    """CDF of the pricing kernel, ``Phi((ln x + A/2) / sqrt(A))``.

    Raises:
        DomainError: If any ``x <= 0``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise DomainError("the kernel CDF is defined for x > 0 only")
    if law.degenerate:
        return _output(np.where(x_arr >= 1.0, 1.0, 0.0), x)
    value = norm_cdf((np.log(x_arr) + 0.5 * law.A) / law.scale)
    return _output(value, x)


def kernel_quantile(law: KernelLaw, p: ArrayLike) -> np.ndarray | float:
    """Quantile of the pricing kernel, ``exp(sqrt(A) Phi^{-1}(p) - A/2)``.

    Raises:
        DomainError: If any ``p`` lies outside (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise DomainError("kernel quantiles are defined for 0 < p < 1")
    if law.degenerate:
        return _output(np.ones_like(p_arr), p)
    return _output(np.exp(law.scale * norm_ppf(p_arr) - 0.5 * law.A), p)


def kernel_quantile_normal(law: KernelLaw, zeta: ArrayLike) -> np.ndarray:
    """Kernel quantile at level ``Phi(zeta)``, evaluated without forming Phi."""
    zeta_arr = np.asarray(zeta, dtype=float)
    return np.exp(law.scale * zeta_arr - 0.5 * law.A)


def kernel_power_mean(law: KernelLaw, k: float) -> float:
    """Return ``E[rho^k] = exp(A k (k - 1) / 2)``."""
    return math.exp(0.5 * law.A * k * (k - 1.0))


def kernel_partial_expectation(law: KernelLaw, p: ArrayLike) -> np.ndarray | float:
    """Return ``E[rho 1{rho <= F^{-1}(p)}] = Phi(Phi^{-1}(p) - sqrt(A))``.

    Raises:
        DomainError: If any ``p`` lies outside [0, 1].
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)):
        raise DomainError("partial expectations are defined for 0 <= p <= 1")
    if law.degenerate:
        return _output(p_arr.copy(), p)
    with np.errstate(divide="ignore"):
        value = norm_cdf(norm_ppf(p_arr) - law.scale)
    value = np.where(p_arr <= 0.0, 0.0, np.where(p_arr >= 1.0, 1.0, value))
    return _output(value, p)


def distort_market(curve: MarketCurve, gamma: float) -> DistortedMarket:
    """Return the gamma-distorted market, whose market price of risk is gamma * lambda.

    Raises:
        DomainError: If ``gamma < 0``.
    """
    if gamma < 0.0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    return DistortedMarket(base=curve, gamma=gamma)


def distorted_kernel(law: KernelLaw, gamma: float, rho: ArrayLike) -> np.ndarray:
    """Distorted-market kernel ``rho^gamma E[rho^(1-gamma)]`` of kernel values."""
    rho_arr = np.asarray(rho, dtype=float)
    return np.power(rho_arr, gamma) * kernel_power_mean(law, 1.0 - gamma)


def distorted_measure_density(
    law: KernelLaw, gamma: float, rho: ArrayLike
) -> np.ndarray:
    """Density of the gamma-distorted measure, ``rho^(1-gamma) / E[rho^(1-gamma)]``."""
    rho_arr = np.asarray(rho, dtype=float)
    return np.power(rho_arr, 1.0 - gamma) / kernel_power_mean(law, 1.0 - gamma)


def sample_kernel(law: KernelLaw, n: int, seed: int) -> np.ndarray:
    """Draw *n* seeded pricing-kernel values from *law*."""
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal(n)
    return np.exp(-0.5 * law.A - law.scale * z)


def stochastic_integral(
    curve: MarketCurve, times: ArrayLike, increments: np.ndarray
) -> np.ndarray:
    """Cumulative ``int_0^t lambda_r . dW_r`` on a grid.

    Args:
        curve: Market whose price of risk is constant on each grid step.
        times: Grid ``t_0 < ... < t_K``.
        increments: Brownian increments of shape ``(n_paths, K, N)``.

    Returns:
        Array of shape ``(n_paths, K + 1)`` starting at zero.
    """
    t_arr = np.asarray(times, dtype=float)
    lambdas = np.stack([curve.segment_at(float(t)).lambda_array() for t in t_arr[:-1]])
    steps = np.einsum("pkn,kn->pk", increments, lambdas)
    out = np.zeros((increments.shape[0], t_arr.size))
    out[:, 1:] = np.cumsum(steps, axis=1)
    return out


def refine_grid(curve: MarketCurve, times: ArrayLike) -> np.ndarray:
    """Merge the segment boundaries lying inside the span of *times* into the grid."""
    t_arr = np.asarray(times, dtype=float)
    if t_arr.size == 0:
        raise DomainError("a time grid needs at least one point")
    lo, hi = float(t_arr.min()), float(t_arr.max())
    if lo < -_TIME_TOL or hi > curve.horizon + _TIME_TOL:
        raise DomainError(f"time grid [{lo}, {hi}] leaves [0, {curve.horizon}]")
    inner = [b for b in curve.boundaries if lo < b < hi]
    merged = np.unique(np.concatenate([t_arr, np.asarray(inner, dtype=float)]))
    if merged.size > t_arr.size:
        added = merged.size - t_arr.size
        logger.debug("refine_grid: inserted %d segment boundaries", added)
    return merged


__all__ = [
    "SmoothMarketCurve",
    "accumulate_risk",
    "kernel_law",
    "kernel_cdf",
    "kernel_quantile",
    "kernel_quantile_normal",
    "kernel_power_mean",
    "kernel_partial_expectation",
    "distort_market",
    "distorted_kernel",
    "distorted_measure_density",
    "sample_kernel",
    "stochastic_integral",
    "refine_grid",
]
