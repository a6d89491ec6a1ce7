"""Shared numerical building blocks: the standard normal law and quadrature rules."""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable
from functools import lru_cache
from typing import Final

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri, roots_hermitenorm, roots_legendre

from aumai_forwardrdu.errors import QuadratureError

logger = logging.getLogger(__name__)

_INV_SQRT_2PI: Final[float] = 1.0 / math.sqrt(2.0 * math.pi)

# Gauss-Hermite nodes whose probability weight falls below this are dropped;
# they only ever contribute 0 * inf.
_NEGLIGIBLE_WEIGHT: Final[float] = 1e-280

# Geometric panel breakpoints used to refine Gauss-Legendre rules near 0 and 1.
_TAIL_BREAKS: Final[tuple[float, ...]] = (
    1e-12,
    1e-10,
    1e-8,
    1e-6,
    1e-4,
    1e-3,
    1e-2,
    5e-2,
)


def norm_cdf(x: np.ndarray | float) -> np.ndarray:
    """Standard normal CDF Phi."""
    return np.asarray(ndtr(x), dtype=float)


def norm_ppf(p: np.ndarray | float) -> np.ndarray:
    """Standard normal quantile Phi^{-1}; returns -inf at 0 and +inf at 1."""
    return np.asarray(ndtri(p), dtype=float)


def norm_pdf(x: np.ndarray | float) -> np.ndarray:
    """Standard normal density phi."""
    x_arr = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x_arr * x_arr)


def quad(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-12,
    points: list[float] | None = None,
    limit: int = 200,
) -> float:
    """Adaptive quadrature that raises instead of warning on non-convergence.

    Raises:
        QuadratureError: If scipy reports an integration problem.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            kwargs: dict[str, object] = {
                "epsabs": epsabs,
                "epsrel": epsrel,
                "limit": limit,
            }
            if points:
                kwargs["points"] = points
            value, error = integrate.quad(
                func, lower, upper, **kwargs  # type: ignore[arg-type]
            )
        except integrate.IntegrationWarning as exc:
            message = f"quadrature on [{lower}, {upper}] failed: {exc}"
            raise QuadratureError(message) from exc
    if not math.isfinite(value):
        raise QuadratureError(f"quadrature on [{lower}, {upper}] is not finite", error)
    logger.debug(
        "quad [%g, %g] = %.15g (error estimate %.2e)", lower, upper, value, error
    )
    return float(value)


@lru_cache(maxsize=16)
def normal_rule(n_nodes: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite rule for expectations under the standard normal law.

    Returns:
        ``(nodes, probabilities)`` with probabilities summing to one, so that
        ``E[f(Z)] ~ sum(probabilities * f(nodes))``.
    """
    nodes, weights = roots_hermitenorm(n_nodes)
    probabilities = weights * _INV_SQRT_2PI
    keep = probabilities > _NEGLIGIBLE_WEIGHT
    nodes, probabilities = nodes[keep], probabilities[keep]
    nodes.setflags(write=False)
    probabilities.setflags(write=False)
    return nodes, probabilities


@lru_cache(maxsize=16)
def unit_interval_rule(
    n_nodes: int = 256, tail_nodes: int = 32
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on (0, 1), refined geometrically at the ends.

    The central panel ``[5e-2, 1 - 5e-2]`` carries *n_nodes* nodes; each tail
    panel carries *tail_nodes*.  All nodes are interior, so integrands may be
    singular at 0 and 1.
    """
    left = (0.0,) + _TAIL_BREAKS
    breaks = list(left) + [1.0 - b for b in reversed(_TAIL_BREAKS)] + [1.0]
    all_nodes: list[np.ndarray] = []
    all_weights: list[np.ndarray] = []
    for a, b in zip(breaks[:-1], breaks[1:], strict=True):
        central = (a, b) == (_TAIL_BREAKS[-1], 1.0 - _TAIL_BREAKS[-1])
        count = n_nodes if central else tail_nodes
        x, w = roots_legendre(count)
        all_nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        all_weights.append(0.5 * (b - a) * w)
    nodes = np.concatenate(all_nodes)
    weights = np.concatenate(all_weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


__all__ = [
    "norm_cdf",
    "norm_ppf",
    "norm_pdf",
    "quad",
    "normal_rule",
    "unit_interval_rule",
]
