"""Utility handles consumed by the RDU functional and the backward solver.

A handle bundles a strictly increasing, strictly concave utility on
``(0, inf)`` with its first two derivatives and the inverses needed by the
solver (``(u')^{-1}``) and by certainty equivalents (``u^{-1}``).
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from aumai_forwardrdu.errors import DomainError
from aumai_forwardrdu.forward_utility import (
    forward_u,
    forward_u_prime,
    forward_u_prime_inverse,
    forward_u_second,
)
from aumai_forwardrdu.models import ForwardPair
from aumai_forwardrdu.numerics import quad

logger = logging.getLogger(__name__)


def _positive(x: ArrayLike, what: str) -> np.ndarray:
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise DomainError(f"{what} needs strictly positive arguments")
    return x_arr


def _output(value: np.ndarray, like: ArrayLike) -> np.ndarray | float:
    if np.ndim(like) == 0:
        return float(value)
    return value


class Utility(ABC):
    """A utility function of class U: increasing, concave, Inada at 0 and infinity."""

    @abstractmethod
    def value(self, x: ArrayLike) -> np.ndarray | float:
        """u(x)."""

    @abstractmethod
    def prime(self, x: ArrayLike) -> np.ndarray | float:
        """u'(x)."""

    @abstractmethod
    def prime_inverse(self, y: ArrayLike) -> np.ndarray | float:
        """(u')^{-1}(y)."""

    @abstractmethod
    def second(self, x: ArrayLike) -> np.ndarray | float:
        """u''(x)."""

    def value_at_zero(self) -> float:
        """Limit of u at 0; minus infinity unless overridden."""
        return -math.inf

    def inverse(self, v: float) -> float:
        """Solve ``u(x) = v`` by bracketed root finding in log x.

        Raises:
            DomainError: If *v* lies outside the range of u.
        """
        if not math.isfinite(v):
            raise DomainError(f"u^{{-1}} is undefined at {v}")
        lo, hi = -1.0, 1.0
        for _ in range(10):
            if float(self.value(math.exp(lo))) < v:
                break
            lo *= 2.0
        else:
            raise DomainError(f"{v} lies below the range of u")
        for _ in range(10):
            if float(self.value(math.exp(hi))) > v:
                break
            hi *= 2.0
        else:
            raise DomainError(f"{v} lies above the range of u")
        root = optimize.brentq(
            lambda s: float(self.value(math.exp(s))) - v, lo, hi, xtol=1e-14, rtol=1e-14
        )
        return math.exp(root)

    def risk_aversion(self, x: ArrayLike) -> np.ndarray | float:
        """Absolute risk aversion ``-u''(x) / u'(x)``."""
        return _output(
            -np.asarray(self.second(x), dtype=float)
            / np.asarray(self.prime(x), dtype=float),
            x,
        )


class CRRAUtility(Utility):
    """Power utility ``x^(1-alpha) / (1-alpha)``; ``alpha = 1`` is the logarithm."""

    def __init__(self, alpha: float) -> None:
        if alpha <= 0.0:
            raise DomainError("alpha must be positive")
        self.alpha = alpha

    def __repr__(self) -> str:
        return f"CRRAUtility(alpha={self.alpha!r})"

    def value(self, x: ArrayLike) -> np.ndarray | float:
        x_arr = _positive(x, "u")
        if self.alpha == 1.0:
            return _output(np.log(x_arr), x)
        return _output(np.power(x_arr, 1.0 - self.alpha) / (1.0 - self.alpha), x)

    def prime(self, x: ArrayLike) -> np.ndarray | float:
        return _output(np.power(_positive(x, "u'"), -self.alpha), x)

    def prime_inverse(self, y: ArrayLike) -> np.ndarray | float:
        return _output(np.power(_positive(y, "(u')^{-1}"), -1.0 / self.alpha), y)

    def second(self, x: ArrayLike) -> np.ndarray | float:
        x_arr = _positive(x, "u''")
        return _output(-self.alpha * np.power(x_arr, -self.alpha - 1.0), x)

    def value_at_zero(self) -> float:
        return 0.0 if self.alpha < 1.0 else -math.inf

    def inverse(self, v: float) -> float:
        if self.alpha == 1.0:
            return math.exp(v)
        scaled = (1.0 - self.alpha) * v
        if not scaled > 0.0:
            raise DomainError(f"{v} lies outside the range of {self!r}")
        return scaled ** (1.0 / (1.0 - self.alpha))


class LogUtility(CRRAUtility):
    """``u(x) = log x``."""

    def __init__(self) -> None:
        super().__init__(alpha=1.0)

    def __repr__(self) -> str:
        return "LogUtility()"


class ForwardUtility(Utility):
    """The forward utility ``u_t`` of a pair, frozen at time *t*."""

    def __init__(self, pair: ForwardPair, t: float) -> None:
        self.pair = pair
        self.t = t

    def __repr__(self) -> str:
        return f"ForwardUtility(gamma={self.pair.gamma!r}, t={self.t!r})"

    def value(self, x: ArrayLike) -> np.ndarray | float:
        return forward_u(self.pair, self.t, x)

    def prime(self, x: ArrayLike) -> np.ndarray | float:
        return forward_u_prime(self.pair, self.t, x)

    def prime_inverse(self, y: ArrayLike) -> np.ndarray | float:
        return forward_u_prime_inverse(self.pair, self.t, y)

    def second(self, x: ArrayLike) -> np.ndarray | float:
        return forward_u_second(self.pair, self.t, x)


class MarginalPowerUtility(Utility):
    """Utility whose marginal is ``C * base'(z)^power``, normalised by ``u(1) = 0``.

    Args:
        base: Utility whose marginal is raised to *power*.
        power: Positive exponent; ``power = 1`` rescales *base*.
        scale: Positive constant C.
    """

    def __init__(self, base: Utility, power: float, scale: float = 1.0) -> None:
        if power <= 0.0 or scale <= 0.0:
            raise DomainError("power and scale must be positive")
        self.base = base
        self.power = power
        self.scale = scale

    def __repr__(self) -> str:
        return (
            f"MarginalPowerUtility(base={self.base!r}, "
            f"power={self.power!r}, scale={self.scale!r})"
        )

    def _value_at(self, x: float) -> float:
        if x == 1.0:
            return 0.0
        return quad(lambda z: float(self.prime(z)), 1.0, x, epsabs=1e-13, epsrel=1e-12)

    def value(self, x: ArrayLike) -> np.ndarray | float:
        x_arr = _positive(x, "u")
        values = np.array([self._value_at(float(xi)) for xi in np.ravel(x_arr)])
        return _output(values.reshape(x_arr.shape), x)

    def prime(self, x: ArrayLike) -> np.ndarray | float:
        base_prime = np.asarray(self.base.prime(x), dtype=float)
        return _output(self.scale * np.power(base_prime, self.power), x)

    def prime_inverse(self, y: ArrayLike) -> np.ndarray | float:
        y_arr = _positive(y, "(u')^{-1}")
        return _output(
            np.asarray(
                self.base.prime_inverse(np.power(y_arr / self.scale, 1.0 / self.power))
            ),
            y,
        )

    def second(self, x: ArrayLike) -> np.ndarray | float:
        base_prime = np.asarray(self.base.prime(x), dtype=float)
        base_second = np.asarray(self.base.second(x), dtype=float)
        return _output(
            self.scale
            * self.power
            * np.power(base_prime, self.power - 1.0)
            * base_second,
            x,
        )


__all__ = [
    "Utility",
    "CRRAUtility",
    "LogUtility",
    "ForwardUtility",
    "MarginalPowerUtility",
]
