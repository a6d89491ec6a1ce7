"""Time-monotone forward utilities generated by finite Dirac mixtures.

A mixture ``mu = sum_i m_i delta_{y_i}`` induces

    h(z, t) = sum_i m_i exp(z y_i - y_i^2 t / 2),

which is positive, increasing and convex in ``z``.  With ``H = h^{-1}(x, t)``
the function ``v`` solving ``v_t = v_x^2 / (2 v_xx)`` has marginal
``v_x(x, t) = exp(-H + t/2)`` and the forward utility of a pair is
``u_t(x) = v(x, gamma^2 A_{0,t})``.
"""

from __future__ import annotations

import logging
import math
from typing import Final, Literal

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from aumai_forwardrdu.errors import DomainError, SaturationError
from aumai_forwardrdu.market import accumulate_risk
from aumai_forwardrdu.models import DiracMixture, ForwardPair
from aumai_forwardrdu.numerics import quad

logger = logging.getLogger(__name__)

_LOG_MAX: Final[float] = math.log(np.finfo(float).max)
_NEWTON_MAX_ITER: Final[int] = 100
_NEWTON_RTOL: Final[float] = 1e-13
_BISECTION_STEPS: Final[int] = 200

VMethod = Literal["quadrature", "closed_form"]


def _output(value: np.ndarray, like: ArrayLike) -> np.ndarray | float:
    if np.ndim(like) == 0:
        return float(value)
    return value


def _check_time(t: float) -> None:
    if t < 0.0:
        raise DomainError(f"time argument must be nonnegative, got {t}")


def _exponents(mix: DiracMixture, z: np.ndarray, t: float) -> np.ndarray:
    """Per-atom exponents ``z y_i - y_i^2 t / 2`` with the atom axis last."""
    y = mix.locations()
    return z[..., None] * y - 0.5 * y * y * t


def log_h(mix: DiracMixture, z: ArrayLike, t: float) -> np.ndarray | float:
    """Return ``log h(z, t)`` without overflow."""
    _check_time(t)
    z_arr = np.asarray(z, dtype=float)
    value = logsumexp(_exponents(mix, z_arr, t), b=mix.masses(), axis=-1)
    return _output(np.asarray(value), z)


def h_eval(mix: DiracMixture, z: ArrayLike, t: float) -> np.ndarray | float:
    """Evaluate ``h(z, t) = sum_i m_i exp(z y_i - y_i^2 t / 2)``.

    Raises:
        DomainError: If ``t < 0``.
        SaturationError: If h exceeds double precision.
    """
    z_arr = np.asarray(z, dtype=float)
    log_value = np.asarray(log_h(mix, z_arr, t))
    if np.any(log_value > _LOG_MAX):
        bad = float(np.ravel(z_arr)[int(np.argmax(np.ravel(log_value)))])
        raise SaturationError(bad, t)
    return _output(np.exp(log_value), z)


def log_h_x(mix: DiracMixture, z: ArrayLike, t: float) -> np.ndarray | float:
    """Return ``log h_x(z, t)`` without overflow."""
    _check_time(t)
    z_arr = np.asarray(z, dtype=float)
    weights = mix.masses() * mix.locations()
    value = logsumexp(_exponents(mix, z_arr, t), b=weights, axis=-1)
    return _output(np.asarray(value), z)


def h_x(mix: DiracMixture, z: ArrayLike, t: float) -> np.ndarray | float:
    """Spatial derivative ``sum_i m_i y_i exp(z y_i - y_i^2 t / 2)``."""
    _check_time(t)
    z_arr = np.asarray(z, dtype=float)
    weights = mix.masses() * mix.locations()
    value = logsumexp(_exponents(mix, z_arr, t), b=weights, axis=-1)
    if np.any(np.asarray(value) > _LOG_MAX):
        raise SaturationError(float(np.max(z_arr)), t)
    return _output(np.exp(np.asarray(value)), z)


def h_inverse(mix: DiracMixture, x: ArrayLike, t: float) -> np.ndarray | float:
    """Solve ``h(z, t) = x`` for z.

    Newton's method on ``log h`` (convex and increasing in z) started at the
    atom-wise upper bound converges monotonically; a bisection on the
    atom-wise bracket takes over for any entry that fails to converge.

    Raises:
        DomainError: If any ``x <= 0`` or ``t < 0``.
    """
    _check_time(t)
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise DomainError("h^{-1}(x, t) needs x > 0")
    y, m = mix.locations(), mix.masses()
    log_x = np.log(x_arr)[..., None]
    upper = np.min((log_x - np.log(m) + 0.5 * y * y * t) / y, axis=-1)
    lower = np.min((log_x - np.log(len(y) * m) + 0.5 * y * y * t) / y, axis=-1)
    target = np.log(x_arr)

    z = upper.copy()
    converged = np.zeros(z.shape, dtype=bool)
    for iteration in range(_NEWTON_MAX_ITER):
        exps = _exponents(mix, z, t)
        log_value = logsumexp(exps, b=m, axis=-1)
        slope = np.exp(logsumexp(exps, b=m * y, axis=-1) - log_value)
        step = (log_value - target) / slope
        z = np.where(converged, z, z - step)
        converged |= np.abs(step) <= _NEWTON_RTOL * (1.0 + np.abs(z))
        if np.all(converged):
            logger.debug("h_inverse: Newton converged in %d iterations", iteration + 1)
            break
    if not np.all(converged):
        logger.warning(
            "h_inverse: Newton did not converge for %d entries, using bisection",
            int(np.sum(~converged)),
        )
        lo, hi = lower.copy(), upper.copy()
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = logsumexp(_exponents(mix, mid, t), b=m, axis=-1) > target
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        z = np.where(converged, z, 0.5 * (lo + hi))
    return _output(z, x)


def v_closed_form(mix: DiracMixture, x: ArrayLike, t: float) -> np.ndarray | float:
    """Atom-exact ``v(x, t)``.

    With ``H = h^{-1}(x, t)``::

        v = sum_{y_i != 1} m_i y_i / (y_i - 1) exp((y_i - 1) H + (1 - y_i^2) t / 2)
            + sum_{y_i = 1} m_i (H - t)

    The additive constant is the natural antiderivative of each atom: it
    vanishes at x -> 0 for every atom with ``y_i > 1``.
    """
    x_arr = np.asarray(x, dtype=float)
    big_h = np.asarray(h_inverse(mix, x_arr, t))[..., None]
    total = np.zeros(big_h.shape[:-1])
    for atom in mix.atoms:
        if atom.y == 1.0:
            total = total + atom.m * (big_h[..., 0] - t)
        else:
            drift = 0.5 * (1.0 - atom.y * atom.y) * t
            exponent = (atom.y - 1.0) * big_h[..., 0] + drift
            total = total + atom.m * atom.y / (atom.y - 1.0) * np.exp(exponent)
    return _output(total, x)


def v_x(mix: DiracMixture, x: ArrayLike, t: float) -> np.ndarray | float:
    """Marginal ``v_x(x, t) = exp(-h^{-1}(x, t) + t/2)``."""
    big_h = np.asarray(h_inverse(mix, x, t))
    return _output(np.exp(-big_h + 0.5 * t), x)


def v_xx(mix: DiracMixture, x: ArrayLike, t: float) -> np.ndarray | float:
    """Second derivative ``-exp(-H + t/2) / h_x(H, t)``."""
    big_h = np.asarray(h_inverse(mix, x, t))
    return _output(-np.exp(-big_h + 0.5 * t) / np.asarray(h_x(mix, big_h, t)), x)


def _v_quadrature(mix: DiracMixture, x: float, t: float) -> float:
    base = float(v_closed_form(mix, x, 0.0))
    if t == 0.0:
        return base

    def integrand(s: float) -> float:
        big_h = float(h_inverse(mix, x, s))
        return math.exp(-big_h + 0.5 * s) * float(h_x(mix, big_h, s))

    return base - 0.5 * quad(integrand, 0.0, t, epsabs=1e-10, epsrel=1e-12)


def v_eval(
    mix: DiracMixture, x: ArrayLike, t: float, method: VMethod = "quadrature"
) -> np.ndarray | float:
    """Evaluate ``v(x, t)``.

    ``method="quadrature"`` integrates the time derivative
    ``v_t(x, s) = -exp(-H_s + s/2) h_x(H_s, s) / 2`` (``H_s = h^{-1}(x, s)``)
    from the atom-exact ``v(x, 0)``; ``method="closed_form"`` uses
    :func:`v_closed_form`.

    Raises:
        DomainError: If any ``x <= 0`` or ``t < 0``.
        QuadratureError: If the time integral fails to converge.
    """
    _check_time(t)
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0.0)):
        raise DomainError("v(x, t) needs x > 0")
    if method == "closed_form":
        return v_closed_form(mix, x, t)
    values = np.array([_v_quadrature(mix, float(xi), t) for xi in np.ravel(x_arr)])
    return _output(values.reshape(x_arr.shape), x)


def forward_time(pair: ForwardPair, t: float) -> float:
    """Time argument of v for the pair at t: ``gamma^2 A_{0,t}``."""
    if pair.degenerate:
        return 0.0
    return pair.gamma * pair.gamma * accumulate_risk(pair.market, 0.0, t)


def forward_u(
    pair: ForwardPair, t: float, x: ArrayLike, method: VMethod = "closed_form"
) -> np.ndarray | float:
    """Forward utility ``u_t(x) = v(x, gamma^2 A_{0,t})``."""
    return v_eval(pair.mixture, x, forward_time(pair, t), method=method)


def forward_u_prime(pair: ForwardPair, t: float, x: ArrayLike) -> np.ndarray | float:
    """Marginal forward utility ``u'_t(x)``.

    Raises:
        DomainError: If any ``x <= 0``.
    """
    return v_x(pair.mixture, x, forward_time(pair, t))


def forward_u_prime_inverse(
    pair: ForwardPair, t: float, y: ArrayLike
) -> np.ndarray | float:
    """Inverse marginal ``(u'_t)^{-1}(y) = h(tau/2 - ln y, tau)``.

    Raises:
        DomainError: If any ``y <= 0``.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(~(y_arr > 0.0)):
        raise DomainError("(u')^{-1}(y) needs y > 0")
    tau = forward_time(pair, t)
    return _output(np.asarray(h_eval(pair.mixture, 0.5 * tau - np.log(y_arr), tau)), y)


def forward_u_second(pair: ForwardPair, t: float, x: ArrayLike) -> np.ndarray | float:
    """Second derivative ``u''_t(x)``."""
    return v_xx(pair.mixture, x, forward_time(pair, t))


def risk_tolerance(pair: ForwardPair, t: float, x: ArrayLike) -> np.ndarray | float:
    """Local risk tolerance ``-u'_t(x) / u''_t(x) = h_x(h^{-1}(x, tau), tau)``."""
    tau = forward_time(pair, t)
    big_h = h_inverse(pair.mixture, x, tau)
    return h_x(pair.mixture, big_h, tau)


__all__ = [
    "VMethod",
    "log_h",
    "h_eval",
    "log_h_x",
    "h_x",
    "h_inverse",
    "v_closed_form",
    "v_x",
    "v_xx",
    "v_eval",
    "forward_time",
    "forward_u",
    "forward_u_prime",
    "forward_u_prime_inverse",
    "forward_u_second",
    "risk_tolerance",
]
