"""Backward RDU portfolio choice on a complete market by the quantile method.

The optimal terminal wealth is ``X* = (u')^{-1}(lambda N'(1 - w(F(rho))))``
where ``N(z) = -E[rho 1{rho <= F^{-1}(w^{-1}(1 - z))}]`` is replaced by its
concave envelope when it is not concave.  When ``p -> F^{-1}(p) / w'(p)`` is
nondecreasing, N is concave and the map reduces to
``(u')^{-1}(lambda rho / w'(F(rho)))``.
"""

from __future__ import annotations

import logging
import math
from typing import Final, Literal

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from aumai_forwardrdu.distortion import (
    FIT_TOL,
    MONOTONE_SLACK,
    Distortion,
    check_degenerate,
    jin_zhou_monotone,
)
from aumai_forwardrdu.errors import DomainError, NoSolutionError, SaturationError
from aumai_forwardrdu.market import (
    kernel_partial_expectation,
    kernel_power_mean,
    kernel_quantile,
    kernel_quantile_normal,
)
from aumai_forwardrdu.models import Classification, GridFunction, KernelLaw
from aumai_forwardrdu.numerics import norm_cdf, normal_rule
from aumai_forwardrdu.utility import Utility

logger = logging.getLogger(__name__)

ENVELOPE_TOL: Final[float] = 1e-12
BUDGET_TOL: Final[float] = 1e-8
MIN_NODES: Final[int] = 64
DEFAULT_NODES: Final[int] = 4097
MAX_DOUBLINGS: Final[int] = 60

Branch = Literal["auto", "jin_zhou", "envelope"]


def build_N(w: Distortion, law: KernelLaw, nodes: int = DEFAULT_NODES) -> GridFunction:
    """Tabulate ``N(z) = -E[rho 1{rho <= F^{-1}(w^{-1}(1 - z))}]`` on a uniform grid.

    Raises:
        DomainError: If fewer than 64 nodes are requested.
    """
    if nodes < MIN_NODES:
        raise DomainError(f"build_N needs at least {MIN_NODES} nodes, got {nodes}")
    z = np.linspace(0.0, 1.0, nodes)
    levels = np.asarray(w.inverse(1.0 - z))
    values = -np.asarray(kernel_partial_expectation(law, levels))
    values[0], values[-1] = -1.0, 0.0
    return GridFunction(nodes=z, values=values)


def concave_envelope(f: GridFunction) -> GridFunction:
    """Least concave majorant on the same nodes, by an upper-hull sweep.

    Collinear points are dropped, so ``vertices`` lists the extreme points of
    the hull only.
    """
    x, y = f.nodes, f.values
    hull: list[int] = []
    for k in range(x.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            cross = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
            if cross < 0.0:
                break
            hull.pop()
        hull.append(k)
    values = np.interp(x, x[hull], y[hull])
    values[hull] = y[hull]
    return GridFunction(nodes=x.copy(), values=values, vertices=tuple(hull))


def exact_N_slope(w: Distortion, law: KernelLaw, z: ArrayLike) -> np.ndarray:
    """``N'(z) = F^{-1}(p) / w'(p)`` with ``p = w^{-1}(1 - z)``, for 0 < z < 1."""
    p = np.asarray(w.inverse(1.0 - np.asarray(z, dtype=float)))
    return np.asarray(kernel_quantile(law, p)) / np.asarray(w.derivative(p))


class ConcavifiedN:
    """Slope lookup for the concave envelope of N.

    On cells where the envelope touches N the exact derivative of N is used;
    elsewhere the slope of the hull segment.  At hull vertices the slope of
    the segment on the left is taken.
    """

    def __init__(
        self,
        w: Distortion,
        law: KernelLaw,
        nodes: int = DEFAULT_NODES,
        envelope_tol: float = ENVELOPE_TOL,
    ) -> None:
        self.w = w
        self.law = law
        self.n_function = build_N(w, law, nodes)
        self.envelope = concave_envelope(self.n_function)
        gap = self.envelope.values - self.n_function.values
        touching = gap <= envelope_tol
        self.contact_cells = touching[:-1] & touching[1:]
        vertices = np.asarray(self.envelope.vertices)
        xv, yv = self.envelope.nodes[vertices], self.envelope.values[vertices]
        self._vertex_nodes = xv
        self._segment_slopes = np.diff(yv) / np.diff(xv)
        logger.debug(
            "ConcavifiedN: %d hull vertices, %d of %d cells in contact",
            vertices.size,
            int(np.sum(self.contact_cells)),
            self.contact_cells.size,
        )

    @property
    def is_concave(self) -> bool:
        """True when the envelope touches N on every cell."""
        return bool(np.all(self.contact_cells))

    def chord_slope(self, z: np.ndarray) -> np.ndarray:
        """Hull-segment slope at *z* with the left-slope convention at vertices."""
        index = np.searchsorted(self._vertex_nodes, z, side="left") - 1
        index = np.clip(index, 0, self._segment_slopes.size - 1)
        return self._segment_slopes[index]

    def in_contact(self, z: np.ndarray) -> np.ndarray:
        """Whether *z* lies in a cell where the envelope equals N."""
        index = np.searchsorted(self.n_function.nodes, z, side="left") - 1
        index = np.clip(index, 0, self.contact_cells.size - 1)
        return self.contact_cells[index]


class TerminalWealthMap:
    """The map ``rho -> X*(rho)`` for a fixed multiplier."""

    def __init__(
        self,
        u: Utility,
        w: Distortion,
        law: KernelLaw,
        multiplier: float,
        branch: Literal["jin_zhou", "envelope"],
        concavified: ConcavifiedN | None = None,
    ) -> None:
        if multiplier <= 0.0:
            raise DomainError("the multiplier must be positive")
        self.u = u
        self.w = w
        self.law = law
        self.multiplier = multiplier
        self.branch = branch
        self.concavified = concavified
        if branch == "envelope" and concavified is None:
            self.concavified = ConcavifiedN(w, law)

    def slope_normal(self, zeta: ArrayLike) -> np.ndarray:
        """``N'`` (or its envelope) at the kernel value ``exp(sqrt(A) zeta - A/2)``."""
        zeta_arr = np.asarray(zeta, dtype=float)
        rho = kernel_quantile_normal(self.law, zeta_arr)
        with np.errstate(divide="ignore", over="ignore"):
            exact = rho / self.w.normal_density(zeta_arr)
        if self.branch == "jin_zhou":
            return exact
        if self.concavified is None:
            raise DomainError("the envelope branch needs a concavified N")
        z = 1.0 - np.asarray(self.w(norm_cdf(zeta_arr)))
        contact = self.concavified.in_contact(z)
        return np.where(contact, exact, self.concavified.chord_slope(z))

    def at_normal(self, zeta: ArrayLike) -> np.ndarray:
        """Terminal wealth at the kernel quantile of normal coordinate *zeta*."""
        if self.law.degenerate:
            shape = np.shape(zeta)
            return np.full(shape, float(self.u.prime_inverse(self.multiplier)))
        with np.errstate(over="ignore", divide="ignore"):
            marginal = self.multiplier * self.slope_normal(zeta)
            marginal = np.clip(marginal, np.finfo(float).tiny, np.finfo(float).max)
            return np.asarray(self.u.prime_inverse(marginal), dtype=float)

    def __call__(self, rho: ArrayLike) -> np.ndarray:
        rho_arr = np.asarray(rho, dtype=float)
        if np.any(rho_arr <= 0.0):
            raise DomainError("kernel values must be positive")
        if self.law.degenerate:
            return self.at_normal(np.zeros_like(rho_arr))
        zeta = (np.log(rho_arr) + 0.5 * self.law.A) / self.law.scale
        return self.at_normal(zeta)


class _ConstantWealth(TerminalWealthMap):
    """``X* = x`` regardless of the kernel (degenerate case)."""

    def __init__(
        self, u: Utility, w: Distortion, law: KernelLaw, wealth: float
    ) -> None:
        super().__init__(u, w, law, float(u.prime(wealth)), "jin_zhou")
        self.wealth = wealth

    def at_normal(self, zeta: ArrayLike) -> np.ndarray:
        return np.full(np.shape(zeta), self.wealth)

    def __call__(self, rho: ArrayLike) -> np.ndarray:
        return np.full(np.shape(rho), self.wealth)


class BackwardSolution(BaseModel):
    """Optimal multiplier and terminal wealth map of a backward RDU problem."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    multiplier: float = Field(gt=0.0, description="Lagrange multiplier lambda*")
    initial_wealth: float = Field(gt=0.0)
    achieved_budget: float = Field(description="E[rho X*] at the multiplier")
    degenerate: bool = Field(default=False, description="X* is the constant x")
    branch: str = Field(description="jin_zhou, envelope or degenerate")
    terminal_wealth: TerminalWealthMap

    def wealth_table(self, levels: ArrayLike | None = None) -> pd.DataFrame:
        """Tabulate X* on kernel quantiles; default levels are 1/1000 .. 999/1000."""
        if levels is None:
            p = np.arange(1, 1000) / 1000.0
        else:
            p = np.asarray(levels, dtype=float)
        law = self.terminal_wealth.law
        rho = np.asarray(kernel_quantile(law, p))
        return pd.DataFrame({"p": p, "rho": rho, "X_star": self.terminal_wealth(rho)})

    def summary(self) -> dict[str, object]:
        """JSON-ready summary including the wealth table."""
        table = self.wealth_table()
        return {
            "multiplier": float(self.multiplier),
            "initial_wealth": float(self.initial_wealth),
            "achieved_budget": float(self.achieved_budget),
            "degenerate": bool(self.degenerate),
            "branch": self.branch,
            "table": table.to_dict(orient="list"),
        }


def select_branch(
    w: Distortion, law: KernelLaw, slack: float = MONOTONE_SLACK
) -> Literal["jin_zhou", "envelope"]:
    """Choose the closed-form branch when the Jin-Zhou condition holds."""
    return "jin_zhou" if jin_zhou_monotone(w, law, slack=slack) else "envelope"


def optimal_terminal_wealth(
    u: Utility,
    w: Distortion,
    law: KernelLaw,
    multiplier: float,
    branch: Branch = "auto",
) -> TerminalWealthMap:
    """Optimal terminal wealth map for a fixed multiplier.

    Raises:
        DomainError: If ``multiplier <= 0``.
    """
    if multiplier <= 0.0:
        raise DomainError("the multiplier must be positive")
    chosen: Literal["jin_zhou", "envelope"]
    if law.degenerate:
        chosen = "jin_zhou"
    elif branch == "auto":
        chosen = select_branch(w, law)
    else:
        chosen = branch
    return TerminalWealthMap(u, w, law, multiplier, chosen)


def budget(wealth_map: TerminalWealthMap) -> float:
    """``E[rho X*]`` by Gauss-Hermite quadrature in the normal coordinate."""
    law = wealth_map.law
    if law.degenerate:
        return float(wealth_map.at_normal(np.zeros(1))[0])
    zeta, probabilities = normal_rule()
    rho = kernel_quantile_normal(law, zeta)
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sum(probabilities * rho * wealth_map.at_normal(zeta)))


def solve_multiplier(
    u: Utility,
    w: Distortion,
    law: KernelLaw,
    initial_wealth: float,
    branch: Branch = "auto",
    budget_tol: float = BUDGET_TOL,
    envelope_tol: float = ENVELOPE_TOL,
    fit_tol: float = FIT_TOL,
    slack: float = MONOTONE_SLACK,
) -> BackwardSolution:
    """Find ``lambda*`` with ``E[rho X*(rho; lambda*)] = x``.

    The bracket is grown by doubling from ``u'(x)`` in both directions, then
    refined by Brent's method in ``log lambda``.  Degenerate distortions
    short-circuit to ``X* = x`` and ``lambda* = u'(x)``.  *fit_tol* and
    *slack* go to the bifurcation and Jin-Zhou tests, *envelope_tol* marks
    the cells where the envelope touches N.

    Raises:
        DomainError: If ``initial_wealth <= 0``.
        NoSolutionError: If the budget cannot be bracketed.
    """
    if initial_wealth <= 0.0:
        raise DomainError("initial wealth must be positive")
    x = initial_wealth
    seed = float(u.prime(x))
    if not law.degenerate:
        label = check_degenerate(w, law, fit_tol=fit_tol, slack=slack)
    else:
        label = Classification.degenerate
    if label is Classification.degenerate:
        logger.info("solve_multiplier: degenerate problem, X* = %g", x)
        return BackwardSolution(
            multiplier=seed,
            initial_wealth=x,
            achieved_budget=x,
            degenerate=True,
            branch="degenerate",
            terminal_wealth=_ConstantWealth(u, w, law, x),
        )

    chosen: Literal["jin_zhou", "envelope"]
    chosen = select_branch(w, law, slack) if branch == "auto" else branch
    concavified = None
    if chosen == "envelope":
        concavified = ConcavifiedN(w, law, envelope_tol=envelope_tol)

    def excess(log_multiplier: float) -> float:
        wealth_map = TerminalWealthMap(
            u, w, law, math.exp(log_multiplier), chosen, concavified
        )
        try:
            value = budget(wealth_map)
        except SaturationError:
            return math.inf
        return (value if math.isfinite(value) else math.inf) - x

    lo = hi = math.log(seed)
    for step in range(MAX_DOUBLINGS):
        if excess(lo) >= 0.0:
            break
        lo -= math.log(2.0)
        logger.debug(
            "solve_multiplier: lowering bracket to lambda=%g (step %d)",
            math.exp(lo),
            step,
        )
    else:
        raise NoSolutionError(
            "budget stays below x for every multiplier tried", code="bracket"
        )
    for step in range(MAX_DOUBLINGS):
        if excess(hi) <= 0.0:
            break
        hi += math.log(2.0)
        logger.debug(
            "solve_multiplier: raising bracket to lambda=%g (step %d)",
            math.exp(hi),
            step,
        )
    else:
        raise NoSolutionError(
            "budget stays above x for every multiplier tried", code="bracket"
        )

    if lo == hi:
        root = lo
    else:
        finite = math.isfinite(excess(lo)) and math.isfinite(excess(hi))
        finder = optimize.brentq if finite else optimize.bisect
        root = finder(excess, lo, hi, xtol=1e-15, rtol=1e-12, maxiter=200)
    multiplier = math.exp(root)
    wealth_map = TerminalWealthMap(u, w, law, multiplier, chosen, concavified)
    achieved = budget(wealth_map)
    if abs(achieved - x) > budget_tol * x:
        raise NoSolutionError(
            f"budget matched only to {abs(achieved - x) / x:.3e} relative",
            code="tolerance",
        )
    logger.info(
        "solve_multiplier: lambda*=%.12g (%s branch), budget %.12g",
        multiplier,
        chosen,
        achieved,
    )
    return BackwardSolution(
        multiplier=multiplier,
        initial_wealth=x,
        achieved_budget=achieved,
        branch=chosen,
        terminal_wealth=wealth_map,
    )


def merton_multiplier(alpha: float, law: KernelLaw, initial_wealth: float) -> float:
    """Closed-form ``lambda* = x^(-alpha) E[rho^((alpha - 1) / alpha)]^alpha``."""
    mean = kernel_power_mean(law, (alpha - 1.0) / alpha)
    return initial_wealth ** (-alpha) * mean**alpha


__all__ = [
    "ENVELOPE_TOL",
    "BUDGET_TOL",
    "build_N",
    "concave_envelope",
    "exact_N_slope",
    "ConcavifiedN",
    "TerminalWealthMap",
    "BackwardSolution",
    "select_branch",
    "optimal_terminal_wealth",
    "budget",
    "solve_multiplier",
    "merton_multiplier",
]
