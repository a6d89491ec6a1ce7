"""Verification lab for forward rank-dependent pairs.

Each ``verify_*`` function returns a residual (or a list of margins) for one
point of a grid; :func:`run_checks` sweeps the grids of a scenario and
assembles a :class:`VerificationReport`.  The supermartingale inequality is
only tested against a witness family of constant-proportion strategies
``pi = kappa sigma^{-1} lambda X``, whose terminal laws are lognormal.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from aumai_forwardrdu.backward_solver import BackwardSolution, solve_multiplier
from aumai_forwardrdu.config import ScenarioConfig, ToleranceSpec
from aumai_forwardrdu.distortion import (
    Distortion,
    IdentityDistortion,
    WangForwardDistortion,
    check_degenerate,
    degenerate_distortion,
    fit_wang_gamma,
)
from aumai_forwardrdu.errors import (
    DomainError,
    ForwardRDUError,
    UnsupportedPolicyError,
)
from aumai_forwardrdu.forward_utility import (
    forward_u,
    forward_u_prime,
    forward_u_prime_inverse,
    v_closed_form,
    v_eval,
)
from aumai_forwardrdu.market import (
    accumulate_risk,
    kernel_law,
    kernel_power_mean,
    kernel_quantile,
    kernel_quantile_normal,
)
from aumai_forwardrdu.models import (
    CheckResult,
    Classification,
    DiracMixture,
    ForwardPair,
    KernelLaw,
    MarketCurve,
    VerificationReport,
)
from aumai_forwardrdu.numerics import normal_rule
from aumai_forwardrdu.rdu_value import ConstantProspect, KernelProspect, rdu_value
from aumai_forwardrdu.simulate import budget_summary, simulate_optimal
from aumai_forwardrdu.utility import ForwardUtility, MarginalPowerUtility, Utility

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

Row = dict[str, float | str]
Payoff = Callable[[np.ndarray], np.ndarray]

REDUCTION_TOL = 1e-12


def _check_interval(s: float, t: float, x: float) -> None:
    if not 0.0 <= s < t:
        raise DomainError(f"need 0 <= s < t, got s={s}, t={t}")
    if x <= 0.0:
        raise DomainError("wealth must be positive")


def _forward_distortion(pair: ForwardPair, law: KernelLaw) -> WangForwardDistortion:
    return WangForwardDistortion(gamma=pair.gamma, A=law.A)


def _solve(
    u: Utility, w: Distortion, law: KernelLaw, x: float, tol: ToleranceSpec
) -> BackwardSolution:
    return solve_multiplier(
        u,
        w,
        law,
        x,
        budget_tol=tol.budget,
        envelope_tol=tol.envelope,
        fit_tol=tol.fit,
        slack=tol.monotone_slack,
    )


# ----------------------------------------------------------------------
# Definition checks
# ----------------------------------------------------------------------


def conditional_value(
    pair: ForwardPair,
    s: float,
    t: float,
    payoff: Payoff,
    w: Distortion | None = None,
) -> float:
    """RDU value at t of ``payoff(rho_{s,t})``, forward distortion by default."""
    law = kernel_law(pair.market, s, t)
    distortion = w if w is not None else _forward_distortion(pair, law)
    prospect = KernelProspect(law, payoff)
    return rdu_value(ForwardUtility(pair, t), distortion, prospect)


def optimal_payoff(pair: ForwardPair, s: float, t: float, x: float) -> Payoff:
    """``rho_{s,t} -> (u'_t)^{-1}(u'_s(x) E[rho^(1-gamma)] rho^gamma)``."""
    law = kernel_law(pair.market, s, t)
    if pair.degenerate or law.degenerate:
        return lambda rho: np.full(np.shape(rho), x)
    gamma = pair.gamma
    marginal = float(forward_u_prime(pair, s, x)) * kernel_power_mean(law, 1.0 - gamma)

    def payoff(rho: np.ndarray) -> np.ndarray:
        y = marginal * np.power(rho, gamma)
        return np.asarray(forward_u_prime_inverse(pair, t, y))

    return payoff


def verify_value_preservation(pair: ForwardPair, s: float, t: float, x: float) -> float:
    """Conditional RDU value of ``X*_t`` given ``X*_s = x``, minus ``u_s(x)``.

    Raises:
        DomainError: If ``s >= t`` or ``x <= 0``.
    """
    _check_interval(s, t, x)
    law = kernel_law(pair.market, s, t)
    if pair.degenerate or law.degenerate:
        value = rdu_value(
            ForwardUtility(pair, t), _forward_distortion(pair, law), ConstantProspect(x)
        )
    else:
        value = conditional_value(pair, s, t, optimal_payoff(pair, s, t, x))
    residual = value - float(forward_u(pair, s, x))
    logger.debug("value preservation s=%g t=%g x=%g: %.3e", s, t, x, residual)
    return residual


def witness_payoff(law: KernelLaw, x: float, kappa: float) -> Payoff:
    """Terminal wealth ``x rho^-kappa e^{kappa(1-kappa)A/2}`` of a constant proportion.

    Raises:
        UnsupportedPolicyError: For ``kappa < 0`` (wealth increasing in the kernel).
    """
    if kappa < 0.0:
        raise UnsupportedPolicyError(f"kappa={kappa} gives no comonotone terminal law")
    scale = x * math.exp(0.5 * kappa * (1.0 - kappa) * law.A)
    return lambda rho: scale * np.power(rho, -kappa)


def verify_suboptimality(
    pair: ForwardPair, s: float, t: float, x: float, policies: Sequence[float]
) -> list[float]:
    """Margins ``u_s(x) - V_t(X^kappa_t)`` for constant-proportion witnesses.

    Raises:
        UnsupportedPolicyError: For policies outside the witness family.
    """
    _check_interval(s, t, x)
    law = kernel_law(pair.market, s, t)
    base = float(forward_u(pair, s, x))
    margins = []
    for kappa in policies:
        if isinstance(kappa, bool) or not isinstance(kappa, int | float):
            raise UnsupportedPolicyError(f"{kappa!r} is not a constant proportion")
        value = conditional_value(pair, s, t, witness_payoff(law, x, float(kappa)))
        margins.append(base - value)
    return margins


def optimal_proportion(pair: ForwardPair) -> float | None:
    """``kappa* = gamma y`` for single-atom mixtures (CRRA ``gamma/alpha``)."""
    if len(pair.mixture.atoms) != 1:
        return None
    return pair.gamma * pair.mixture.atoms[0].y


def margin_passes(
    kappa: float, margin: float, optimal: float | None, tolerance: float
) -> bool:
    """Verdict for one witness margin.

    The optimal proportion must leave ``|margin| < tolerance``; every other
    witness must fall short of the optimum by more than *tolerance*.
    """
    if optimal is not None and abs(kappa - optimal) < 1e-12:
        return abs(margin) < tolerance
    return margin > tolerance


# ----------------------------------------------------------------------
# Dynamic utilities
# ----------------------------------------------------------------------


class DynamicProcess:
    """A dynamic utility process ``(u_{t,T}, w_{t,T})`` on [0, T].

    ``u'_{t,T}(z) = C (u'_{0,T}(z))^{gamma_t / gamma_0}`` with C fixed by
    ``u'_{t,T}(1) = u'_{0,T}(1)``, and ``w_{t,T}`` the forward Wang
    distortion with ``gamma_t`` on [t, T] unless overridden.
    """

    def __init__(
        self,
        u0: Utility,
        gamma0: float,
        horizon: float,
        gamma_path: Callable[[float], float],
        market: MarketCurve,
        distortion_override: Callable[[float], Distortion] | None = None,
    ) -> None:
        self.u0 = u0
        self.gamma0 = gamma0
        self.horizon = horizon
        self.gamma_path = gamma_path
        self.market = market
        self.distortion_override = distortion_override

    def gamma(self, t: float) -> float:
        return self.gamma0 if t == 0.0 else float(self.gamma_path(t))

    def law(self, t: float) -> KernelLaw:
        """Law of ``rho_{t,T}``."""
        return kernel_law(self.market, t, self.horizon)

    def utility(self, t: float) -> Utility:
        """``u_{t,T}``.

        Raises:
            DomainError: If ``gamma_t <= 0``.
        """
        gamma_t = self.gamma(t)
        if gamma_t <= 0.0:
            raise DomainError(f"gamma_t must be positive, got {gamma_t} at t={t}")
        power = gamma_t / self.gamma0
        scale = float(self.u0.prime(1.0)) ** (1.0 - power)
        return MarginalPowerUtility(self.u0, power, scale)

    def distortion(self, t: float) -> Distortion:
        if self.distortion_override is not None:
            return self.distortion_override(t)
        return WangForwardDistortion(gamma=self.gamma(t), A=self.law(t).A)

    def risk_aversion_gap(self, t: float, x: np.ndarray) -> float:
        """Largest violation of ``A_{t,T}(x) = (gamma_t / gamma_0) A_{0,T}(x)``."""
        lhs = np.asarray(self.utility(t).risk_aversion(x))
        rhs = self.gamma(t) / self.gamma0 * np.asarray(self.u0.risk_aversion(x))
        return float(np.max(np.abs(lhs - rhs)))


def time_invariant_gamma_path(
    gamma0: float, market: MarketCurve, horizon: float
) -> Callable[[float], float]:
    """``gamma_t = 1 + (gamma_0 - 1) sqrt(A_{0,T} / A_{t,T})``, w_{t,T} held fixed."""
    total = accumulate_risk(market, 0.0, horizon)

    def path(t: float) -> float:
        remaining = accumulate_risk(market, t, horizon)
        if remaining <= 0.0:
            raise DomainError("no risk left on [t, T]")
        return 1.0 + (gamma0 - 1.0) * math.sqrt(total / remaining)

    return path


def construct_dynamic(
    u0: Utility,
    gamma0: float,
    horizon: float,
    gamma_path: Callable[[float], float],
    market: MarketCurve,
    distortion_override: Callable[[float], Distortion] | None = None,
) -> DynamicProcess:
    """Build the dynamic utility process of *u0* along *gamma_path*.

    Raises:
        DomainError: If ``gamma0 <= 0`` or ``gamma_path(0)`` differs from it.
    """
    if gamma0 <= 0.0:
        raise DomainError("gamma0 must be positive")
    start = float(gamma_path(0.0))
    if abs(start - gamma0) > 1e-12:
        raise DomainError(f"gamma_path(0) = {start} differs from gamma0 = {gamma0}")
    return DynamicProcess(u0, gamma0, horizon, gamma_path, market, distortion_override)


def verify_dynamic_consistency(
    proc: DynamicProcess,
    t: float,
    x: float,
    conditioning_level: float = 0.5,
    levels: np.ndarray | None = None,
    tolerances: ToleranceSpec | None = None,
) -> float:
    """Relative sup-gap between the re-solved time-t optimum and the time-0 one.

    The time-0 map is conditioned on ``rho_{0,t}`` at its *conditioning_level*
    quantile; the budget at t is the value of that conditioned payoff.  Both
    problems are solved with the solver tolerances of *tolerances*.

    Raises:
        DomainError: Unless ``0 < t < T``.
    """
    if not 0.0 < t < proc.horizon:
        raise DomainError("need 0 < t < T")
    tol = tolerances if tolerances is not None else ToleranceSpec()
    initial = _solve(proc.u0, proc.distortion(0.0), proc.law(0.0), x, tol)
    first = kernel_law(proc.market, 0.0, t)
    rho_0t = float(kernel_quantile(first, conditioning_level))
    law_t = proc.law(t)

    def conditioned(rho: np.ndarray) -> np.ndarray:
        return np.asarray(initial.terminal_wealth(rho_0t * rho))

    zeta, probabilities = normal_rule()
    nodes = kernel_quantile_normal(law_t, zeta)
    wealth_t = float(np.sum(probabilities * nodes * conditioned(nodes)))
    resolved = _solve(proc.utility(t), proc.distortion(t), law_t, wealth_t, tol)
    grid = np.arange(1, 100) / 100.0 if levels is None else levels
    rho = np.asarray(kernel_quantile(law_t, grid))
    reference = conditioned(rho)
    gap = float(np.max(np.abs(resolved.terminal_wealth(rho) - reference) / reference))
    logger.debug("dynamic consistency t=%g: budget %.10g, gap %.3e", t, wealth_t, gap)
    return gap


# ----------------------------------------------------------------------
# Structural checks
# ----------------------------------------------------------------------


def verify_bifurcation(
    pair: ForwardPair,
    s: float,
    t: float,
    x: float = 1.0,
    tolerances: ToleranceSpec | None = None,
) -> list[Row]:
    """Classify the forward distortion and check the degenerate branch gives ``x``.

    Rows carry a residual of 0 when the classification matches ``gamma`` and
    when the degenerate problem returns the constant *x*.  ``A_{s,t} = 0``
    yields no rows.
    """
    tol = tolerances if tolerances is not None else ToleranceSpec()
    law = kernel_law(pair.market, s, t)
    if law.degenerate:
        return []
    forward = _forward_distortion(pair, law)
    label = check_degenerate(
        forward, law, fit_tol=tol.fit, slack=tol.monotone_slack
    )
    if pair.degenerate:
        expected = Classification.degenerate
    else:
        expected = Classification.nondegenerate
    floor = degenerate_distortion(law)
    solution = _solve(ForwardUtility(pair, t), floor, law, x, tol)
    flat = np.asarray(solution.terminal_wealth(np.array([0.5, 1.0, 2.0])))
    flat_gap = float(np.max(np.abs(flat - x))) + (0.0 if solution.degenerate else 1.0)
    return [
        {
            "s": s,
            "t": t,
            "case": "forward",
            "classification": label.value,
            "gamma_hat": fit_wang_gamma(forward, law),
            "residual": 0.0 if label is expected else 1.0,
        },
        {
            "s": s,
            "t": t,
            "case": "degenerate",
            "classification": check_degenerate(
                floor, law, fit_tol=tol.fit, slack=tol.monotone_slack
            ).value,
            "gamma_hat": fit_wang_gamma(floor, law),
            "residual": flat_gap,
        },
    ]


def verify_reduction_identity(
    pair: ForwardPair, s: float, t: float, p_count: int = 999
) -> float:
    """``max |w_{s,t}(p) - p|``; vanishes when the pair is undistorted."""
    law = kernel_law(pair.market, s, t)
    p = np.arange(1, p_count + 1) / (p_count + 1)
    forward = np.asarray(_forward_distortion(pair, law)(p))
    identity = np.asarray(IdentityDistortion()(p))
    return float(np.max(np.abs(forward - identity)))


def verify_pde_residual(
    mix: DiracMixture, x: float, t: float, rel_step: float = 1e-4
) -> float:
    """``|v_t - v_x^2 / (2 v_xx)|`` by central differences at (x, t), t > 0."""
    if t <= 0.0 or x <= 0.0:
        raise DomainError("the PDE residual needs x > 0 and t > 0")
    hx, ht = rel_step * x, rel_step * t

    def v(a: float, b: float) -> float:
        return float(v_closed_form(mix, a, b))

    centre = v(x, t)
    v_t = (v(x, t + ht) - v(x, t - ht)) / (2.0 * ht)
    v_x = (v(x + hx, t) - v(x - hx, t)) / (2.0 * hx)
    v_xx = (v(x + hx, t) - 2.0 * centre + v(x - hx, t)) / (hx * hx)
    return abs(v_t - 0.5 * v_x * v_x / v_xx)


def verify_representations(mix: DiracMixture, x: float, t: float) -> float:
    """Gap between the quadrature and the closed-form evaluation of v."""
    return abs(float(v_eval(mix, x, t)) - float(v_closed_form(mix, x, t)))


def verify_martingale(
    pair: ForwardPair,
    x0: float,
    times: Sequence[float],
    n_paths: int,
    seed: int,
    threads: int = 1,
    block_size: int = 4096,
) -> list[Row]:
    """``E[rho_t X*_t]`` against ``x0`` in units of standard error, per time."""
    paths = simulate_optimal(
        pair, x0, times, n_paths, seed, threads=threads, block_size=block_size
    )
    rows: list[Row] = []
    for record in budget_summary(paths).to_dict(orient="records"):
        mean, se = float(record["mean"]), float(record["se"])
        gap = abs(mean - x0)
        if se > 0.0:
            residual = gap / se
        else:
            residual = 0.0 if gap < 1e-12 else math.inf
        time = float(record["t"])
        rows.append({"t": time, "mean": mean, "se": se, "residual": residual})
    return rows


# ----------------------------------------------------------------------
# Scenario runner
# ----------------------------------------------------------------------


def _parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _intervals(scenario: ScenarioConfig) -> list[tuple[float, float]]:
    g = scenario.grids
    return [(s, t) for s in g.s for t in g.t if s < t]


def _triples(scenario: ScenarioConfig) -> list[tuple[float, float, float]]:
    return [(s, t, x) for s, t in _intervals(scenario) for x in scenario.grids.x]


def _value_preservation_check(
    scenario: ScenarioConfig, pair: ForwardPair, tol: ToleranceSpec, threads: int
) -> CheckResult:
    triples = _triples(scenario)
    residuals = _parallel_map(
        lambda item: verify_value_preservation(pair, *item), triples, threads
    )
    rows: list[Row] = [
        {"s": s, "t": t, "x": x, "residual": r}
        for (s, t, x), r in zip(triples, residuals, strict=True)
    ]
    return CheckResult(
        name="value_preservation",
        rows=rows,
        tolerance=tol.value_preservation,
        passed=all(abs(r) < tol.value_preservation for r in residuals),
    )


def _suboptimality_check(
    scenario: ScenarioConfig, pair: ForwardPair, tol: ToleranceSpec, threads: int
) -> CheckResult:
    optimal = optimal_proportion(pair)
    if scenario.checks.kappas is not None:
        kappas = list(scenario.checks.kappas)
    elif optimal is not None:
        kappas = [0.0, 0.5 * optimal, optimal, 2.0 * optimal]
    else:
        kappas = [0.0, 0.5 * pair.gamma, pair.gamma]
    triples = _triples(scenario)
    margins = _parallel_map(
        lambda item: verify_suboptimality(pair, *item, policies=kappas),
        triples,
        threads,
    )
    rows: list[Row] = []
    passed = True
    for (s, t, x), values in zip(triples, margins, strict=True):
        for kappa, margin in zip(kappas, values, strict=True):
            ok = margin_passes(kappa, margin, optimal, tol.suboptimality)
            passed = passed and ok
            rows.append({"s": s, "t": t, "x": x, "kappa": kappa, "margin": margin})
    return CheckResult(
        name="suboptimality",
        rows=rows,
        tolerance=tol.suboptimality,
        passed=passed,
        note="witnesses: constant proportions kappa sigma^-1 lambda X",
    )


def _dynamic_check(scenario: ScenarioConfig, tol: ToleranceSpec) -> CheckResult:
    pair = scenario.pair()
    market, horizon, gamma0 = pair.market, scenario.horizon, scenario.gamma
    t = scenario.checks.dynamic_t
    if t is None:
        t = 0.5 * horizon
    x = scenario.checks.dynamic_x
    u0 = ForwardUtility(pair, horizon)
    invariant = time_invariant_gamma_path(gamma0, market, horizon)
    positive = {
        "constant_gamma": construct_dynamic(
            u0, gamma0, horizon, lambda _: gamma0, market
        )
    }
    note = ""
    if invariant(t) > 0.0:
        positive["time_invariant_distortion"] = construct_dynamic(
            u0, gamma0, horizon, invariant, market
        )
    else:
        note = "time-invariant distortion skipped: gamma_t <= 0"
    total = accumulate_risk(market, 0.0, horizon)
    frozen = WangForwardDistortion(gamma=gamma0, A=total)
    negative = construct_dynamic(
        u0,
        gamma0,
        horizon,
        lambda s: gamma0 if s == 0.0 else gamma0 + 0.5,
        market,
        distortion_override=lambda _: frozen,
    )
    rows: list[Row] = []
    passed = True
    for case, proc in positive.items():
        gap = verify_dynamic_consistency(proc, t, x, tolerances=tol)
        passed = passed and gap < tol.dynamic_gap
        rows.append({"case": case, "t": t, "x": x, "gap": gap, "expect": "below"})
    gap = verify_dynamic_consistency(negative, t, x, tolerances=tol)
    passed = passed and gap > tol.negative_control
    rows.append(
        {"case": "negative_control", "t": t, "x": x, "gap": gap, "expect": "above"}
    )
    return CheckResult(
        name="dynamic", rows=rows, tolerance=tol.dynamic_gap, passed=passed, note=note
    )


def _bifurcation_check(
    scenario: ScenarioConfig, pair: ForwardPair, tol: ToleranceSpec
) -> CheckResult:
    x = scenario.backward.initial_wealth
    rows = [
        row
        for s, t in _intervals(scenario)
        for row in verify_bifurcation(pair, s, t, x, tolerances=tol)
    ]
    return CheckResult(
        name="bifurcation",
        rows=rows,
        tolerance=REDUCTION_TOL,
        passed=all(float(row["residual"]) <= REDUCTION_TOL for row in rows),
    )


def _pde_check(
    scenario: ScenarioConfig, pair: ForwardPair, tol: ToleranceSpec
) -> CheckResult:
    rows: list[Row] = [
        {"x": x, "t": t, "residual": verify_pde_residual(pair.mixture, x, t)}
        for x in scenario.grids.x
        for t in scenario.grids.t
        if t > 0.0
    ]
    return CheckResult(
        name="pde",
        rows=rows,
        tolerance=tol.pde,
        passed=all(float(row["residual"]) < tol.pde for row in rows),
    )


def _reduction_check(scenario: ScenarioConfig, pair: ForwardPair) -> CheckResult:
    rows: list[Row] = [
        {"s": s, "t": t, "residual": verify_reduction_identity(pair, s, t)}
        for s, t in _intervals(scenario)
    ]
    return CheckResult(
        name="reduction",
        rows=rows,
        tolerance=REDUCTION_TOL,
        passed=all(float(row["residual"]) <= REDUCTION_TOL for row in rows),
    )


def _martingale_check(
    scenario: ScenarioConfig, pair: ForwardPair, tol: ToleranceSpec, threads: int
) -> CheckResult:
    sim = scenario.simulation
    seed = sim.seed if sim.seed is not None else 0
    times = sorted({0.0, *scenario.grids.s, *scenario.grids.t})
    rows = verify_martingale(
        pair,
        sim.x0,
        times,
        sim.n_paths,
        seed,
        threads=threads,
        block_size=sim.block_size,
    )
    return CheckResult(
        name="martingale",
        rows=rows,
        tolerance=tol.standard_errors,
        passed=all(float(row["residual"]) <= tol.standard_errors for row in rows),
    )


def _guarded(name: str, build: Callable[[], CheckResult]) -> CheckResult:
    try:
        return build()
    except ForwardRDUError as exc:
        logger.warning("check %s did not complete: %s", name, exc)
        return CheckResult(
            name=name, rows=[], tolerance=0.0, passed=False, note=f"error: {exc}"
        )


def run_checks(
    scenario: ScenarioConfig, threads: int = 1, tolerance_scale: float = 1.0
) -> VerificationReport:
    """Run every enabled check of *scenario*; rows follow grid order.

    The reduction identity runs only for ``gamma = 1``, the dynamic checks
    only for ``gamma > 0`` and the martingale check only when simulation is
    enabled.
    """
    tol = scenario.tolerances.scaled(tolerance_scale)
    pair = scenario.pair()
    enabled = scenario.checks
    builders: list[tuple[str, Callable[[], CheckResult]]] = []
    if enabled.value_preservation:
        builders.append(
            (
                "value_preservation",
                lambda: _value_preservation_check(scenario, pair, tol, threads),
            )
        )
    if enabled.suboptimality:
        builders.append(
            (
                "suboptimality",
                lambda: _suboptimality_check(scenario, pair, tol, threads),
            )
        )
    if enabled.bifurcation:
        builders.append(
            ("bifurcation", lambda: _bifurcation_check(scenario, pair, tol))
        )
    if enabled.pde:
        builders.append(("pde", lambda: _pde_check(scenario, pair, tol)))
    if enabled.reduction and scenario.gamma == 1.0:
        builders.append(("reduction", lambda: _reduction_check(scenario, pair)))
    if enabled.dynamic and scenario.gamma > 0.0:
        builders.append(("dynamic", lambda: _dynamic_check(scenario, tol)))
    if enabled.martingale and scenario.simulation.enabled:
        builders.append(
            (
                "martingale",
                lambda: _martingale_check(scenario, pair, tol, threads),
            )
        )
    checks = [_guarded(name, build) for name, build in builders]
    for check in checks:
        logger.info("check %s: %s", check.name, "passed" if check.passed else "FAILED")
    return VerificationReport(scenario=scenario.name, checks=checks)


__all__ = [
    "REDUCTION_TOL",
    "conditional_value",
    "optimal_payoff",
    "verify_value_preservation",
    "witness_payoff",
    "verify_suboptimality",
    "optimal_proportion",
    "margin_passes",
    "DynamicProcess",
    "time_invariant_gamma_path",
    "construct_dynamic",
    "verify_dynamic_consistency",
    "verify_bifurcation",
    "verify_reduction_identity",
    "verify_pde_residual",
    "verify_representations",
    "verify_martingale",
    "run_checks",
]
