"""Tests for aumai_forwardrdu.backward_solver."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aumai_forwardrdu.backward_solver import (
    BackwardSolution,
    ConcavifiedN,
    TerminalWealthMap,
    budget,
    build_N,
    concave_envelope,
    exact_N_slope,
    merton_multiplier,
    optimal_terminal_wealth,
    select_branch,
    solve_multiplier,
)
from aumai_forwardrdu.distortion import (
    IdentityDistortion,
    PrelecDistortion,
    WangForwardDistortion,
    degenerate_distortion,
)
from aumai_forwardrdu.errors import DomainError
from aumai_forwardrdu.market import (
    kernel_law,
    kernel_partial_expectation,
    kernel_quantile_normal,
)
from aumai_forwardrdu.models import ForwardPair, GridFunction, KernelLaw
from aumai_forwardrdu.numerics import normal_rule
from aumai_forwardrdu.rdu_value import KernelProspect, rdu_value
from aumai_forwardrdu.utility import CRRAUtility, ForwardUtility, LogUtility

from conftest import A_UNIT


class TestBuildN:
    """Tests for the tabulated N function."""

    def test_end_points(self) -> None:
        n = build_N(IdentityDistortion(), KernelLaw(A=A_UNIT))
        assert n.values[0] == -1.0
        assert n.values[-1] == 0.0

    def test_identity_midpoint(self) -> None:
        n = build_N(IdentityDistortion(), KernelLaw(A=A_UNIT))
        assert float(n(0.5)) == pytest.approx(-0.382088578, abs=1e-8)

    def test_increasing(self) -> None:
        n = build_N(WangForwardDistortion(gamma=2.0, A=A_UNIT), KernelLaw(A=A_UNIT))
        assert np.all(np.diff(n.values) >= 0.0)

    def test_needs_enough_nodes(self) -> None:
        with pytest.raises(DomainError):
            build_N(IdentityDistortion(), KernelLaw(A=A_UNIT), nodes=10)

    def test_exact_slope_matches_differences(self) -> None:
        w = WangForwardDistortion(gamma=2.0, A=A_UNIT)
        law = KernelLaw(A=A_UNIT)
        n = build_N(w, law)
        z, step = 0.4, 1e-4
        numeric = (float(n(z + step)) - float(n(z - step))) / (2.0 * step)
        assert float(exact_N_slope(w, law, np.array([z]))[0]) == pytest.approx(
            numeric, rel=1e-3
        )


def _brute_force_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Largest chord value over every pair of nodes bracketing each node."""
    hull = y.copy()
    for k in range(x.size):
        for i in range(k + 1):
            for j in range(k, x.size):
                if i == j:
                    continue
                chord = y[i] + (y[j] - y[i]) * (x[k] - x[i]) / (x[j] - x[i])
                hull[k] = max(hull[k], chord)
    return hull


class TestConcaveEnvelope:
    """Tests for the upper-hull sweep."""

    def test_envelope_of_convex_is_chord(self) -> None:
        z = np.linspace(0.0, 1.0, 101)
        envelope = concave_envelope(GridFunction(nodes=z, values=z * z))
        np.testing.assert_allclose(envelope.values, z, atol=1e-15)
        assert envelope.vertices == (0, 100)

    def test_envelope_of_concave_is_itself(self) -> None:
        z = np.linspace(0.0, 1.0, 101)
        values = np.sqrt(z)
        envelope = concave_envelope(GridFunction(nodes=z, values=values))
        np.testing.assert_allclose(envelope.values, values, atol=1e-15)

    def test_envelope_majorises(self) -> None:
        z = np.linspace(0.0, 1.0, 201)
        values = np.sin(6.0 * z) * z
        envelope = concave_envelope(GridFunction(nodes=z, values=values))
        assert np.all(envelope.values >= values - 1e-15)
        assert np.all(np.diff(envelope.values, 2) <= 1e-12)

    @given(data=st.data())
    @settings(max_examples=100, deadline=None)
    def test_sweep_matches_brute_force(self, data: st.DataObject) -> None:
        interior = data.draw(
            st.lists(st.integers(1, 999), min_size=1, max_size=40, unique=True)
        )
        x = np.array([0, *sorted(interior), 1000], dtype=float) / 1000.0
        y = np.array(
            data.draw(
                st.lists(
                    st.floats(-5.0, 5.0, allow_nan=False),
                    min_size=x.size,
                    max_size=x.size,
                )
            )
        )
        envelope = concave_envelope(GridFunction(nodes=x, values=y))
        np.testing.assert_allclose(envelope.values, _brute_force_hull(x, y), atol=1e-12)
        assert np.all(envelope.values >= y - 1e-12)
        slopes = np.diff(envelope.values) / np.diff(x)
        assert np.all(np.diff(slopes) <= 1e-8)

    def test_concavified_flags(self) -> None:
        law = KernelLaw(A=A_UNIT)
        assert ConcavifiedN(WangForwardDistortion(gamma=2.0, A=A_UNIT), law).is_concave
        assert not ConcavifiedN(PrelecDistortion(alpha=0.65), law).is_concave


class TestTerminalWealth:
    """Tests for the terminal wealth map and the budget."""

    def test_merton_map(self) -> None:
        law = KernelLaw(A=A_UNIT)
        wealth_map = optimal_terminal_wealth(
            CRRAUtility(2.0), IdentityDistortion(), law, 4.0
        )
        rho = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(wealth_map(rho), (4.0 * rho) ** -0.5)

    def test_budget_of_merton_map(self) -> None:
        law = KernelLaw(A=A_UNIT)
        wealth_map = optimal_terminal_wealth(
            CRRAUtility(2.0), IdentityDistortion(), law, 4.0
        )
        expected = 0.5 * math.exp(0.5 * A_UNIT * 0.5 * -0.5)
        assert budget(wealth_map) == pytest.approx(expected, rel=1e-12)

    def test_degenerate_law_gives_constant(self) -> None:
        wealth_map = optimal_terminal_wealth(
            LogUtility(), IdentityDistortion(), KernelLaw(A=0.0), 0.5
        )
        assert budget(wealth_map) == pytest.approx(2.0)

    def test_rejects_nonpositive_multiplier(self) -> None:
        with pytest.raises(DomainError):
            optimal_terminal_wealth(
                LogUtility(), IdentityDistortion(), KernelLaw(A=1.0), 0.0
            )

    def test_rejects_nonpositive_kernel(self) -> None:
        wealth_map = TerminalWealthMap(
            LogUtility(), IdentityDistortion(), KernelLaw(A=1.0), 1.0, "jin_zhou"
        )
        with pytest.raises(DomainError):
            wealth_map(np.array([0.0]))

    def test_branch_selection(self) -> None:
        law = KernelLaw(A=A_UNIT)
        wang = WangForwardDistortion(gamma=2.0, A=A_UNIT)
        assert select_branch(wang, law) == "jin_zhou"
        assert select_branch(PrelecDistortion(alpha=0.65), law) == "envelope"

    def test_branch_selection_slack(self) -> None:
        law = KernelLaw(A=A_UNIT)
        prelec = PrelecDistortion(alpha=0.65)
        assert select_branch(prelec, law, slack=math.inf) == "jin_zhou"

    def test_envelope_tolerance_widens_contact(self) -> None:
        law = KernelLaw(A=A_UNIT)
        prelec = PrelecDistortion(alpha=0.65)
        assert ConcavifiedN(prelec, law, envelope_tol=1.0).is_concave


class TestSolveMultiplier:
    """Tests for the Lagrange multiplier search."""

    @pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
    def test_merton(self, x: float) -> None:
        law = KernelLaw(A=A_UNIT)
        solution = solve_multiplier(CRRAUtility(2.0), IdentityDistortion(), law, x)
        assert solution.multiplier == pytest.approx(x**-2 * math.exp(-0.0225), rel=1e-9)
        assert solution.multiplier == pytest.approx(
            merton_multiplier(2.0, law, x), rel=1e-9
        )
        assert solution.branch == "jin_zhou"
        assert not solution.degenerate

    def test_envelope_branch_matches_closed_form_when_concave(self) -> None:
        law = KernelLaw(A=A_UNIT)
        w = WangForwardDistortion(gamma=2.0, A=A_UNIT)
        closed = solve_multiplier(CRRAUtility(3.0), w, law, 1.0, branch="jin_zhou")
        envelope = solve_multiplier(CRRAUtility(3.0), w, law, 1.0, branch="envelope")
        assert envelope.multiplier == pytest.approx(closed.multiplier, rel=1e-10)

    def test_prelec_log_uses_envelope(self) -> None:
        law = KernelLaw(A=A_UNIT)
        prelec = PrelecDistortion(alpha=0.65)
        solution = solve_multiplier(LogUtility(), prelec, law, 2.0)
        assert solution.branch == "envelope"
        assert solution.achieved_budget == pytest.approx(2.0, rel=1e-8)
        assert solution.multiplier * 2.0 == pytest.approx(1.0, rel=1e-2)

    def test_degenerate_distortion(self) -> None:
        law = KernelLaw(A=A_UNIT)
        floor = degenerate_distortion(law)
        solution = solve_multiplier(CRRAUtility(2.0), floor, law, 2.0)
        assert solution.degenerate
        assert solution.branch == "degenerate"
        assert solution.multiplier == pytest.approx(0.25)
        np.testing.assert_allclose(solution.terminal_wealth(np.array([0.3, 3.0])), 2.0)

    def test_forward_pair_multiplier_is_initial_marginal(
        self, crra_pair: ForwardPair
    ) -> None:
        law = kernel_law(crra_pair.market, 0.0, 1.0)
        solution = solve_multiplier(
            ForwardUtility(crra_pair, 1.0),
            WangForwardDistortion(gamma=crra_pair.gamma, A=law.A),
            law,
            1.5,
        )
        assert solution.multiplier == pytest.approx(1.5**-2, rel=1e-8)

    def test_rejects_nonpositive_wealth(self) -> None:
        with pytest.raises(DomainError):
            solve_multiplier(LogUtility(), IdentityDistortion(), KernelLaw(A=1.0), 0.0)

    def test_summary_and_table(self) -> None:
        solution = solve_multiplier(
            LogUtility(), IdentityDistortion(), KernelLaw(A=A_UNIT), 1.0
        )
        table = solution.wealth_table()
        assert list(table.columns) == ["p", "rho", "X_star"]
        assert len(table) == 999
        assert np.all(np.diff(table["X_star"]) < 0.0)
        summary = solution.summary()
        assert summary["branch"] == "jin_zhou"
        assert summary["multiplier"] == pytest.approx(1.0, rel=1e-10)

    def test_fit_tolerance_reaches_the_degenerate_short_circuit(self) -> None:
        law = KernelLaw(A=A_UNIT)
        near_wang = PrelecDistortion(alpha=0.999)
        strict = solve_multiplier(LogUtility(), near_wang, law, 1.0)
        loose = solve_multiplier(LogUtility(), near_wang, law, 1.0, fit_tol=1e-2)
        assert strict.degenerate
        assert not loose.degenerate
        assert loose.achieved_budget == pytest.approx(1.0, rel=1e-8)


def _budget(law: KernelLaw, payoff: Callable[[np.ndarray], np.ndarray]) -> float:
    zeta, probabilities = normal_rule()
    rho = kernel_quantile_normal(law, zeta)
    return float(np.sum(probabilities * rho * payoff(rho)))


def _value(
    law: KernelLaw, w: PrelecDistortion, payoff: Callable[[np.ndarray], np.ndarray]
) -> float:
    return rdu_value(LogUtility(), w, KernelProspect(law, payoff))


def _nonincreasing_fit(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted least-squares nonincreasing fit by pooling adjacent violators."""
    blocks: list[tuple[float, float, int]] = []
    for value, weight in zip(values, weights, strict=True):
        blocks.append((float(value), float(weight), 1))
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            v2, w2, c2 = blocks.pop()
            v1, w1, c1 = blocks.pop()
            blocks.append(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2))
    return np.concatenate([np.full(count, value) for value, _, count in blocks])


def _step_optimum(law: KernelLaw, w: PrelecDistortion, x: float, bins: int) -> float:
    """Best RDU value of log utility over payoffs constant on kernel quantile bins.

    With bin weights ``dw`` and budget masses ``dm`` the nonincreasing
    optimum is ``x`` times the weighted nonincreasing fit of ``dw / dm``.
    """
    p = np.linspace(0.0, 1.0, bins + 1)
    dw = np.diff(np.asarray(w(p)))
    dm = np.diff(np.asarray(kernel_partial_expectation(law, p)))
    wealth = x * _nonincreasing_fit(dw / dm, dm)
    assert float(np.sum(wealth * dm)) == pytest.approx(x, rel=1e-10)
    return float(np.sum(dw * np.log(wealth)))


class TestPrelecLogOptimality:
    """The envelope solution against step-payoff and witness competitors at x = 2."""

    law = KernelLaw(A=A_UNIT)
    prelec = PrelecDistortion(alpha=0.65)

    @pytest.fixture(scope="class")
    def solution(self) -> BackwardSolution:
        return solve_multiplier(LogUtility(), self.prelec, self.law, 2.0)

    def test_budget_matched(self, solution: BackwardSolution) -> None:
        assert abs(solution.achieved_budget - 2.0) <= 1e-8 * 2.0
        assert _budget(self.law, solution.terminal_wealth) == pytest.approx(
            2.0, rel=1e-8
        )

    @pytest.mark.parametrize("bins", [200, 2000])
    def test_matches_discretised_optimum(
        self, solution: BackwardSolution, bins: int
    ) -> None:
        best = _value(self.law, self.prelec, solution.terminal_wealth)
        discrete = _step_optimum(self.law, self.prelec, 2.0, bins)
        assert best > discrete - 1e-4
        assert best - discrete < 1e-2

    @pytest.mark.parametrize("kappa", [0.0, 0.25, 0.5, 1.0, 1.5, 2.0])
    def test_beats_constant_proportions(
        self, solution: BackwardSolution, kappa: float
    ) -> None:
        def raw(rho: np.ndarray) -> np.ndarray:
            return np.power(rho, -kappa)

        scale = 2.0 / _budget(self.law, raw)

        def witness(rho: np.ndarray) -> np.ndarray:
            return scale * raw(rho)

        best = _value(self.law, self.prelec, solution.terminal_wealth)
        assert best > _value(self.law, self.prelec, witness)

    @pytest.mark.parametrize("seed", range(8))
    def test_beats_perturbed_payoffs(
        self, solution: BackwardSolution, seed: int
    ) -> None:
        rng = np.random.default_rng(seed)
        steepness = rng.uniform(0.5, 3.0)
        centre = rng.normal()
        size = rng.uniform(0.2, 0.6)
        scale_a = math.sqrt(A_UNIT)

        def raw(rho: np.ndarray) -> np.ndarray:
            zeta = (np.log(rho) + 0.5 * A_UNIT) / scale_a
            tilt = np.exp(-size * np.tanh(steepness * (zeta - centre)))
            return np.asarray(solution.terminal_wealth(rho)) * tilt

        scale = 2.0 / _budget(self.law, raw)

        def perturbed(rho: np.ndarray) -> np.ndarray:
            return scale * raw(rho)

        best = _value(self.law, self.prelec, solution.terminal_wealth)
        assert best > _value(self.law, self.prelec, perturbed)
