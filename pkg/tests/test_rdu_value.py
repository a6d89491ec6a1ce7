"""Tests for aumai_forwardrdu.rdu_value."""

from __future__ import annotations

import math

import numpy as np
import pytest

from aumai_forwardrdu.distortion import (
    IdentityDistortion,
    WangDistortion,
    WangForwardDistortion,
)
from aumai_forwardrdu.errors import DomainError
from aumai_forwardrdu.market import kernel_power_mean
from aumai_forwardrdu.models import KernelLaw
from aumai_forwardrdu.rdu_value import (
    ConstantProspect,
    KernelProspect,
    LognormalProspect,
    QuantileProspect,
    certainty_equivalent,
    distorted_mean,
    expected_utility_mc,
    rdu_value,
    risk_premium_decomposition,
)
from aumai_forwardrdu.utility import CRRAUtility, LogUtility

from conftest import A_UNIT


class TestRduValue:
    """Tests for the quantile-form RDU functional."""

    def test_identity_reduces_to_expected_utility(self) -> None:
        x = LognormalProspect(mu=0.2, sigma=0.5)
        assert rdu_value(LogUtility(), IdentityDistortion(), x) == pytest.approx(
            0.2, abs=1e-12
        )

    def test_constant_prospect(self) -> None:
        value = rdu_value(
            CRRAUtility(2.0), WangDistortion(shift=-0.7), ConstantProspect(4.0)
        )
        assert value == pytest.approx(-0.25)

    def test_forward_wang_log_value(self) -> None:
        gamma, x0 = 1.5, 1.3
        law = KernelLaw(A=A_UNIT)
        norm_const = kernel_power_mean(law, 1.0 - gamma)

        def payoff(rho: np.ndarray) -> np.ndarray:
            return x0 * np.power(rho, -gamma) / norm_const

        value = rdu_value(
            LogUtility(),
            WangForwardDistortion(gamma=gamma, A=A_UNIT),
            KernelProspect(law, payoff),
        )
        assert value == pytest.approx(math.log(x0) + 0.5 * gamma**2 * A_UNIT, abs=1e-10)

    def test_degenerate_law(self) -> None:
        prospect = KernelProspect(KernelLaw(A=0.0), lambda rho: 3.0 / rho)
        assert rdu_value(LogUtility(), IdentityDistortion(), prospect) == pytest.approx(
            math.log(3.0)
        )

    def test_zero_outcome_gives_minus_infinity(self) -> None:
        value = rdu_value(CRRAUtility(2.0), IdentityDistortion(), ConstantProspect(0.0))
        assert value == -math.inf

    def test_bounded_utility_at_zero(self) -> None:
        value = rdu_value(CRRAUtility(0.5), IdentityDistortion(), ConstantProspect(0.0))
        assert value == 0.0

    def test_quantile_prospect_uses_unit_interval_rule(self) -> None:
        uniform = QuantileProspect(lambda p: p)
        value = rdu_value(CRRAUtility(0.5), IdentityDistortion(), uniform)
        assert value == pytest.approx(4.0 / 3.0, rel=1e-8)

    def test_quantile_table_validated(self) -> None:
        with pytest.raises(DomainError):
            QuantileProspect.from_table([0.0, 0.5, 1.0], [2.0, 1.0, 3.0])

    def test_negative_constant_rejected(self) -> None:
        with pytest.raises(DomainError):
            ConstantProspect(-1.0)


class TestDistortedMean:
    """Tests for distorted means, certainty equivalents and premia."""

    def test_pessimistic_shift_lowers_mean(self) -> None:
        x = LognormalProspect(mu=0.0, sigma=1.0)
        # zeta ~ N(1/2, 1) under the shifted law, so E[exp(-zeta)] = 1.
        assert distorted_mean(WangDistortion(shift=-0.5), x) == pytest.approx(
            1.0, rel=1e-10
        )
        assert x.mean() == pytest.approx(math.exp(0.5))

    def test_certainty_equivalent_of_constant(self) -> None:
        ce = certainty_equivalent(
            CRRAUtility(3.0), WangDistortion(shift=0.4), ConstantProspect(2.5)
        )
        assert ce == pytest.approx(2.5)

    def test_certainty_equivalent_needs_finite_value(self) -> None:
        with pytest.raises(DomainError):
            certainty_equivalent(
                CRRAUtility(2.0), IdentityDistortion(), ConstantProspect(0.0)
            )

    def test_decomposition_adds_up(self) -> None:
        x = LognormalProspect(mu=0.0, sigma=0.4)
        result = risk_premium_decomposition(LogUtility(), WangDistortion(shift=-0.3), x)
        assert result.expected_value == pytest.approx(x.mean(), rel=1e-10)
        assert result.pessimism_premium > 0.0
        assert result.utility_premium > 0.0
        assert result.total == pytest.approx(
            result.expected_value - result.certainty_equivalent
        )

    def test_identity_has_no_pessimism_premium(self) -> None:
        x = LognormalProspect(mu=0.1, sigma=0.3)
        result = risk_premium_decomposition(CRRAUtility(2.0), IdentityDistortion(), x)
        assert result.pessimism_premium == pytest.approx(0.0, abs=1e-12)

    def test_monte_carlo_expected_utility(self) -> None:
        x = LognormalProspect(mu=0.2, sigma=0.5)
        mean, se = expected_utility_mc(LogUtility(), x, n=20_000, seed=5)
        assert abs(mean - 0.2) < 4.0 * se
