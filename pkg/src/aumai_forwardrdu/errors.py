"""Exception hierarchy for aumai-forwardrdu."""

from __future__ import annotations


class ForwardRDUError(Exception):
    """Base class for every error raised by the library."""


class DomainError(ForwardRDUError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(ForwardRDUError, ArithmeticError):
    """A numerical integration did not reach its requested tolerance.

    Attributes:
        achieved_tolerance: Error estimate reported by the integrator.
    """

    def __init__(self, message: str, achieved_tolerance: float = float("nan")) -> None:
        super().__init__(f"{message} (achieved tolerance {achieved_tolerance:.3e})")
        self.achieved_tolerance = achieved_tolerance


class NoSolutionError(ForwardRDUError, RuntimeError):
    """The Lagrange multiplier search could not bracket the budget.

    Attributes:
        code: Machine-readable reason, ``"bracket"`` when the budget
            function never crossed the initial wealth.
    """

    def __init__(self, message: str, code: str = "bracket") -> None:
        super().__init__(message)
        self.code = code


class InvariantViolationError(ForwardRDUError, ValueError):
    """An input violates a structural invariant (e.g. a non-increasing distortion)."""


class SaturationError(ForwardRDUError, OverflowError):
    """The function h overflowed double precision.

    Attributes:
        z: Spatial argument at which the overflow happened.
        t: Time argument at which the overflow happened.
    """

    def __init__(self, z: float, t: float) -> None:
        super().__init__(f"h(z, t) overflows at z={z!r}, t={t!r}")
        self.z = z
        self.t = t


class UnsupportedPolicyError(ForwardRDUError, TypeError):
    """A witness policy has no computable conditional terminal law."""


class ConfigError(ForwardRDUError, ValueError):
    """A scenario file could not be parsed or validated.

    Attributes:
        line: 1-based line of the offending entry, when it could be located.
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message)
        self.line = line


__all__ = [
    "ForwardRDUError",
    "DomainError",
    "QuadratureError",
    "NoSolutionError",
    "InvariantViolationError",
    "SaturationError",
    "UnsupportedPolicyError",
    "ConfigError",
]
