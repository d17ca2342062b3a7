"""
Structured errors for schro-reg.

Every error carries the exit code the CLI maps it to.
"""

from __future__ import annotations


class RegulatorError(Exception):
    """Base class for all schro-reg failures."""

    exit_code: int = 1


class ConfigError(RegulatorError, ValueError):
    """Invalid scenario or invalid input data."""

    exit_code = 2


class DimensionError(ConfigError):
    """Grid or shape mismatch between operands."""


class ExosystemError(ConfigError):
    """Exosystem data violates the standing assumptions."""


class SolvabilityError(RegulatorError):
    """A regulator equation has no (unique) solution.

    Attributes:
        condition: Which solvability condition failed ("state-regulator" for the m-equation,
            "observer-regulator" for the n-equation)
        eigenvalue: The offending exosystem eigenvalue
        margin: The measured margin (modulus of the quantity that must not vanish)
    """

    exit_code = 3

    def __init__(
        self, message: str, condition: str, eigenvalue: complex, margin: float | None = None
    ):
        super().__init__(message)
        self.condition = condition
        self.eigenvalue = eigenvalue
        self.margin = margin


class PolePlacementError(RegulatorError):
    """Observer gain placement failed."""

    exit_code = 3


class HypothesisError(RegulatorError):
    """Observer design hypotheses are violated.

    Attributes:
        violations: One message per violated hypothesis
    """

    exit_code = 3

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class KernelSolveError(RegulatorError):
    """Successive approximation did not converge."""

    def __init__(self, message: str, update: float, iterations: int):
        super().__init__(message)
        self.update = update
        self.iterations = iterations


class SpectralError(RegulatorError):
    """Eigenvalue computation failed."""


class NumericFailure(RegulatorError):
    """A linear solve or a time step produced unusable numbers."""


class DivergenceError(NumericFailure):
    """A simulated norm exceeded the divergence cap."""

    exit_code = 4

    def __init__(self, quantity: str, time: float, value: float):
        super().__init__(f"{quantity} diverged at t={time:.6g} (value {value:.3e})")
        self.quantity = quantity
        self.time = time
        self.value = value
