"""Exception types raised across the package."""

from __future__ import annotations


class FDELabError(Exception):
    """Base class for every error raised by fdelab."""


class DomainError(FDELabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(FDELabError):
    """A run configuration failed validation."""


class CFLViolation(FDELabError):
    """The requested time step exceeds the explicit stability bound."""


class PositivityLoss(FDELabError):
    """A solver stage produced a value at or below the positivity floor."""

    def __init__(self, node: int, time: float, value: float, floor: float):
        self.node = node
        self.time = time
        self.value = value
        self.floor = floor
        super().__init__(
            f"positivity lost at node {node}, t={time:.6g}: value {value:.3e} <= floor {floor:.3e}"
        )


class HypothesisFailure(FDELabError):
    """A theorem/corollary hypothesis does not hold on the supplied data."""

    def __init__(self, hypothesis: str, text: str, worst: dict | None = None):
        self.hypothesis = hypothesis
        self.text = text
        self.worst = worst or {}
        super().__init__(f"hypothesis {hypothesis} violated: {text}")
