"""Error types shared across the package.

The CLI maps these onto process exit codes (see ``src.cli.commands``).
"""

from typing import Any, Optional


class RankScaleError(Exception):
    """Base class for every error raised by this package."""


class RejectedInputError(RankScaleError, ValueError):
    """A precondition on an argument did not hold."""


class NumericalFailureError(RankScaleError):
    """An iterative numerical routine gave up before converging."""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(f"{message} (residual={residual:.3e}, sweeps={sweeps})")
        self.residual = residual
        self.sweeps = sweeps


class TrainingDivergedError(RankScaleError):
    """Loss or gradient became non-finite."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


class InvariantBreachError(RankScaleError):
    """A monitor or self-check found a violated invariant."""

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(RankScaleError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        field = f"[{key}] " if key else ""
        super().__init__(f"{where}{field}{message}")
        self.key = key
        self.line = line
