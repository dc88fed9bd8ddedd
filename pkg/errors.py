"""
Error hierarchy shared by every stgbench component.

Each class carries the process exit code the CLI maps it to:
0 success, 2 input/config error, 3 state/compatibility error.
"""

from typing import Optional


class StgBenchError(Exception):
    """Base class for all toolkit errors."""
    exit_code = 2


class InputError(StgBenchError, ValueError):
    """Malformed or out-of-range user input."""


class ConfigurationError(StgBenchError, ValueError):
    """Invalid run configuration or model hyperparameters."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(f"[{key}] {message}" if key else message)
        self.key = key


class DimensionError(StgBenchError, ValueError):
    """Shape mismatch between operands."""

    def __init__(self, op: str, *shapes):
        shape_str = ", ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {shape_str}")
        self.op = op
        self.shapes = shapes


class NumericalError(StgBenchError, ArithmeticError):
    """NaN/Inf values or division by zero."""


class MetricError(StgBenchError):
    """A metric could not be computed (e.g. every entry is masked)."""


class ContractError(StgBenchError):
    """An API precondition was violated by the caller."""
    exit_code = 3


class CompatibilityError(StgBenchError):
    """Artifacts on disk do not fit together (checkpoint vs dataset, missing cache)."""
    exit_code = 3


class DivergenceError(StgBenchError):
    """Training loss became non-finite."""
    exit_code = 3

    def __init__(self, epoch: int, step: int):
        super().__init__(f"non-finite training loss at epoch {epoch} (step {step})")
        self.epoch = epoch
        self.step = step
