"""Exception hierarchy for the Peer integration library.

Every error raised on purpose derives from ``PeerError``, itself a
``ValueError``, so call sites that guard with ``except ValueError`` keep
working.
"""

from typing import Optional


class PeerError(ValueError):
    """Base class for all library errors."""


class NumericalFailure(PeerError):
    """Marker base for failures of a numerical procedure (CLI exit code 2)."""


class NodeVectorError(PeerError):
    """Nodes are not pairwise distinct, do not end at 1, or leave [0, 1]."""


class ConstraintError(PeerError):
    """A coefficient precondition (Pe = e, zero-stability, triangularity) failed."""


class StructureError(PeerError):
    """Dimension mismatch or malformed relaxation structure."""


class GridMismatchError(PeerError):
    """Two trajectories do not share the same time grid."""


class CoefficientParseError(PeerError):
    """A coefficient file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CoefficientValidationError(PeerError):
    """Loaded or supplied coefficients failed validation."""

    def __init__(self, report):
        self.report = report
        failures = ", ".join(f"{v.invariant} ({v.magnitude:.3e})" for v in report.violations)
        super().__init__(f"coefficient validation failed: {failures}")


class NewtonError(NumericalFailure):
    """The implicit stage solve did not converge."""

    def __init__(self, reason: str, residual: float, iterations: int, stage: Optional[int] = None):
        self.reason = reason
        self.residual = residual
        self.iterations = iterations
        self.stage = stage
        where = f" in stage {stage}" if stage is not None else ""
        super().__init__(
            f"Newton {reason}{where} after {iterations} iterations, residual {residual:.3e}"
        )


class StepFailure(NumericalFailure):
    """A Peer step failed; carries the failing stage and, once known, the step index."""

    def __init__(self, stage: int, residual: float, reason: str, step_index: Optional[int] = None):
        self.stage = stage
        self.residual = residual
        self.reason = reason
        self.step_index = step_index
        prefix = f"step {step_index}: " if step_index is not None else ""
        super().__init__(f"{prefix}stage {stage} failed ({reason}), residual {residual:.3e}")

    def at_step(self, step_index: int) -> "StepFailure":
        return StepFailure(self.stage, self.residual, self.reason, step_index)


class ResultWriteError(PeerError):
    """An output file could not be written."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


class StartingProcedureError(NumericalFailure):
    """Sub-stepped IMEX Euler refinement did not settle within the doubling budget."""


class ReferenceSolutionError(NumericalFailure):
    """Self-refinement of the reference solution did not converge."""


class FitError(NumericalFailure):
    """Not enough successful entries for a least-squares order fit."""
