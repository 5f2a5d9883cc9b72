from app.models.array import Matrix, NdArrayField, Vector
from app.models.coefficients import PeerCoefficients, ValidationReport, Violation, ZeroStabilityReport
from app.models.problem import SolverConfig, SplitProblem, StageBlock, Trajectory
from app.models.relaxation import CatalogEntry, RelaxationProblem, RelaxationStructure, StructureCheck
from app.models.report import (
    AsymptoticEntry,
    AsymptoticReport,
    ConvergenceEntry,
    ConvergenceReport,
    PerturbationResult,
    ProblemSpec,
    RunSpec,
    StabilityField,
    WellBalancedReport,
)

__all__ = [
    "Matrix",
    "NdArrayField",
    "Vector",
    "PeerCoefficients",
    "ValidationReport",
    "Violation",
    "ZeroStabilityReport",
    "SolverConfig",
    "SplitProblem",
    "StageBlock",
    "Trajectory",
    "CatalogEntry",
    "RelaxationProblem",
    "RelaxationStructure",
    "StructureCheck",
    "AsymptoticEntry",
    "AsymptoticReport",
    "ConvergenceEntry",
    "ConvergenceReport",
    "PerturbationResult",
    "ProblemSpec",
    "RunSpec",
    "StabilityField",
    "WellBalancedReport",
]
