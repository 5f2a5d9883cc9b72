from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.array import Matrix, Vector
from app.models.problem import SolverConfig

ProblemName = Literal["wb", "ap", "poly", "jinxin"]


class ConvergenceEntry(BaseModel):
    dt: float = Field(..., gt=0)
    error: Optional[float] = None
    failure: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.failure is None and self.error is not None and self.error > 0


class ConvergenceReport(BaseModel):
    method: str
    problem: str
    epsilon: Optional[float] = None
    entries: List[ConvergenceEntry]
    fitted_order: float
    reference: str

    @model_validator(mode="after")
    def check_entries(self):
        dts = [entry.dt for entry in self.entries]
        if any(b >= a for a, b in zip(dts, dts[1:])):
            raise ValueError("Step sizes must be strictly decreasing")
        return self


class ProblemSpec(BaseModel):
    name: ProblemName
    epsilon: Optional[float] = Field(default=None, gt=0)
    degree: Optional[int] = Field(default=None, ge=0)
    alpha: float = Field(default=0.3, ge=0, le=1)
    cells: Optional[int] = Field(default=None, ge=8)


class RunSpec(BaseModel):
    """Complete description of a run: where the method comes from, what to integrate and how."""

    method: str = Field(..., description="Coefficient file path or builtin:sK")
    problem: ProblemSpec
    dt: Optional[float] = Field(default=None, gt=0)
    dt_max: Optional[float] = Field(default=None, gt=0)
    levels: Optional[int] = Field(default=None, ge=1)
    t_end: float = Field(..., gt=0)
    config: SolverConfig = Field(default_factory=SolverConfig)
    reference_tol: float = Field(default=1e-10, ge=1e-13)
    output: Optional[str] = None

    @model_validator(mode="after")
    def check_complete(self):
        if self.dt is None and (self.dt_max is None or self.levels is None):
            raise ValueError("RunSpec needs either dt or both dt_max and levels")
        return self

    def step_sizes(self) -> List[float]:
        if self.dt_max is not None and self.levels is not None:
            return [self.dt_max / 2 ** i for i in range(self.levels)]
        return [self.dt]


class PerturbationResult(BaseModel):
    epsilon: float
    drift: float
    ratio: float


class WellBalancedReport(BaseModel):
    method: str
    problem: str
    dt: float
    n_steps: int
    exact_drift: float = Field(..., description="max ||w_{n+1} - w_n|| starting from the equilibrium block")
    perturbations: List[PerturbationResult]
    dynamic_t_end: float
    dynamic_distance: float = Field(..., description="||u(t_end) - u*|| from the default initial value")
    dynamic_tail: List[float]

    @property
    def tail_non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.dynamic_tail, self.dynamic_tail[1:]))


class AsymptoticEntry(BaseModel):
    epsilon: float
    equilibrium_residual: float
    projection_gap: float


class AsymptoticReport(BaseModel):
    method: str
    problem: str
    dt: float
    t_end: float
    entries: List[AsymptoticEntry]
    residual_slope: Optional[float] = None


class StabilityField(BaseModel):
    """Spectral radii on a rectangular grid; rows follow the imaginary axis. Poles are NaN."""

    re: Vector
    im: Vector
    radius: Matrix
    poles: List[List[float]] = Field(default_factory=list)
