import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.models.array import Matrix, Vector

StateMap = Callable[[np.ndarray], np.ndarray]
JacobianMap = Callable[[np.ndarray], np.ndarray]
ExactSolution = Callable[[float], np.ndarray]


class SplitProblem(BaseModel):
    """Additively split autonomous system u' = f0(u) + f1(u); f1 is the stiff part."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    dim: int = Field(..., ge=1)
    f0: StateMap
    f1: StateMap
    jac1: Optional[JacobianMap] = None
    equilibrium: Optional[Vector] = None
    initial_value: Optional[Vector] = None
    exact: Optional[ExactSolution] = Field(default=None, description="Closed-form solution t -> u(t) from t = 0")

    def rhs0(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.f0(u), dtype=float)

    def rhs1(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.f1(u), dtype=float)

    def equilibrium_defect(self) -> Optional[float]:
        """Max-norm of f0(u*) + f1(u*) scaled by 1 + |u*|, or None without an equilibrium."""
        if self.equilibrium is None:
            return None
        u = self.equilibrium
        defect = np.max(np.abs(self.rhs0(u) + self.rhs1(u)))
        return float(defect / (1.0 + np.max(np.abs(u))))


class StageBlock(BaseModel):
    """Stage values w_{n,i} ~ u(t_n + c_i dt) with cached f0/f1 evaluations."""

    model_config = ConfigDict(frozen=True)

    t_n: float
    dt: float = Field(..., gt=0)
    stages: Matrix
    f0_values: Matrix
    f1_values: Matrix

    @property
    def s(self) -> int:
        return self.stages.shape[0]

    @property
    def last(self) -> np.ndarray:
        return self.stages[-1]


class SolverConfig(BaseModel):
    """Numerical knobs of the stepper and its starting procedure."""

    model_config = ConfigDict(frozen=True)

    newton_abs_tol: float = Field(default=1e-12, gt=0)
    newton_rel_tol: float = Field(default=1e-10, gt=0)
    newton_max_iter: int = Field(default=25, ge=1)
    fd_jacobian_eps_scale: float = Field(default=math.sqrt(np.finfo(float).eps), gt=0)
    starting_substeps_initial: int = Field(default=16, ge=1)
    starting_tol: float = Field(default=1e-12, gt=0)
    starting_max_doublings: int = Field(default=12, ge=1)

    def for_starting_procedure(self) -> "SolverConfig":
        tol = self.starting_tol * 1e-2
        return self.model_copy(update={"newton_abs_tol": tol, "newton_rel_tol": tol})


class Trajectory(BaseModel):
    """Grid values (t_k, u_k), one row of ``values`` per time."""

    model_config = ConfigDict(frozen=True)

    times: Vector
    values: Matrix

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]
