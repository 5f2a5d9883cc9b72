from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.array import Matrix, Vector


class PeerCoefficients(BaseModel):
    """Coefficient set of an s-stage IMEX Peer method.

    ``S1``, ``Qhat`` and ``Rhat`` are derived quantities; build instances through
    ``CoefficientService.assemble`` so they stay consistent with the rest.
    Invariants beyond shapes are checked by ``CoefficientService.validate``.
    """

    model_config = ConfigDict(frozen=True)

    label: str = Field(default="custom")
    s: int = Field(..., ge=1)
    gamma: float
    c: Vector
    P: Matrix
    Q: Matrix
    R: Matrix
    S1: Matrix
    S2: Matrix
    Qhat: Matrix
    Rhat: Matrix

    @model_validator(mode="after")
    def check_shapes(self):
        if self.c.shape != (self.s,):
            raise ValueError(f"Expected {self.s} nodes, got {self.c.shape[0]}")
        for name in ("P", "Q", "R", "S1", "S2", "Qhat", "Rhat"):
            if getattr(self, name).shape != (self.s, self.s):
                raise ValueError(f"Matrix {name} must be {self.s}x{self.s}")
        return self

    @property
    def e(self) -> np.ndarray:
        return np.ones(self.s)


class Violation(BaseModel):
    invariant: str
    magnitude: float


class ValidationReport(BaseModel):
    passed: bool
    violations: List[Violation] = Field(default_factory=list)
    implicit_degree: int = Field(default=-1, description="Highest degree of exactness of the implicit base scheme")
    imex_degree: int = Field(default=-1, description="Highest degree of exactness of the full split scheme")
    extrapolation_degree: int = Field(default=-1, description="Highest degree reproduced by S1, S2")
    spectral_radius_p: Optional[float] = None
    zero_stable: Optional[bool] = None
    stiff_limit_amplification: Optional[float] = None

    @model_validator(mode="after")
    def check_passed(self):
        if self.passed == bool(self.violations):
            raise ValueError("passed must be true exactly when there are no violations")
        return self

    def violation(self, invariant: str) -> Optional[Violation]:
        return next((v for v in self.violations if v.invariant == invariant), None)


class ZeroStabilityReport(BaseModel):
    spectral_radius: float
    semisimple: bool
    stable: bool
