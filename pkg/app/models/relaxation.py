from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.array import Matrix, Vector
from app.models.problem import SplitProblem


class RelaxationStructure(BaseModel):
    """Conservation matrix C, relaxation source G and local equilibrium map E.

    Expected identities: C G(U) = 0, G(E(u)) = 0 and C E(u) = u.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_full: int = Field(..., ge=1)
    m_cons: int = Field(..., ge=1)
    C: Matrix
    source: Callable[[np.ndarray], np.ndarray]
    equilibrium_map: Callable[[np.ndarray], np.ndarray]

    @model_validator(mode="after")
    def check_dimensions(self):
        if self.m_cons >= self.n_full:
            raise ValueError("Conserved dimension must be smaller than the full dimension")
        if self.C.shape != (self.m_cons, self.n_full):
            raise ValueError(f"C must be {self.m_cons}x{self.n_full}, got {self.C.shape}")
        return self

    def G(self, U: np.ndarray) -> np.ndarray:
        return np.asarray(self.source(U), dtype=float)

    def E(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.equilibrium_map(u), dtype=float)


class RelaxationProblem(BaseModel):
    """Full system with f1 = G / epsilon together with its relaxation structure."""

    model_config = ConfigDict(frozen=True)

    full: SplitProblem
    structure: RelaxationStructure
    epsilon: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_dimensions(self):
        if self.full.dim != self.structure.n_full:
            raise ValueError("Full problem dimension does not match the relaxation structure")
        return self


class CatalogEntry(BaseModel):
    """A named benchmark: the problem to integrate, its relaxation data if any, and its initial value."""

    model_config = ConfigDict(frozen=True)

    name: str
    problem: SplitProblem
    relaxation: Optional[RelaxationProblem] = None
    initial_value: Vector


class StructureCheck(BaseModel):
    conservation_defect: float = Field(..., description="max |C G(U)|")
    equilibrium_defect: float = Field(..., description="max |G(E(u))|")
    projection_defect: float = Field(..., description="max |C E(u) - u|")
    min_singular_value: float

    @property
    def max_defect(self) -> float:
        return max(self.conservation_defect, self.equilibrium_defect, self.projection_defect)

    def conforms(self, tol: float = 1e-12) -> bool:
        return self.max_defect <= tol and self.min_singular_value > 1e-10
