"""Relaxation Service - algebraic checks and limit problems for stiff relaxation systems"""

from typing import Optional, Sequence

import numpy as np

from app.core.errors import StructureError
from app.core.logger import setup_logger
from app.models.problem import SplitProblem, Trajectory
from app.models.relaxation import RelaxationProblem, RelaxationStructure, StructureCheck

logger = setup_logger(name="relaxation_service")

SAMPLE_COUNT = 128
SAMPLE_SEED = 20240229
SAMPLE_BOUND = 2.0


class RelaxationService:
    """Service for the conservation / equilibrium structure of relaxation problems"""

    @staticmethod
    def sample_states(dimension: int, count: int = SAMPLE_COUNT, seed: int = SAMPLE_SEED) -> np.ndarray:
        """Reproducible pseudo-random states in [-2, 2]^dimension."""
        rng = np.random.default_rng(seed)
        return rng.uniform(-SAMPLE_BOUND, SAMPLE_BOUND, size=(count, dimension))

    @staticmethod
    def check_structure(
        structure: RelaxationStructure,
        sample_states: Optional[Sequence] = None,
        sample_conserved: Optional[Sequence] = None,
    ) -> StructureCheck:
        """Max defects of C G(U) = 0, G(E(u)) = 0 and C E(u) = u over the samples."""
        if sample_states is None:
            sample_states = RelaxationService.sample_states(structure.n_full)
        if sample_conserved is None:
            sample_conserved = RelaxationService.sample_states(structure.m_cons, seed=SAMPLE_SEED + 1)
        states = np.atleast_2d(np.asarray(sample_states, dtype=float))
        conserved = np.atleast_2d(np.asarray(sample_conserved, dtype=float))
        if states.size == 0 or conserved.size == 0:
            raise StructureError("Structure check needs nonempty samples")
        if states.shape[1] != structure.n_full:
            raise StructureError(f"Full samples must have dimension {structure.n_full}, got {states.shape[1]}")
        if conserved.shape[1] != structure.m_cons:
            raise StructureError(f"Conserved samples must have dimension {structure.m_cons}, got {conserved.shape[1]}")

        C = structure.C
        conservation = 0.0
        for U in states:
            G = structure.G(U)
            if G.shape != (structure.n_full,):
                raise StructureError(f"Source returned shape {G.shape}, expected ({structure.n_full},)")
            conservation = max(conservation, float(np.max(np.abs(C @ G))))

        equilibrium = projection = 0.0
        for u in conserved:
            E = structure.E(u)
            if E.shape != (structure.n_full,):
                raise StructureError(f"Equilibrium map returned shape {E.shape}, expected ({structure.n_full},)")
            equilibrium = max(equilibrium, float(np.max(np.abs(structure.G(E)))))
            projection = max(projection, float(np.max(np.abs(C @ E - u))))

        singular_values = np.linalg.svd(C, compute_uv=False)
        return StructureCheck(
            conservation_defect=conservation,
            equilibrium_defect=equilibrium,
            projection_defect=projection,
            min_singular_value=float(np.min(singular_values)),
        )

    @staticmethod
    def scaling_defect(rp: RelaxationProblem, sample_states: Optional[Sequence] = None) -> float:
        """max |f1(U) - G(U)/epsilon| over the samples."""
        if sample_states is None:
            sample_states = RelaxationService.sample_states(rp.structure.n_full)
        defect = 0.0
        for U in np.atleast_2d(np.asarray(sample_states, dtype=float)):
            defect = max(defect, float(np.max(np.abs(rp.full.rhs1(U) - rp.structure.G(U) / rp.epsilon))))
        return defect

    @staticmethod
    def limit_problem(rp: RelaxationProblem) -> SplitProblem:
        """Equilibrium system u' = C f0(E(u)), with a vanishing stiff part."""
        structure = rp.structure
        full = rp.full
        m = structure.m_cons
        C = structure.C

        def f0(u: np.ndarray) -> np.ndarray:
            return C @ full.rhs0(structure.E(u))

        def f1(u: np.ndarray) -> np.ndarray:
            return np.zeros(m)

        def jac1(u: np.ndarray) -> np.ndarray:
            return np.zeros((m, m))

        initial = None
        if full.initial_value is not None:
            initial = C @ full.initial_value
        return SplitProblem(label=f"{full.label}-limit", dim=m, f0=f0, f1=f1, jac1=jac1, initial_value=initial)

    @staticmethod
    def equilibrium_residual(rp: RelaxationProblem, trajectory: Trajectory) -> float:
        """max over the trajectory of |G(U_n)|."""
        values = trajectory.values
        if values.shape[1] != rp.structure.n_full:
            raise StructureError(f"Trajectory states have dimension {values.shape[1]}, expected {rp.structure.n_full}")
        return max(float(np.max(np.abs(rp.structure.G(U)))) for U in values)

    @staticmethod
    def well_prepared_data(rp: RelaxationProblem, u_conserved) -> np.ndarray:
        """E(u) exactly, i.e. well-prepared data with zero O(epsilon) slack."""
        u = np.atleast_1d(np.asarray(u_conserved, dtype=float))
        if u.shape != (rp.structure.m_cons,):
            raise StructureError(f"Conserved state must have dimension {rp.structure.m_cons}")
        return rp.structure.E(u)

    @staticmethod
    def project_trajectory(structure: RelaxationStructure, trajectory: Trajectory) -> Trajectory:
        """Conserved projection C U_n of a full-state trajectory."""
        if trajectory.values.shape[1] != structure.n_full:
            raise StructureError("Trajectory does not match the full dimension of the structure")
        return Trajectory(times=trajectory.times, values=trajectory.values @ structure.C.T)

    @staticmethod
    def projection_commutes(C, M, block) -> float:
        """max |C.(M x I_N) U - (M x I_M)(C.U)| for a stage block U (s rows of full states)."""
        C = np.asarray(C, dtype=float)
        M = np.asarray(M, dtype=float)
        U = np.asarray(block, dtype=float)
        if U.shape != (M.shape[1], C.shape[1]):
            raise StructureError(f"Block shape {U.shape} does not match M {M.shape} and C {C.shape}")
        return float(np.max(np.abs((M @ U) @ C.T - M @ (U @ C.T))))
