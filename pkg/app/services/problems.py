"""Problem Catalog - bundled benchmark problems"""

import math
from typing import Optional

import numpy as np
from scipy import linalg

from app.core.errors import PeerError, StructureError
from app.core.logger import setup_logger
from app.models.problem import SplitProblem
from app.models.relaxation import CatalogEntry, RelaxationProblem, RelaxationStructure
from app.models.report import ProblemSpec
from app.services.relaxation import RelaxationService

logger = setup_logger(name="problem_catalog")

EQUILIBRIUM_TOL = 1e-13
STRUCTURE_TOL = 1e-12


def _scalar(u: np.ndarray) -> float:
    return float(np.asarray(u, dtype=float).reshape(-1)[0])


class ProblemCatalog:
    """Named constructors for the benchmark problems; every entry is self-checked on construction"""

    NAMES = ("wb", "ap", "poly", "jinxin")

    @staticmethod
    def _checked_problem(problem: SplitProblem) -> SplitProblem:
        defect = problem.equilibrium_defect()
        if defect is not None and defect > EQUILIBRIUM_TOL:
            raise StructureError(f"{problem.label}: equilibrium defect {defect:.3e} exceeds {EQUILIBRIUM_TOL}")
        return problem

    @staticmethod
    def _checked_relaxation(rp: RelaxationProblem) -> RelaxationProblem:
        check = RelaxationService.check_structure(rp.structure)
        if not check.conforms(STRUCTURE_TOL):
            raise StructureError(f"{rp.full.label}: relaxation structure defects {check.model_dump()}")
        scale = max(1.0, max(float(np.max(np.abs(rp.full.rhs1(U))))
                             for U in RelaxationService.sample_states(rp.structure.n_full, count=8)))
        if RelaxationService.scaling_defect(rp) > EQUILIBRIUM_TOL * scale:
            raise StructureError(f"{rp.full.label}: f1 is not G / epsilon")
        return rp

    @staticmethod
    def wb_boscarino_pareschi() -> SplitProblem:
        """Linear damped oscillator with unique equilibrium [1, 0]."""
        equilibrium = np.array([1.0, 0.0])
        initial = np.array([0.0, 1.0])
        system = np.array([[0.0, 1.0], [-1.0, -1.0]])

        def f0(u: np.ndarray) -> np.ndarray:
            return np.array([u[1], -u[0]])

        def f1(u: np.ndarray) -> np.ndarray:
            return np.array([0.0, 1.0 - u[1]])

        def jac1(u: np.ndarray) -> np.ndarray:
            return np.array([[0.0, 0.0], [0.0, -1.0]])

        def exact(t: float) -> np.ndarray:
            return equilibrium + linalg.expm(system * t) @ (initial - equilibrium)

        return ProblemCatalog._checked_problem(SplitProblem(
            label="wb",
            dim=2,
            f0=f0,
            f1=f1,
            jac1=jac1,
            equilibrium=equilibrium,
            initial_value=initial,
            exact=exact,
        ))

    @staticmethod
    def _ap_structure(source_scale: float) -> RelaxationStructure:
        def source(U: np.ndarray) -> np.ndarray:
            return np.array([0.0, (math.sin(U[0]) - U[1]) / source_scale])

        def equilibrium_map(u: np.ndarray) -> np.ndarray:
            value = _scalar(u)
            return np.array([value, math.sin(value)])

        return RelaxationStructure(
            n_full=2,
            m_cons=1,
            C=np.array([[1.0, 0.0]]),
            source=source,
            equilibrium_map=equilibrium_map,
        )

    @staticmethod
    def _ap_problem(label: str, epsilon: float, folded: bool) -> RelaxationProblem:
        if not epsilon > 0:
            raise PeerError(f"epsilon must be positive, got {epsilon}")
        stiffness = 1.0 if folded else epsilon

        def f0(U: np.ndarray) -> np.ndarray:
            return np.array([-U[1], U[0]])

        def f1(U: np.ndarray) -> np.ndarray:
            return np.array([0.0, (math.sin(U[0]) - U[1]) / epsilon])

        def jac1(U: np.ndarray) -> np.ndarray:
            return np.array([[0.0, 0.0], [math.cos(U[0]) / epsilon, -1.0 / epsilon]])

        full = SplitProblem(
            label=label,
            dim=2,
            f0=f0,
            f1=f1,
            jac1=jac1,
            initial_value=np.array([math.pi / 2, 1.0]),
        )
        structure = ProblemCatalog._ap_structure(epsilon if folded else 1.0)
        return ProblemCatalog._checked_relaxation(
            RelaxationProblem(full=full, structure=structure, epsilon=stiffness)
        )

    @staticmethod
    def ap_pareschi_russo(epsilon: float) -> RelaxationProblem:
        """Stiff relaxation ODE with equilibrium manifold U2 = sin U1 and limit u' = -sin u."""
        return ProblemCatalog._ap_problem("ap", epsilon, folded=False)

    @staticmethod
    def ap_pareschi_russo_folded(epsilon: float) -> RelaxationProblem:
        """Same system with epsilon folded into the source and unit stiffness scaling."""
        return ProblemCatalog._ap_problem("ap-folded", epsilon, folded=True)

    @staticmethod
    def polynomial_exactness_problem(degree: int, alpha: float = 0.3) -> SplitProblem:
        """State (tau, y) with exact solution (t, t^degree); the forcing is split alpha : 1 - alpha."""
        if degree < 0:
            raise PeerError("degree must be nonnegative")
        if not 0.0 <= alpha <= 1.0:
            raise PeerError("alpha must lie in [0, 1]")

        def q(tau: float) -> float:
            return degree * tau ** (degree - 1) if degree > 0 else 0.0

        def q_prime(tau: float) -> float:
            return degree * (degree - 1) * tau ** (degree - 2) if degree > 1 else 0.0

        def f0(u: np.ndarray) -> np.ndarray:
            return np.array([1.0, alpha * q(u[0])])

        def f1(u: np.ndarray) -> np.ndarray:
            return np.array([0.0, (1.0 - alpha) * q(u[0])])

        def jac1(u: np.ndarray) -> np.ndarray:
            return np.array([[0.0, 0.0], [(1.0 - alpha) * q_prime(u[0]), 0.0]])

        def exact(t: float) -> np.ndarray:
            return np.array([t, t ** degree])

        return SplitProblem(
            label=f"poly{degree}",
            dim=2,
            f0=f0,
            f1=f1,
            jac1=jac1,
            initial_value=exact(0.0),
            exact=exact,
        )

    @staticmethod
    def jin_xin_demo(epsilon: float, cells: int = 16, b: float = 0.5, a: float = 1.0) -> RelaxationProblem:
        """
        Periodic upwind semi-discretization of
            u_t + v_x = 0,  v_t + a u_x = (b u - v) / epsilon
        on [0, 1], with well-prepared data u = sin(2 pi x), v = b u.

        The interface flux carries Rusanov-type viscosity with speed sqrt(a). It
        survives the relaxation limit as a diffusion term of size sqrt(a) dx / 2,
        so at b = 0 the limit system is a discrete heat equation, not u_t = 0.
        """
        if not epsilon > 0:
            raise PeerError(f"epsilon must be positive, got {epsilon}")
        if cells < 8:
            raise PeerError("Jin-Xin demo needs at least 8 cells")
        if not a > b * b:
            raise PeerError(f"Subcharacteristic condition a > b^2 violated (a={a}, b={b})")

        dx = 1.0 / cells
        speed = math.sqrt(a)
        x = (np.arange(cells) + 0.5) * dx
        identity = np.eye(cells)
        zeros = np.zeros((cells, cells))
        stiff_jacobian = np.block([[zeros, zeros], [b * identity / epsilon, -identity / epsilon]])

        def f0(U: np.ndarray) -> np.ndarray:
            u, v = U[:cells], U[cells:]
            u_right, v_right = np.roll(u, -1), np.roll(v, -1)
            # characteristic upwind flux at the interface i+1/2
            flux_u = 0.5 * (v + v_right) - 0.5 * speed * (u_right - u)
            flux_v = 0.5 * a * (u + u_right) - 0.5 * speed * (v_right - v)
            return -np.concatenate([flux_u - np.roll(flux_u, 1), flux_v - np.roll(flux_v, 1)]) / dx

        def f1(U: np.ndarray) -> np.ndarray:
            return np.concatenate([np.zeros(cells), (b * U[:cells] - U[cells:]) / epsilon])

        def jac1(U: np.ndarray) -> np.ndarray:
            return stiff_jacobian

        def source(U: np.ndarray) -> np.ndarray:
            return np.concatenate([np.zeros(cells), b * U[:cells] - U[cells:]])

        def equilibrium_map(u: np.ndarray) -> np.ndarray:
            u = np.asarray(u, dtype=float)
            return np.concatenate([u, b * u])

        initial_u = np.sin(2.0 * np.pi * x)
        full = SplitProblem(
            label="jinxin",
            dim=2 * cells,
            f0=f0,
            f1=f1,
            jac1=jac1,
            initial_value=equilibrium_map(initial_u),
        )
        structure = RelaxationStructure(
            n_full=2 * cells,
            m_cons=cells,
            C=np.hstack([identity, zeros]),
            source=source,
            equilibrium_map=equilibrium_map,
        )
        return ProblemCatalog._checked_relaxation(
            RelaxationProblem(full=full, structure=structure, epsilon=epsilon)
        )

    @staticmethod
    def build(spec: ProblemSpec) -> CatalogEntry:
        """Resolve a catalog name (wb, ap, poly, jinxin) with its parameters."""
        relaxation: Optional[RelaxationProblem] = None
        if spec.name == "wb":
            problem = ProblemCatalog.wb_boscarino_pareschi()
        elif spec.name == "ap":
            relaxation = ProblemCatalog.ap_pareschi_russo(spec.epsilon if spec.epsilon is not None else 1.0)
            problem = relaxation.full
        elif spec.name == "poly":
            problem = ProblemCatalog.polynomial_exactness_problem(
                spec.degree if spec.degree is not None else 2, spec.alpha
            )
        elif spec.name == "jinxin":
            relaxation = ProblemCatalog.jin_xin_demo(
                spec.epsilon if spec.epsilon is not None else 1e-8,
                cells=spec.cells if spec.cells is not None else 16,
            )
            problem = relaxation.full
        else:
            raise PeerError(f"Unknown problem: {spec.name}")

        logger.info("Built problem %s (dim=%d)", problem.label, problem.dim)
        return CatalogEntry(
            name=spec.name,
            problem=problem,
            relaxation=relaxation,
            initial_value=problem.initial_value,
        )
