"""Newton Service - implicit stage solves w = rhs + dt*gamma*F1(w)"""

import warnings
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import linalg

from app.core.errors import NewtonError
from app.core.logger import setup_logger
from app.models.problem import SolverConfig

logger = setup_logger(name="newton_service")

DIVERGENCE_STREAK = 3
SLOW_CONTRACTION = 0.5


class NewtonResult(NamedTuple):
    state: np.ndarray
    iterations: int
    residual: float


class NewtonService:
    """Service for Newton iterations on single Peer stages"""

    @staticmethod
    def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, eps_scale: float) -> np.ndarray:
        """Forward-difference Jacobian with per-column increment eps_scale * (1 + |u_j|)."""
        u = np.asarray(u, dtype=float)
        base = np.asarray(f(u), dtype=float)
        jacobian = np.empty((base.size, u.size))
        for j in range(u.size):
            h = eps_scale * (1.0 + abs(u[j]))
            shifted = u.copy()
            shifted[j] += h
            jacobian[:, j] = (np.asarray(f(shifted), dtype=float) - base) / h
        return jacobian

    @staticmethod
    def _factor(jacobian: np.ndarray, dt_gamma: float, residual: float, iterations: int):
        matrix = np.eye(jacobian.shape[0]) - dt_gamma * jacobian
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu, piv = linalg.lu_factor(matrix)
        except ValueError:
            raise NewtonError("produced a non-finite iteration matrix", residual, iterations)
        if np.any(np.diag(lu) == 0.0):
            raise NewtonError("hit a singular iteration matrix", residual, iterations)
        return lu, piv

    @staticmethod
    def newton_solve_stage(
        rhs: np.ndarray,
        guess: np.ndarray,
        f1: Callable[[np.ndarray], np.ndarray],
        jacobian_of_f1: Optional[Callable[[np.ndarray], np.ndarray]],
        dt_gamma: float,
        config: SolverConfig,
    ) -> NewtonResult:
        """
        Solve g(w) = w - rhs - dt_gamma * F1(w) = 0.

        The iteration matrix I - dt_gamma * J is factored once and reused; it is
        refreshed when the residual contracts by less than a factor 0.5. At least
        one correction is applied; iteration stops once the residual or the last
        correction is below newton_abs_tol + newton_rel_tol * |w|.
        """
        if not dt_gamma > 0:
            raise NewtonError("requires dt_gamma > 0", float("nan"), 0)

        def jacobian(w: np.ndarray) -> np.ndarray:
            if jacobian_of_f1 is not None:
                return np.asarray(jacobian_of_f1(w), dtype=float)
            return NewtonService.fd_jacobian(f1, w, config.fd_jacobian_eps_scale)

        w = np.array(guess, dtype=float)
        lu_piv = NewtonService._factor(jacobian(w), dt_gamma, float("inf"), 0)
        previous = float("inf")
        growth = 0
        correction = float("inf")

        for iteration in range(config.newton_max_iter + 1):
            residual_vector = w - rhs - dt_gamma * np.asarray(f1(w), dtype=float)
            residual = float(np.max(np.abs(residual_vector)))
            tol = config.newton_abs_tol + config.newton_rel_tol * float(np.max(np.abs(w)))

            if not np.isfinite(residual):
                raise NewtonError("diverged to a non-finite residual", residual, iteration)
            if iteration > 0 and (residual <= tol or correction <= tol):
                return NewtonResult(w, iteration, residual)
            if iteration == config.newton_max_iter:
                raise NewtonError("exceeded max_iter", residual, iteration)

            if residual > previous:
                growth += 1
                if growth >= DIVERGENCE_STREAK:
                    raise NewtonError("diverged", residual, iteration)
            else:
                growth = 0

            if np.isfinite(previous) and residual > SLOW_CONTRACTION * previous:
                logger.warning("Slow Newton contraction (%.3e -> %.3e), refreshing Jacobian", previous, residual)
                lu_piv = NewtonService._factor(jacobian(w), dt_gamma, residual, iteration)

            previous = residual
            delta = linalg.lu_solve(lu_piv, -residual_vector)
            correction = float(np.max(np.abs(delta)))
            w = w + delta

        raise NewtonError("exceeded max_iter", previous, config.newton_max_iter)
