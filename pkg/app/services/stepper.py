"""Stepper Service - IMEX Peer steps, starting procedure and fixed-step integration"""

import logging
from typing import Optional

import numpy as np

from app.core.errors import NewtonError, NodeVectorError, PeerError, StartingProcedureError, StepFailure, StructureError
from app.core.logger import setup_logger
from app.models.coefficients import PeerCoefficients
from app.models.problem import SolverConfig, SplitProblem, StageBlock, Trajectory
from app.services.coefficients import CoefficientService
from app.services.newton import NewtonService

logger = setup_logger(name="stepper_service")

GRID_TOL = 1e-12
CACHE_TOL = 1e-12


def scaled_max_norm(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| / (1 + |b|) over all entries."""
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))


class StepperService:
    """Service for advancing split problems with IMEX Peer methods"""

    @staticmethod
    def evaluate_block(problem: SplitProblem, t_n: float, dt: float, stages) -> StageBlock:
        stages = np.atleast_2d(np.asarray(stages, dtype=float))
        if stages.shape[1] != problem.dim:
            raise StructureError(f"Stage vectors have dimension {stages.shape[1]}, problem {problem.label} expects {problem.dim}")
        return StageBlock(
            t_n=t_n,
            dt=dt,
            stages=stages,
            f0_values=np.array([problem.rhs0(w) for w in stages]),
            f1_values=np.array([problem.rhs1(w) for w in stages]),
        )

    @staticmethod
    def constant_block(problem: SplitProblem, state, s: int, dt: float, t_n: float = 0.0) -> StageBlock:
        """Block with every stage equal to ``state``."""
        return StepperService.evaluate_block(problem, t_n, dt, np.tile(np.asarray(state, dtype=float), (s, 1)))

    @staticmethod
    def _check_block(coeffs: PeerCoefficients, block: StageBlock):
        if block.s != coeffs.s:
            raise StructureError(f"Block holds {block.s} stages, method {coeffs.label} has {coeffs.s}")
        if np.min(coeffs.c) < 0.0:
            raise NodeVectorError(f"Method {coeffs.label} has negative nodes; the stepper needs c_i >= 0")

    @staticmethod
    def check_cached_values(problem: SplitProblem, block: StageBlock) -> float:
        """Largest scaled gap between the cached f0/f1 values and fresh evaluations."""
        fresh = StepperService.evaluate_block(problem, block.t_n, block.dt, block.stages)
        return max(
            scaled_max_norm(block.f0_values, fresh.f0_values),
            scaled_max_norm(block.f1_values, fresh.f1_values),
        )

    @staticmethod
    def _solve_stage(
        problem: SplitProblem,
        rhs: np.ndarray,
        guess: np.ndarray,
        fallback: np.ndarray,
        dt_gamma: float,
        config: SolverConfig,
        stage: int,
    ):
        """Newton from the predicted guess, retried once from the last old stage."""
        try:
            return NewtonService.newton_solve_stage(rhs, guess, problem.rhs1, problem.jac1, dt_gamma, config)
        except NewtonError as e:
            if np.array_equal(guess, fallback):
                raise StepFailure(stage=stage, residual=e.residual, reason=e.reason)
            logger.warning("Stage %d: Newton %s from the predictor, retrying from w_{n,s}", stage, e.reason)
        try:
            return NewtonService.newton_solve_stage(rhs, fallback, problem.rhs1, problem.jac1, dt_gamma, config)
        except NewtonError as e:
            raise StepFailure(stage=stage, residual=e.residual, reason=e.reason)

    @staticmethod
    def step(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        block: StageBlock,
        config: SolverConfig,
        predictor: Optional[np.ndarray] = None,
    ) -> StageBlock:
        """
        One step w_n -> w_{n+1}. Stages are solved in index order; only the
        diagonal gamma couples implicitly, everything else is already known.
        """
        StepperService._check_block(coeffs, block)
        if logger.isEnabledFor(logging.DEBUG):
            gap = StepperService.check_cached_values(problem, block)
            if gap > CACHE_TOL:
                raise StructureError(f"Cached right-hand sides of the block at t={block.t_n} are stale (gap {gap:.3e})")
        dt = block.dt
        if predictor is None:
            predictor = CoefficientService.extrapolation_matrix(coeffs.c)

        W, F0, F1 = block.stages, block.f0_values, block.f1_values
        known = coeffs.P @ W + dt * (coeffs.Qhat @ F0) + dt * (coeffs.Q @ F1)
        guesses = predictor @ W

        s, m = W.shape
        new_stages = np.empty((s, m))
        new_f0 = np.empty((s, m))
        new_f1 = np.empty((s, m))
        for i in range(s):
            rhs = known[i] + dt * (coeffs.Rhat[i, :i] @ new_f0[:i]) + dt * (coeffs.R[i, :i] @ new_f1[:i])
            result = StepperService._solve_stage(problem, rhs, guesses[i], W[-1], dt * coeffs.gamma, config, i + 1)
            new_stages[i] = result.state
            new_f0[i] = problem.rhs0(result.state)
            new_f1[i] = problem.rhs1(result.state)

        return StageBlock(t_n=block.t_n + dt, dt=dt, stages=new_stages, f0_values=new_f0, f1_values=new_f1)

    @staticmethod
    def explicit_step(coeffs: PeerCoefficients, problem: SplitProblem, block: StageBlock) -> StageBlock:
        """
        Explicit Peer step w_{n+1} = P w_n + dt Qhat F(w_n) + dt Rhat F(w_{n+1})
        with F = f0 + f1; this is what the IMEX method reduces to when f1 vanishes.
        """
        StepperService._check_block(coeffs, block)
        dt = block.dt
        F = block.f0_values + block.f1_values
        known = coeffs.P @ block.stages + dt * (coeffs.Qhat @ F)

        new_stages = np.empty_like(block.stages)
        new_f0 = np.empty_like(block.stages)
        new_f1 = np.empty_like(block.stages)
        for i in range(coeffs.s):
            new_stages[i] = known[i] + dt * (coeffs.Rhat[i, :i] @ (new_f0[:i] + new_f1[:i]))
            new_f0[i] = problem.rhs0(new_stages[i])
            new_f1[i] = problem.rhs1(new_stages[i])
        return StageBlock(t_n=block.t_n + dt, dt=dt, stages=new_stages, f0_values=new_f0, f1_values=new_f1)

    @staticmethod
    def imex_euler(problem: SplitProblem, u0, duration: float, substeps: int, config: SolverConfig) -> np.ndarray:
        """K substeps of u+ = u + h f0(u) + h f1(u+) over ``duration``."""
        h = duration / substeps
        u = np.array(u0, dtype=float)
        for _ in range(substeps):
            rhs = u + h * problem.rhs0(u)
            u = NewtonService.newton_solve_stage(rhs, u, problem.rhs1, problem.jac1, h, config).state
        return u

    @staticmethod
    def starting_value(problem: SplitProblem, u0, duration: float, config: SolverConfig) -> np.ndarray:
        """
        Approximate u(duration) by extrapolated IMEX Euler.
        The substep count doubles from starting_substeps_initial; a Richardson table
        raises the order by one per level until two successive diagonal entries
        agree to starting_tol in the scaled max norm.
        """
        inner = config.for_starting_procedure()
        substeps = config.starting_substeps_initial
        table = [[StepperService.imex_euler(problem, u0, duration, substeps, inner)]]
        for level in range(1, config.starting_max_doublings + 1):
            substeps *= 2
            row = [StepperService.imex_euler(problem, u0, duration, substeps, inner)]
            for j in range(1, level + 1):
                row.append(row[j - 1] + (row[j - 1] - table[level - 1][j - 1]) / (2 ** j - 1))
            table.append(row)
            change = scaled_max_norm(table[level - 1][level - 1], row[level])
            if change <= config.starting_tol:
                logger.debug("Starting value settled with %d substeps (change %.3e)", substeps, change)
                return row[level]
        raise StartingProcedureError(
            f"Starting procedure for {problem.label} did not settle after "
            f"{config.starting_max_doublings} doublings (last change {change:.3e})"
        )

    @staticmethod
    def initialize_stages(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        u0,
        dt: float,
        config: SolverConfig,
        t0: float = 0.0,
    ) -> StageBlock:
        """Starting block anchored at t0: stage i approximates u(t0 + c_i dt)."""
        if np.min(coeffs.c) < 0.0 or np.max(coeffs.c) > 1.0:
            raise NodeVectorError("The starting procedure needs nodes in [0, 1]")
        u0 = np.asarray(u0, dtype=float)
        # the closed form only applies to the trajectory through its own initial value
        use_exact = problem.exact is not None and scaled_max_norm(u0, np.asarray(problem.exact(t0), dtype=float)) <= 1e-14
        stages = []
        for i, c_i in enumerate(coeffs.c):
            if c_i == 0.0:
                stages.append(u0.copy())
            elif use_exact:
                stages.append(np.asarray(problem.exact(t0 + c_i * dt), dtype=float))
            else:
                try:
                    stages.append(StepperService.starting_value(problem, u0, c_i * dt, config))
                except NewtonError as e:
                    raise StartingProcedureError(f"Starting procedure failed in stage {i + 1}: {e}")
        return StepperService.evaluate_block(problem, t0, dt, np.array(stages))

    @staticmethod
    def integrate(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        u0,
        t_end: float,
        dt: float,
        config: SolverConfig,
        t0: float = 0.0,
        start_block: Optional[StageBlock] = None,
        explicit: bool = False,
    ) -> Trajectory:
        """
        Integrate with constant dt and record (t_n + dt, w_{n,s}) for every block,
        the starting block included. A given ``start_block`` replaces the starting
        procedure and sets t0 to its anchor.
        """
        if start_block is not None:
            t0 = start_block.t_n
            dt = start_block.dt
        if not t_end > t0:
            raise PeerError(f"t_end ({t_end}) must exceed the start time ({t0})")
        if not dt > 0:
            raise PeerError("dt must be positive")
        span = t_end - t0
        n_values = int(round(span / dt))
        if n_values < 1 or abs(n_values * dt - span) > GRID_TOL * max(1.0, abs(span)):
            raise PeerError(f"dt={dt} does not divide the interval [{t0}, {t_end}] into whole steps")

        logger.info("Integrating %s with %s: dt=%g, %d steps", problem.label, coeffs.label, dt, n_values - 1)
        block = start_block or StepperService.initialize_stages(coeffs, problem, u0, dt, config, t0=t0)
        StepperService._check_block(coeffs, block)
        predictor = CoefficientService.extrapolation_matrix(coeffs.c)

        times = t0 + dt * np.arange(1, n_values + 1)
        values = np.empty((n_values, problem.dim))
        values[0] = block.last
        for n in range(1, n_values):
            try:
                if explicit:
                    block = StepperService.explicit_step(coeffs, problem, block)
                else:
                    block = StepperService.step(coeffs, problem, block, config, predictor=predictor)
            except StepFailure as e:
                failure = e.at_step(n)
                logger.error("Integration of %s failed: %s", problem.label, failure)
                raise failure
            values[n] = block.last
            logger.debug("step %d: t=%.6g |w_s|=%.6g", n, times[n], np.max(np.abs(block.last)))

        if not np.all(np.isfinite(values)):
            raise StepFailure(stage=coeffs.s, residual=float("inf"), reason="non-finite solution")
        return Trajectory(times=times, values=values)
