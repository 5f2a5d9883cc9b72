"""Harness Service - well-balanced and asymptotic-preserving tests, convergence studies"""

from typing import Callable, List, Optional, Sequence

import numpy as np

from app.core.errors import FitError, GridMismatchError, NumericalFailure, PeerError, ReferenceSolutionError
from app.core.logger import setup_logger
from app.models.coefficients import PeerCoefficients
from app.models.problem import SolverConfig, SplitProblem, Trajectory
from app.models.relaxation import RelaxationProblem
from app.models.report import (
    AsymptoticEntry,
    AsymptoticReport,
    ConvergenceEntry,
    ConvergenceReport,
    PerturbationResult,
    RunSpec,
    WellBalancedReport,
)
from app.repositories.coefficients import CoefficientRepository
from app.services.coefficients import CoefficientService
from app.services.problems import ProblemCatalog
from app.services.relaxation import RelaxationService
from app.services.stepper import StepperService

logger = setup_logger(name="harness_service")

BUILTIN_PREFIX = "builtin:s"
REFERENCE_STAGES = 4
REFERENCE_MAX_DOUBLINGS = 10
TIME_TOL = 1e-9


class HarnessService:
    """Service for reproducing the benchmark experiments"""

    @staticmethod
    def resolve_method(source: str) -> PeerCoefficients:
        """``builtin:sK`` or the path of a coefficient file."""
        if source.startswith(BUILTIN_PREFIX):
            try:
                stages = int(source[len(BUILTIN_PREFIX):])
            except ValueError:
                raise PeerError(f"Invalid builtin method: {source}")
            return CoefficientService.builtin_method(stages)
        return CoefficientRepository.load_coefficients(source)

    @staticmethod
    def _times_match(a: np.ndarray, b: np.ndarray) -> bool:
        scale = max(1.0, float(np.max(np.abs(b)))) if b.size else 1.0
        return a.shape == b.shape and bool(np.all(np.abs(a - b) <= TIME_TOL * scale))

    @staticmethod
    def scaled_max_error(approx: Trajectory, reference: Trajectory) -> float:
        """max over steps and components of |U_i - u_i| / (1 + |u_i|)."""
        if not HarnessService._times_match(approx.times, reference.times):
            raise GridMismatchError(
                f"Trajectories do not share a time grid ({len(approx)} vs {len(reference)} points)"
            )
        if approx.values.shape != reference.values.shape:
            raise GridMismatchError("Trajectories have different state dimensions")
        return float(np.max(np.abs(approx.values - reference.values) / (1.0 + np.abs(reference.values))))

    @staticmethod
    def restrict(reference: Trajectory, times: np.ndarray) -> Trajectory:
        """Reference values at the given grid points; every point must lie on the reference grid."""
        times = np.asarray(times, dtype=float)
        tol = TIME_TOL * max(1.0, float(np.max(np.abs(reference.times))))
        index = np.clip(np.searchsorted(reference.times, times - tol), 0, len(reference) - 1)
        if np.any(np.abs(reference.times[index] - times) > tol):
            raise GridMismatchError("Requested times are not on the reference grid")
        return Trajectory(times=times, values=reference.values[index])

    @staticmethod
    def reference_solution(
        problem: SplitProblem,
        u0,
        t_grid: Sequence[float],
        tol: float = 1e-10,
        config: Optional[SolverConfig] = None,
        t0: float = 0.0,
    ) -> Trajectory:
        """
        Self-refined reference on ``t_grid`` (uniform, starting one step after t0).
        Runs builtin:s4 at dt_min / 2^k for k = 1, 2, ... until two successive
        refinements agree to ``tol`` in the scaled max norm.
        """
        if tol < 1e-13:
            raise PeerError("Reference tolerance must be at least 1e-13")
        config = config or SolverConfig()
        grid = np.asarray(t_grid, dtype=float)
        dt_min = float(np.min(np.diff(np.concatenate([[t0], grid]))))
        method = CoefficientService.builtin_method(REFERENCE_STAGES)

        previous: Optional[Trajectory] = None
        for k in range(1, REFERENCE_MAX_DOUBLINGS + 1):
            dt_ref = dt_min / 2 ** k
            fine = StepperService.integrate(method, problem, u0, grid[-1], dt_ref, config, t0=t0)
            current = HarnessService.restrict(fine, grid)
            if previous is not None:
                change = HarnessService.scaled_max_error(previous, current)
                logger.debug("Reference for %s at dt=%g changed by %.3e", problem.label, dt_ref, change)
                if change <= tol:
                    logger.info("Reference for %s settled at dt=%g", problem.label, dt_ref)
                    return current
            previous = current
        raise ReferenceSolutionError(
            f"Reference for {problem.label} did not settle within {REFERENCE_MAX_DOUBLINGS} doublings"
        )

    @staticmethod
    def fit_order(dts: Sequence[float], errors: Sequence[float], min_points: int = 3) -> float:
        """Least-squares slope of log(error) against log(dt)."""
        x = np.asarray(dts, dtype=float)
        y = np.asarray(errors, dtype=float)
        if x.size != y.size:
            raise FitError("Step sizes and errors differ in length")
        if x.size < min_points:
            raise FitError(f"Order fit needs at least {min_points} successful entries, got {x.size}")
        if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
            raise FitError("Order fit needs positive finite step sizes and errors")
        return float(np.polyfit(np.log(x), np.log(y), 1)[0])

    @staticmethod
    def convergence_sweep(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        u0,
        dts: Sequence[float],
        t_end: float,
        config: Optional[SolverConfig] = None,
        reference: Optional[Trajectory] = None,
        reference_tol: float = 1e-10,
        epsilon: Optional[float] = None,
        t0: float = 0.0,
    ) -> ConvergenceReport:
        """Errors per step size against a reference on the finest grid, plus the fitted order."""
        config = config or SolverConfig()
        dts = [float(dt) for dt in dts]
        if len(dts) < 3:
            raise PeerError("A convergence study needs at least 3 step sizes")
        if any(b >= a for a, b in zip(dts, dts[1:])):
            raise PeerError("Step sizes must be strictly decreasing")

        description = "supplied"
        if reference is None:
            n_fine = int(round((t_end - t0) / dts[-1]))
            grid = t0 + dts[-1] * np.arange(1, n_fine + 1)
            reference = HarnessService.reference_solution(problem, u0, grid, reference_tol, config, t0=t0)
            description = f"builtin:s{REFERENCE_STAGES} self-refined to {reference_tol:g}"

        entries: List[ConvergenceEntry] = []
        for dt in dts:
            try:
                trajectory = StepperService.integrate(coeffs, problem, u0, t_end, dt, config, t0=t0)
                error = HarnessService.scaled_max_error(
                    trajectory, HarnessService.restrict(reference, trajectory.times)
                )
                entries.append(ConvergenceEntry(dt=dt, error=error))
                logger.info("%s on %s: dt=%g error=%.3e", coeffs.label, problem.label, dt, error)
            except NumericalFailure as e:
                logger.warning("Sweep entry dt=%g failed: %s", dt, e)
                entries.append(ConvergenceEntry(dt=dt, failure=str(e)))

        successful = [entry for entry in entries if entry.succeeded]
        order = HarnessService.fit_order([e.dt for e in successful], [e.error for e in successful])
        logger.info("Fitted order %.3f for %s on %s", order, coeffs.label, problem.label)
        return ConvergenceReport(
            method=coeffs.label,
            problem=problem.label,
            epsilon=epsilon,
            entries=entries,
            fitted_order=order,
            reference=description,
        )

    @staticmethod
    def convergence_study(spec: RunSpec) -> ConvergenceReport:
        coeffs = HarnessService.resolve_method(spec.method)
        entry = ProblemCatalog.build(spec.problem)
        return HarnessService.convergence_sweep(
            coeffs,
            entry.problem,
            entry.initial_value,
            spec.step_sizes(),
            spec.t_end,
            spec.config,
            reference_tol=spec.reference_tol,
            epsilon=entry.relaxation.epsilon if entry.relaxation is not None else spec.problem.epsilon,
        )

    @staticmethod
    def equilibrium_drift(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        dt: float,
        n_steps: int,
        config: Optional[SolverConfig] = None,
    ) -> float:
        """max ||w_{n+1} - w_n|| over n_steps from the constant equilibrium block."""
        if problem.equilibrium is None:
            raise PeerError(f"Problem {problem.label} has no equilibrium")
        config = config or SolverConfig()
        block = StepperService.constant_block(problem, problem.equilibrium, coeffs.s, dt)
        predictor = CoefficientService.extrapolation_matrix(coeffs.c)
        drift = 0.0
        for _ in range(n_steps):
            following = StepperService.step(coeffs, problem, block, config, predictor=predictor)
            drift = max(drift, float(np.max(np.abs(following.stages - block.stages))))
            block = following
        return drift

    @staticmethod
    def perturbed_drift(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        epsilon: float,
        dt: float,
        config: Optional[SolverConfig] = None,
    ) -> float:
        """One-step drift after shifting every non-last equilibrium stage by epsilon in each component."""
        if problem.equilibrium is None:
            raise PeerError(f"Problem {problem.label} has no equilibrium")
        config = config or SolverConfig()
        stages = np.tile(problem.equilibrium, (coeffs.s, 1))
        stages[:-1] += epsilon
        block = StepperService.evaluate_block(problem, 0.0, dt, stages)
        following = StepperService.step(coeffs, problem, block, config)
        return float(np.max(np.abs(following.stages - stages)))

    @staticmethod
    def wb_test(
        coeffs: PeerCoefficients,
        problem: SplitProblem,
        n_steps: int = 100,
        dt: float = 1.0,
        perturbations: Sequence[float] = (1e-3, 1e-6),
        dynamic_t_end: float = 15.0,
        config: Optional[SolverConfig] = None,
    ) -> WellBalancedReport:
        """Exact equilibrium drift, O(epsilon) perturbation ratios and decay from the default initial value."""
        if problem.equilibrium is None:
            raise PeerError(f"Problem {problem.label} has no equilibrium")
        if problem.initial_value is None:
            raise PeerError(f"Problem {problem.label} has no initial value for the dynamic test")
        config = config or SolverConfig()

        exact_drift = HarnessService.equilibrium_drift(coeffs, problem, dt, n_steps, config)
        results = []
        for epsilon in perturbations:
            drift = HarnessService.perturbed_drift(coeffs, problem, epsilon, dt, config)
            results.append(PerturbationResult(epsilon=epsilon, drift=drift, ratio=drift / epsilon))

        trajectory = StepperService.integrate(coeffs, problem, problem.initial_value, dynamic_t_end, dt, config)
        distances = np.max(np.abs(trajectory.values - problem.equilibrium), axis=1)

        report = WellBalancedReport(
            method=coeffs.label,
            problem=problem.label,
            dt=dt,
            n_steps=n_steps,
            exact_drift=exact_drift,
            perturbations=results,
            dynamic_t_end=dynamic_t_end,
            dynamic_distance=float(distances[-1]),
            dynamic_tail=[float(d) for d in distances[-5:]],
        )
        logger.info({"event": "wb_test", "method": coeffs.label, "exact_drift": exact_drift,
                     "ratios": [r.ratio for r in results], "distance": report.dynamic_distance})
        return report

    @staticmethod
    def ap_test(
        coeffs: PeerCoefficients,
        relaxation: Callable[[float], RelaxationProblem],
        epsilons: Sequence[float],
        dt: float = 0.0125,
        t_end: float = 5.0,
        config: Optional[SolverConfig] = None,
    ) -> AsymptoticReport:
        """
        For each epsilon: integrate the full system from well-prepared data, measure
        the equilibrium residual and compare the conserved projection with the
        explicit method on the limit problem.
        """
        if not epsilons:
            raise PeerError("ap_test needs at least one epsilon")
        config = config or SolverConfig()

        first = relaxation(epsilons[0])
        if first.full.initial_value is None:
            raise PeerError(f"Problem {first.full.label} has no initial value")
        u_conserved = first.structure.C @ first.full.initial_value
        limit = RelaxationService.limit_problem(first)
        limit_trajectory = StepperService.integrate(coeffs, limit, u_conserved, t_end, dt, config, explicit=True)

        entries = []
        for epsilon in epsilons:
            rp = first if epsilon == epsilons[0] else relaxation(epsilon)
            u0 = RelaxationService.well_prepared_data(rp, u_conserved)
            trajectory = StepperService.integrate(coeffs, rp.full, u0, t_end, dt, config)
            residual = RelaxationService.equilibrium_residual(rp, trajectory)
            projected = RelaxationService.project_trajectory(rp.structure, trajectory)
            gap = HarnessService.scaled_max_error(projected, limit_trajectory)
            entries.append(AsymptoticEntry(epsilon=epsilon, equilibrium_residual=residual, projection_gap=gap))
            logger.info("AP test eps=%g: residual %.3e, projection gap %.3e", epsilon, residual, gap)

        slope = None
        if len(entries) >= 2:
            slope = HarnessService.fit_order(
                [e.epsilon for e in entries], [e.equilibrium_residual for e in entries], min_points=2
            )
        return AsymptoticReport(
            method=coeffs.label,
            problem=first.full.label,
            dt=dt,
            t_end=t_end,
            entries=entries,
            residual_slope=slope,
        )
