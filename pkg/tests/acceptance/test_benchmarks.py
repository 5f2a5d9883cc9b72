"""End-to-end benchmark checks: well-balancing, convergence order, asymptotic preservation"""

import numpy as np
import pytest

from app.models.problem import SolverConfig
from app.services.coefficients import CoefficientService
from app.services.harness import HarnessService
from app.services.problems import ProblemCatalog
from app.services.relaxation import RelaxationService
from app.services.stepper import StepperService

AP_DTS = [0.2 / 2 ** i for i in range(5)]
AP_T_END = 5.0


@pytest.fixture(scope="module")
def ap_references():
    """Self-refined references on the finest sweep grid, shared by every method."""
    grid = AP_DTS[-1] * np.arange(1, int(round(AP_T_END / AP_DTS[-1])) + 1)
    references = {}
    for epsilon in (1.0, 1e-5):
        problem = ProblemCatalog.ap_pareschi_russo(epsilon).full
        references[epsilon] = HarnessService.reference_solution(
            problem, problem.initial_value, grid, tol=1e-10, config=SolverConfig()
        )
    return references


class TestWellBalancedBenchmark:
    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    @pytest.mark.parametrize("dt", [0.1, 0.5, 1.0])
    def test_equilibrium_is_kept_for_any_step_size(self, builtin_methods, wb_problem, solver_config, s, dt):
        drift = HarnessService.equilibrium_drift(builtin_methods[s], wb_problem, dt, 100, solver_config)
        assert drift <= 10 * solver_config.newton_abs_tol

    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    def test_single_large_step_keeps_equilibrium(self, builtin_methods, wb_problem, solver_config, s):
        drift = HarnessService.equilibrium_drift(builtin_methods[s], wb_problem, 10.0, 1, solver_config)
        assert drift <= 10 * solver_config.newton_abs_tol

    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    @pytest.mark.parametrize("epsilon", [1e-3, 1e-6])
    def test_perturbed_equilibrium_drifts_by_order_epsilon(self, builtin_methods, wb_problem, s, epsilon):
        assert HarnessService.perturbed_drift(builtin_methods[s], wb_problem, epsilon, 1.0) <= 50 * epsilon

    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_dynamics_settle_towards_equilibrium(self, builtin_methods, wb_problem, s):
        report = HarnessService.wb_test(builtin_methods[s], wb_problem)
        assert report.dynamic_distance <= 1e-2
        assert report.tail_non_increasing


@pytest.mark.slow
class TestConvergenceBenchmark:
    @pytest.mark.parametrize("epsilon", [1.0, 1e-5])
    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_builtin_order(self, builtin_methods, ap_references, epsilon, s):
        problem = ProblemCatalog.ap_pareschi_russo(epsilon).full
        report = HarnessService.convergence_sweep(
            builtin_methods[s],
            problem,
            problem.initial_value,
            AP_DTS,
            AP_T_END,
            reference=ap_references[epsilon],
            epsilon=epsilon,
        )
        assert all(entry.succeeded for entry in report.entries)
        assert report.fitted_order >= s - 0.2

    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_order_s_construction(self, ap_references, s):
        method = CoefficientService.construct_order_s(np.arange(1, s + 1) / s)
        problem = ProblemCatalog.ap_pareschi_russo(1.0).full
        report = HarnessService.convergence_sweep(
            method, problem, problem.initial_value, AP_DTS, AP_T_END, reference=ap_references[1.0]
        )
        assert report.fitted_order >= s - 0.2


class TestAsymptoticPreservingBenchmark:
    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_limit_equivalence(self, builtin_methods, s):
        report = HarnessService.ap_test(builtin_methods[s], ProblemCatalog.ap_pareschi_russo, [1e-8])
        entry = report.entries[0]
        assert entry.projection_gap <= 1e-5
        assert entry.equilibrium_residual <= 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("s", [2, 3])
    def test_residual_scales_with_epsilon(self, builtin_methods, s):
        report = HarnessService.ap_test(
            builtin_methods[s], ProblemCatalog.ap_pareschi_russo, [1e-4, 1e-5, 1e-6, 1e-7]
        )
        assert report.residual_slope == pytest.approx(1.0, abs=0.3)

    def test_projection_gap_shrinks_with_epsilon(self, builtin_methods):
        report = HarnessService.ap_test(
            builtin_methods[2], ProblemCatalog.ap_pareschi_russo, [1e-2, 1e-4, 1e-6, 1e-8]
        )
        gaps = [entry.projection_gap for entry in report.entries]
        assert all(following <= 3 * previous for previous, following in zip(gaps, gaps[1:]))
        assert gaps[-1] < gaps[0]

    def test_ill_prepared_data_relaxes_onto_the_manifold(self, builtin_methods, solver_config):
        epsilon = 1e-8
        rp = ProblemCatalog.ap_pareschi_russo(epsilon)
        U = np.array([np.pi / 2, 1.5])
        assert abs(np.sin(U[0]) - U[1]) == pytest.approx(0.5)

        trajectory = StepperService.integrate(builtin_methods[2], rp.full, U, 0.05, 0.0125, solver_config)

        first = trajectory.values[0]
        assert abs(np.sin(first[0]) - first[1]) <= 10 * epsilon

    def test_jin_xin_structure_and_limit(self, builtin_methods):
        rp = ProblemCatalog.jin_xin_demo(1e-8, cells=16)
        assert RelaxationService.check_structure(rp.structure).max_defect <= 1e-12

        def relaxation(epsilon):
            return ProblemCatalog.jin_xin_demo(epsilon, cells=16)

        report = HarnessService.ap_test(builtin_methods[2], relaxation, [1e-8], dt=1.0 / 32, t_end=0.5)
        assert report.problem == "jinxin"
        assert report.entries[0].projection_gap <= 1e-5


class TestPolynomialOracle:
    @pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_degree_s_is_reproduced(self, builtin_methods, solver_config, s, alpha):
        problem = ProblemCatalog.polynomial_exactness_problem(s, alpha=alpha)
        trajectory = StepperService.integrate(
            builtin_methods[s], problem, problem.initial_value, 1.0, 0.1, solver_config
        )
        assert np.max(np.abs(trajectory.final - problem.exact(1.0))) <= 1e-10

    def test_constant_solution_is_preserved(self, builtin_methods, solver_config):
        problem = ProblemCatalog.polynomial_exactness_problem(0)
        trajectory = StepperService.integrate(
            builtin_methods[3], problem, problem.initial_value, 1.0, 0.1, solver_config
        )
        assert np.max(np.abs(trajectory.values[:, 1] - 1.0)) <= 1e-12

    @pytest.mark.parametrize("s", [2, 3])
    def test_degree_above_s_is_not_reproduced(self, builtin_methods, solver_config, s):
        problem = ProblemCatalog.polynomial_exactness_problem(s + 2)
        trajectory = StepperService.integrate(
            builtin_methods[s], problem, problem.initial_value, 1.0, 0.1, solver_config
        )
        assert np.max(np.abs(trajectory.final - problem.exact(1.0))) > 0.0
