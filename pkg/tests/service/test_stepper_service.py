"""Tests for Stepper Service"""

import math

import numpy as np
import pytest

from app.core.errors import NewtonError, PeerError, StepFailure, StructureError
from app.models.problem import SplitProblem, StageBlock
from app.services import stepper as stepper_module
from app.services.newton import NewtonService
from app.services.problems import ProblemCatalog
from app.services.relaxation import RelaxationService
from app.services.stepper import StepperService, scaled_max_norm


@pytest.fixture
def decay_problem():
    """u' = -u - u with the first half explicit, exact solution exp(-2t)."""
    return SplitProblem(
        label="decay",
        dim=1,
        f0=lambda u: -u,
        f1=lambda u: -u,
        jac1=lambda u: -np.eye(1),
        initial_value=np.array([1.0]),
    )


class TestHelpers:
    def test_scaled_max_norm(self):
        assert scaled_max_norm(np.array([3.0, 1.0]), np.array([1.0, 1.0])) == pytest.approx(1.0)

    def test_evaluate_block_caches_right_hand_sides(self, wb_problem):
        block = StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(block.f0_values[0], [1.0, 0.0])
        assert np.allclose(block.f1_values[0], [0.0, 0.0])

    def test_evaluate_block_dimension_mismatch(self, wb_problem):
        with pytest.raises(StructureError):
            StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0, 2.0]])

    def test_imex_euler_on_stiff_part_only(self, solver_config):
        problem = SplitProblem(label="implicit", dim=1, f0=lambda u: np.zeros(1), f1=lambda u: -u)
        value = StepperService.imex_euler(problem, [1.0], 1.0, 4, solver_config)
        assert value[0] == pytest.approx(1.25 ** -4, rel=1e-10)


class TestStartingProcedure:
    def test_starting_value_matches_exponential(self, decay_problem, solver_config):
        value = StepperService.starting_value(decay_problem, [1.0], 0.5, solver_config)
        assert value[0] == pytest.approx(math.exp(-1.0), abs=1e-10)

    def test_exact_solution_is_used_from_its_initial_value(self, builtin_methods, wb_problem, solver_config):
        method = builtin_methods[3]
        block = StepperService.initialize_stages(method, wb_problem, wb_problem.initial_value, 0.2, solver_config)
        for c_i, stage in zip(method.c, block.stages):
            assert np.allclose(stage, wb_problem.exact(c_i * 0.2), atol=1e-14)

    def test_off_trajectory_data_uses_the_starting_procedure(self, builtin_methods, wb_problem, solver_config, mocker):
        spy = mocker.spy(StepperService, "starting_value")
        StepperService.initialize_stages(builtin_methods[2], wb_problem, [0.5, 0.5], 0.2, solver_config)
        assert spy.call_count == 2


class TestStep:
    def test_equilibrium_is_preserved(self, builtin_methods, wb_problem, solver_config):
        for method in builtin_methods.values():
            block = StepperService.constant_block(wb_problem, wb_problem.equilibrium, method.s, 1.0)
            following = StepperService.step(method, wb_problem, block, solver_config)
            assert np.max(np.abs(following.stages - block.stages)) <= 1e-13
            assert following.t_n == 1.0

    def test_block_size_mismatch(self, builtin_methods, wb_problem, solver_config):
        block = StepperService.constant_block(wb_problem, wb_problem.equilibrium, 2, 1.0)
        with pytest.raises(StructureError):
            StepperService.step(builtin_methods[3], wb_problem, block, solver_config)

    def test_newton_failure_names_stage(self, builtin_methods, wb_problem, solver_config, mocker):
        mocker.patch.object(
            NewtonService, "newton_solve_stage", side_effect=NewtonError("diverged", 4.0, 3)
        )
        block = StepperService.constant_block(wb_problem, wb_problem.equilibrium, 2, 1.0)
        with pytest.raises(StepFailure) as exc_info:
            StepperService.step(builtin_methods[2], wb_problem, block, solver_config)
        assert exc_info.value.stage == 1
        assert exc_info.value.reason == "diverged"
        assert exc_info.value.residual == 4.0

    def test_predictor_failure_retries_from_last_stage(self, builtin_methods, wb_problem, solver_config, mocker):
        # Arrange
        block = StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0], [1.0, 0.0]])
        expected = StepperService.step(builtin_methods[2], wb_problem, block, solver_config)
        original = NewtonService.newton_solve_stage
        guesses = []

        def flaky(rhs, guess, *args):
            guesses.append(np.array(guess))
            if len(guesses) == 1:
                raise NewtonError("diverged", 9.0, 3)
            return original(rhs, guess, *args)

        mocker.patch.object(NewtonService, "newton_solve_stage", side_effect=flaky)

        # Act
        following = StepperService.step(builtin_methods[2], wb_problem, block, solver_config)

        # Assert
        assert len(guesses) == 3
        assert not np.array_equal(guesses[0], block.last)
        assert np.array_equal(guesses[1], block.last)
        assert np.allclose(following.stages, expected.stages, atol=1e-10)

    def test_failure_after_retry(self, builtin_methods, wb_problem, solver_config, mocker):
        solve = mocker.patch.object(
            NewtonService, "newton_solve_stage", side_effect=NewtonError("exceeded max_iter", 2.0, 25)
        )
        block = StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(StepFailure) as exc_info:
            StepperService.step(builtin_methods[2], wb_problem, block, solver_config)
        assert solve.call_count == 2
        assert exc_info.value.stage == 1

    def test_cached_values_of_fresh_block(self, wb_problem):
        block = StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0], [1.0, 0.0]])
        assert StepperService.check_cached_values(wb_problem, block) == 0.0

    def test_stale_cache_is_rejected_in_debug_mode(self, builtin_methods, wb_problem, solver_config, mocker):
        fresh = StepperService.evaluate_block(wb_problem, 0.0, 0.1, [[0.0, 1.0], [1.0, 0.0]])
        stale = StageBlock(
            t_n=0.0, dt=0.1, stages=fresh.stages, f0_values=fresh.f0_values + 1.0, f1_values=fresh.f1_values
        )
        mocker.patch.object(stepper_module.logger, "isEnabledFor", return_value=True)
        with pytest.raises(StructureError):
            StepperService.step(builtin_methods[2], wb_problem, stale, solver_config)

    def test_explicit_step_matches_implicit_step_without_stiff_part(self, builtin_methods, solver_config):
        limit = RelaxationService.limit_problem(ProblemCatalog.ap_pareschi_russo(1e-6))
        method = builtin_methods[3]
        stages = np.array([[1.0], [0.9], [0.8]])
        block = StepperService.evaluate_block(limit, 0.0, 0.1, stages)
        implicit = StepperService.step(method, limit, block, solver_config)
        explicit = StepperService.explicit_step(method, limit, block)
        assert np.allclose(implicit.stages, explicit.stages, atol=1e-14)


class TestIntegrate:
    def test_grid_starts_one_step_after_t0(self, builtin_methods, wb_problem, solver_config):
        trajectory = StepperService.integrate(
            builtin_methods[2], wb_problem, wb_problem.initial_value, 2.0, 0.5, solver_config
        )
        assert np.allclose(trajectory.times, [0.5, 1.0, 1.5, 2.0])
        assert trajectory.values.shape == (4, 2)

    def test_first_value_is_last_starting_stage(self, builtin_methods, wb_problem, solver_config):
        trajectory = StepperService.integrate(
            builtin_methods[2], wb_problem, wb_problem.initial_value, 1.0, 0.25, solver_config
        )
        assert np.allclose(trajectory.values[0], wb_problem.exact(0.25), atol=1e-14)

    def test_step_size_must_divide_interval(self, builtin_methods, wb_problem, solver_config):
        with pytest.raises(PeerError):
            StepperService.integrate(builtin_methods[2], wb_problem, wb_problem.initial_value, 1.0, 0.3, solver_config)

    def test_end_must_follow_start(self, builtin_methods, wb_problem, solver_config):
        with pytest.raises(PeerError):
            StepperService.integrate(builtin_methods[2], wb_problem, wb_problem.initial_value, 0.0, 0.1, solver_config)

    def test_start_block_sets_anchor(self, builtin_methods, wb_problem, solver_config):
        block = StepperService.constant_block(wb_problem, wb_problem.equilibrium, 2, 0.5, t_n=1.0)
        trajectory = StepperService.integrate(
            builtin_methods[2], wb_problem, None, 3.0, 0.1, solver_config, start_block=block
        )
        assert np.allclose(trajectory.times, [1.5, 2.0, 2.5, 3.0])
        assert np.allclose(trajectory.values, wb_problem.equilibrium, atol=1e-13)

    def test_failures_carry_step_index(self, builtin_methods, wb_problem, solver_config, mocker):
        mocker.patch.object(
            NewtonService, "newton_solve_stage", side_effect=NewtonError("exceeded max_iter", 1.0, 25)
        )
        with pytest.raises(StepFailure) as exc_info:
            StepperService.integrate(
                builtin_methods[2], wb_problem, wb_problem.initial_value, 1.0, 0.25, solver_config
            )
        assert exc_info.value.step_index == 1
        assert exc_info.value.stage == 1

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_polynomial_of_degree_s_is_exact(self, builtin_methods, solver_config, s):
        problem = ProblemCatalog.polynomial_exactness_problem(s)
        trajectory = StepperService.integrate(
            builtin_methods[s], problem, problem.initial_value, 1.0, 0.1, solver_config
        )
        exact = np.array([problem.exact(t) for t in trajectory.times])
        assert np.max(np.abs(trajectory.values - exact)) <= 1e-11
