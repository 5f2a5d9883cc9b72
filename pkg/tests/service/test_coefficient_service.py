"""Tests for Coefficient Service"""

import numpy as np
import pytest

from app.core.errors import ConstraintError, NodeVectorError, PeerError
from app.services.coefficients import GAMMA_THREE_STAGE, GAMMA_TWO_STAGE, CoefficientService


class TestNodes:
    def test_duplicate_nodes_rejected(self):
        with pytest.raises(NodeVectorError):
            CoefficientService.check_nodes([0.5, 0.5, 1.0])

    def test_last_node_must_be_one(self):
        with pytest.raises(NodeVectorError):
            CoefficientService.check_nodes([0.25, 0.75])

    def test_negative_nodes_only_rejected_for_constructions(self):
        assert CoefficientService.check_nodes([-0.5, 1.0]).tolist() == [-0.5, 1.0]
        with pytest.raises(NodeVectorError):
            CoefficientService.check_nodes([-0.5, 1.0], constructed=True)

    def test_empty_nodes_rejected(self):
        with pytest.raises(NodeVectorError):
            CoefficientService.check_distinct([])


class TestVandermonde:
    def test_shifted_entries(self):
        V1 = CoefficientService.vandermonde([0.5, 1.0], shift=1.0)
        assert np.allclose(V1, [[1.0, -0.5], [1.0, 0.0]])

    def test_extrapolation_reproduces_low_degrees(self):
        c = np.array([0.2, 0.55, 1.0])
        X = CoefficientService.extrapolation_matrix(c)
        for degree in range(3):
            assert np.allclose(X @ (c - 1.0) ** degree, c ** degree, atol=1e-12)

    def test_derive_s1_rows_sum_to_one_minus_s2(self):
        c = [0.3, 0.6, 1.0]
        S2 = CoefficientService.recent_extrapolation_s2(c)
        S1 = CoefficientService.derive_s1(S2, c)
        assert np.allclose((S1 + S2) @ np.ones(3), np.ones(3), atol=1e-12)

    def test_derive_s1_for_two_endpoint_nodes(self):
        S1 = CoefficientService.derive_s1(np.zeros((2, 2)), [0.0, 1.0])
        assert np.allclose(S1, [[0.0, 1.0], [-1.0, 2.0]], atol=1e-14)

    def test_derive_s1_single_stage(self):
        assert CoefficientService.derive_s1([[0.0]], [1.0]).tolist() == [[1.0]]


class TestBuiltinMethods:
    @pytest.mark.parametrize("s, gamma", [(1, 1.0), (2, 1.0 / 3.0), (3, 2.0 / 11.0), (4, 0.12)])
    def test_gamma(self, builtin_methods, s, gamma):
        assert builtin_methods[s].gamma == pytest.approx(gamma, rel=1e-12)

    def test_two_stage_matrices(self, builtin_methods):
        method = builtin_methods[2]
        assert method.label == "builtin:s2"
        assert np.allclose(method.c, [0.5, 1.0])
        assert np.allclose(method.P, [[-1.0 / 3.0, 4.0 / 3.0], [-4.0 / 9.0, 13.0 / 9.0]], atol=1e-13)
        assert np.allclose(method.R, [[1.0 / 3.0, 0.0], [4.0 / 9.0, 1.0 / 3.0]], atol=1e-13)
        assert np.all(method.Q == 0.0)

    def test_one_stage_is_implicit_euler(self, builtin_methods):
        method = builtin_methods[1]
        assert np.allclose(method.P, [[1.0]])
        assert np.allclose(method.R, [[1.0]])
        assert np.allclose(method.S2, [[0.0]])

    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    def test_builtins_validate(self, builtin_methods, s):
        report = CoefficientService.validate(builtin_methods[s])
        assert report.passed
        assert report.implicit_degree >= s
        assert report.imex_degree >= s
        assert report.extrapolation_degree >= s - 1
        assert report.zero_stable
        assert report.stiff_limit_amplification == pytest.approx(0.0, abs=1e-12)

    def test_unknown_stage_count(self):
        with pytest.raises(PeerError):
            CoefficientService.builtin_method(5)


class TestConstructOrderS:
    @pytest.mark.parametrize("c", [[0.5, 1.0], [0.0, 0.5, 1.0], [0.25, 0.5, 0.75, 1.0]])
    def test_default_construction_is_exact(self, c):
        coeffs = CoefficientService.construct_order_s(c)
        s = len(c)
        for degree in range(s + 1):
            residual = CoefficientService.residual_polynomial_exactness(coeffs, degree)
            assert np.max(np.abs(residual)) <= 1e-10
        report = CoefficientService.validate(coeffs)
        assert report.passed
        assert report.implicit_degree >= s
        assert report.imex_degree >= s

    def test_default_gamma_and_p(self):
        two = CoefficientService.construct_order_s([0.5, 1.0])
        three = CoefficientService.construct_order_s([0.0, 0.5, 1.0])
        assert two.gamma == pytest.approx(GAMMA_TWO_STAGE)
        assert three.gamma == pytest.approx(GAMMA_THREE_STAGE)
        assert np.allclose(two.P, [[0.0, 1.0], [0.0, 1.0]])
        assert np.allclose(np.diag(three.R), GAMMA_THREE_STAGE)

    @pytest.mark.parametrize("gamma", [1.0, 0.5, 0.25])
    def test_single_stage_theta_family(self, gamma):
        coeffs = CoefficientService.construct_order_s([1.0], gamma=gamma, P=[[1.0]])
        assert coeffs.Q[0, 0] == pytest.approx(1.0 - gamma, abs=1e-14)

    def test_backward_euler_degree_two_defect(self):
        coeffs = CoefficientService.construct_order_s([1.0], gamma=1.0)
        residual = CoefficientService.residual_polynomial_exactness(coeffs, 2)
        assert residual[0] == pytest.approx(-1.0)

    def test_default_construction_is_not_superconvergent(self):
        coeffs = CoefficientService.construct_order_s([0.5, 1.0])
        residual = CoefficientService.residual_polynomial_exactness(coeffs, 3)
        assert np.max(np.abs(residual)) > 1e-6

    def test_rejects_rows_not_summing_to_one(self):
        with pytest.raises(ConstraintError):
            CoefficientService.construct_order_s([0.5, 1.0], P=[[0.5, 0.6], [0.0, 1.0]])

    def test_rejects_defective_unit_eigenvalue(self):
        with pytest.raises(ConstraintError):
            CoefficientService.construct_order_s([0.5, 1.0], P=[[-1.0, 2.0], [-2.0, 3.0]])

    def test_rejects_spectral_radius_above_one(self):
        with pytest.raises(ConstraintError):
            CoefficientService.construct_order_s([0.5, 1.0], P=[[2.0, -1.0], [0.0, 1.0]])

    def test_rejects_non_strict_s2(self):
        with pytest.raises(ConstraintError):
            CoefficientService.construct_order_s([0.5, 1.0], S2=[[0.1, 0.0], [0.0, 0.0]])

    def test_rejects_non_positive_gamma(self):
        with pytest.raises(ConstraintError):
            CoefficientService.construct_order_s([0.5, 1.0], gamma=0.0)

    def test_nodes_outside_unit_interval(self):
        with pytest.raises(NodeVectorError):
            CoefficientService.construct_order_s([1.5, 1.0])

    def test_strictly_lower_r_is_kept(self):
        R_lower = [[0.0, 0.0], [0.2, 0.0]]
        coeffs = CoefficientService.construct_order_s([0.5, 1.0], R_lower=R_lower)
        assert coeffs.R[1, 0] == pytest.approx(0.2)
        assert CoefficientService.validate(coeffs).passed


class TestValidate:
    def test_detects_broken_row_sums(self, builtin_methods):
        method = builtin_methods[2]
        P = method.P.copy()
        P[0, 0] += 0.1
        report = CoefficientService.validate(method.model_copy(update={"P": P}))
        assert not report.passed
        assert report.violation("Pe = e").magnitude == pytest.approx(0.1)

    def test_detects_upper_triangular_r(self, builtin_methods):
        method = builtin_methods[2]
        R = method.R.copy()
        R[0, 1] = 0.5
        report = CoefficientService.validate(method.model_copy(update={"R": R}))
        assert report.violation("R lower triangular") is not None

    def test_detects_inconsistent_derived_matrix(self, builtin_methods):
        method = builtin_methods[3]
        report = CoefficientService.validate(method.model_copy(update={"Qhat": method.Qhat + 1e-3}))
        assert report.violation("Qhat = Q + R S1") is not None

    def test_detects_repeated_nodes(self, builtin_methods):
        method = builtin_methods[2]
        report = CoefficientService.validate(method.model_copy(update={"c": np.array([1.0, 1.0])}))
        assert report.violation("c pairwise distinct") is not None
        assert report.implicit_degree == -1

    def test_detects_s2_diagonal(self, builtin_methods):
        method = builtin_methods[2]
        S2 = method.S2.copy()
        S2[1, 1] = 0.5
        report = CoefficientService.validate(method.model_copy(update={"S2": S2}))
        assert report.violation("S2 strictly lower").magnitude == pytest.approx(0.5)

    def test_unknown_exactness_mode(self, builtin_methods):
        with pytest.raises(PeerError):
            CoefficientService.residual_polynomial_exactness(builtin_methods[2], 1, mode="explicit")


class TestDiagnostics:
    def test_zero_stability_of_identity(self):
        report = CoefficientService.zero_stability(np.eye(3))
        assert report.spectral_radius == pytest.approx(1.0)
        assert report.semisimple
        assert report.stable

    def test_exactness_degree_stops_at_first_failure(self):
        residuals = {0: np.zeros(2), 1: np.zeros(2), 2: np.ones(2)}
        assert CoefficientService.exactness_degree(lambda d: residuals[d], max_degree=2) == 1

    def test_recent_extrapolation_is_strictly_lower(self):
        S2 = CoefficientService.recent_extrapolation_s2([0.25, 0.5, 0.75, 1.0])
        assert np.all(np.triu(S2) == 0.0)
        assert np.all(S2[0] == 0.0)
