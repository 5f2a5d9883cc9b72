"""Coefficient Service - construction, validation and diagnostics of IMEX Peer coefficient sets"""

from typing import Callable, Optional

import numpy as np
from scipy import linalg

from app.core.errors import ConstraintError, NodeVectorError, PeerError, StructureError
from app.core.logger import setup_logger
from app.models.coefficients import PeerCoefficients, ValidationReport, Violation, ZeroStabilityReport

logger = setup_logger(name="coefficient_service")

# SDIRK diagonals used as default gamma for construct_order_s
GAMMA_TWO_STAGE = 1.0 - 1.0 / np.sqrt(2.0)
GAMMA_THREE_STAGE = 0.435866521508459

VALIDATION_TOL = 1e-12
EXACTNESS_CUTOFF = 1e-8
IMEX_SPLIT_ALPHA = 0.3
BUILTIN_STAGES = (1, 2, 3, 4)


def _as_square(name: str, matrix, s: int) -> np.ndarray:
    array = np.asarray(matrix, dtype=float)
    if array.shape != (s, s):
        raise StructureError(f"Matrix {name} must be {s}x{s}, got shape {array.shape}")
    return array


def _scaled_tol(*matrices: np.ndarray, tol: float = VALIDATION_TOL) -> float:
    return tol * max(1.0, *(float(np.max(np.abs(m))) for m in matrices))


def _monomial_derivative(x: np.ndarray, degree: int) -> np.ndarray:
    if degree == 0:
        return np.zeros_like(x)
    return degree * x ** (degree - 1)


class CoefficientService:
    """Service for building and checking IMEX Peer coefficient sets"""

    @staticmethod
    def check_distinct(c) -> np.ndarray:
        nodes = np.asarray(c, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0:
            raise NodeVectorError("Node vector must be a nonempty list of numbers")
        if not np.all(np.isfinite(nodes)):
            raise NodeVectorError("Nodes must be finite")
        if np.unique(nodes).size != nodes.size:
            raise NodeVectorError(f"Nodes must be pairwise distinct, got {nodes.tolist()}")
        return nodes

    @staticmethod
    def check_nodes(c, constructed: bool = False) -> np.ndarray:
        """Full node vector check; ``constructed`` additionally requires c_i in [0, 1]."""
        nodes = CoefficientService.check_distinct(c)
        if abs(nodes[-1] - 1.0) > VALIDATION_TOL:
            raise NodeVectorError(f"Last node must equal one (c_s = 1), got {nodes[-1]!r}")
        if constructed and (np.min(nodes) < 0.0 or np.max(nodes) > 1.0):
            raise NodeVectorError("Nodes of constructed methods must lie in [0, 1]")
        return nodes

    @staticmethod
    def vandermonde(c, shift: float = 0.0) -> np.ndarray:
        """Matrix with entries (c_i - shift)^(j-1); shift 0 gives V0, shift 1 gives V1."""
        nodes = CoefficientService.check_distinct(c)
        return np.vander(nodes - shift, N=nodes.size, increasing=True)

    @staticmethod
    def extrapolation_matrix(c) -> np.ndarray:
        """V0 V1^-1: maps values at the old stage times onto the new ones."""
        V0 = CoefficientService.vandermonde(c, 0.0)
        V1 = CoefficientService.vandermonde(c, 1.0)
        X = linalg.solve(V1.T, V0.T).T
        residual = np.max(np.abs(X @ V1 - V0)) / max(1.0, np.max(np.abs(V0)))
        if residual > 1e-10:
            logger.warning("Extrapolation solve is ill-conditioned, residual %.3e for nodes %s", residual, c)
        return X

    @staticmethod
    def derive_s1(S2, c) -> np.ndarray:
        nodes = CoefficientService.check_distinct(c)
        S2 = _as_square("S2", S2, nodes.size)
        return (np.eye(nodes.size) - S2) @ CoefficientService.extrapolation_matrix(nodes)

    @staticmethod
    def assemble(c, gamma: float, P, Q, R, S2, label: str = "custom") -> PeerCoefficients:
        """Bundle primary matrices and derive S1, Qhat and Rhat."""
        nodes = CoefficientService.check_distinct(c)
        s = nodes.size
        P, Q, R, S2 = (_as_square(name, m, s) for name, m in (("P", P), ("Q", Q), ("R", R), ("S2", S2)))
        S1 = CoefficientService.derive_s1(S2, nodes)
        return PeerCoefficients(
            label=label,
            s=s,
            gamma=float(gamma),
            c=nodes,
            P=P,
            Q=Q,
            R=R,
            S1=S1,
            S2=S2,
            Qhat=Q + R @ S1,
            Rhat=R @ S2,
        )

    @staticmethod
    def default_gamma(s: int) -> float:
        return GAMMA_TWO_STAGE if s <= 2 else GAMMA_THREE_STAGE

    @staticmethod
    def construct_order_s(
        c,
        gamma: Optional[float] = None,
        P=None,
        S2=None,
        R_lower=None,
        label: Optional[str] = None,
    ) -> PeerCoefficients:
        """
        Construct an s-stage method of stage order s.
        Each row of Q is solved from the exactness conditions of the implicit base
        scheme for the monomials t^1..t^s in normalized units (t_n = 0, dt = 1).
        """
        nodes = CoefficientService.check_nodes(c, constructed=True)
        s = nodes.size
        gamma = CoefficientService.default_gamma(s) if gamma is None else float(gamma)
        if not gamma > 0:
            raise ConstraintError(f"gamma must be positive, got {gamma}")

        e = np.ones(s)
        P = np.outer(e, np.eye(s)[-1]) if P is None else _as_square("P", P, s)
        defect = np.max(np.abs(P @ e - e))
        if defect > _scaled_tol(P):
            raise ConstraintError(f"Pe = e violated by {defect:.3e}")
        stability = CoefficientService.zero_stability(P)
        if not stability.stable:
            raise ConstraintError(
                f"P is not zero-stable (spectral radius {stability.spectral_radius:.6f}, "
                f"semisimple={stability.semisimple})"
            )

        S2 = np.zeros((s, s)) if S2 is None else _as_square("S2", S2, s)
        if np.any(np.triu(S2) != 0.0):
            raise ConstraintError("S2 must be strictly lower triangular")
        R_lower = np.zeros((s, s)) if R_lower is None else _as_square("R_lower", R_lower, s)
        if np.any(np.triu(R_lower) != 0.0):
            raise ConstraintError("R_lower must be strictly lower triangular")
        R = gamma * np.eye(s) + R_lower

        k = np.arange(1, s + 1)
        # A[k-1, j] = k c_j^(k-1): derivative of t^k at the old stage times
        A = k[:, None] * nodes[None, :] ** (k[:, None] - 1)
        old_powers = nodes[None, :] ** k[:, None]
        new_derivative_powers = (1.0 + nodes)[None, :] ** (k[:, None] - 1)
        B = (1.0 + nodes)[:, None] ** k[None, :] - P @ old_powers.T - (R @ new_derivative_powers.T) * k[None, :]
        Q = linalg.solve(A, B.T).T

        coeffs = CoefficientService.assemble(nodes, gamma, P, Q, R, S2, label=label or f"order{s}")
        logger.info("Constructed %d-stage method %s with gamma=%.6f", s, coeffs.label, gamma)
        return coeffs

    @staticmethod
    def recent_extrapolation_s2(c) -> np.ndarray:
        """
        S2 for which the F0 prediction of stage i interpolates the s most recent
        stage values: new stages 1..i-1 and old stages i..s.
        """
        nodes = CoefficientService.check_distinct(c)
        s = nodes.size
        S2 = np.zeros((s, s))
        indices = np.arange(s)
        for i in range(1, s):
            points = np.where(indices < i, nodes, nodes - 1.0)
            if np.unique(points).size != s:
                raise ConstraintError(f"Recent-stage extrapolation is undefined for nodes {nodes.tolist()}")
            weights = linalg.solve(np.vander(points, N=s, increasing=True).T, nodes[i] ** indices)
            S2[i, :i] = weights[:i]
        return S2

    @staticmethod
    def construct_bdf_type(c, S2=None, label: Optional[str] = None) -> PeerCoefficients:
        """
        Build the BDF-type method family with Q = 0.

        gamma and the strictly lower part of R (equal weights per row) make every
        stage exact for omega(t) = prod(t - c_j); P then reproduces all polynomials
        of degree < s through the Lagrange basis on the nodes.
        """
        nodes = CoefficientService.check_nodes(c, constructed=True)
        s = nodes.size
        omega = np.poly(nodes)
        omega_prime = np.polyder(omega)
        targets = 1.0 + nodes
        omega_at = np.polyval(omega, targets)
        omega_prime_at = np.polyval(omega_prime, targets)

        gamma = float(omega_at[0] / omega_prime_at[0])
        if not gamma > 0:
            raise ConstraintError(f"Nodes {nodes.tolist()} give a non-positive diagonal {gamma}")

        R = gamma * np.eye(s)
        for i in range(1, s):
            remainder = omega_at[i] - gamma * omega_prime_at[i]
            weight_sum = np.sum(omega_prime_at[:i])
            if weight_sum == 0.0:
                raise ConstraintError(f"Degenerate row {i + 1} for nodes {nodes.tolist()}")
            R[i, :i] = remainder / weight_sum

        degrees = np.arange(s)
        V0T = CoefficientService.vandermonde(nodes, 0.0).T
        lagrange = linalg.solve(V0T, targets[None, :] ** degrees[:, None]).T
        derivative_monomials = np.vstack([_monomial_derivative(targets, int(d)) for d in degrees])
        lagrange_prime = linalg.solve(V0T, derivative_monomials).T
        P = lagrange - R @ lagrange_prime

        if S2 is None:
            S2 = CoefficientService.recent_extrapolation_s2(nodes)
        coeffs = CoefficientService.assemble(nodes, gamma, P, np.zeros((s, s)), R, S2, label=label or f"bdf{s}")
        logger.info("Constructed BDF-type method %s with gamma=%.6f", coeffs.label, gamma)
        return coeffs

    @staticmethod
    def builtin_method(s: int) -> PeerCoefficients:
        """Bundled methods builtin:s1..builtin:s4 on the nodes i/s."""
        if s not in BUILTIN_STAGES:
            raise PeerError(f"No builtin method with {s} stages; choose one of {list(BUILTIN_STAGES)}")
        nodes = np.arange(1, s + 1) / s
        return CoefficientService.construct_bdf_type(nodes, label=f"builtin:s{s}")

    @staticmethod
    def residual_polynomial_exactness(
        coeffs: PeerCoefficients,
        degree: int,
        mode: str = "implicit_base",
        alpha: float = IMEX_SPLIT_ALPHA,
    ) -> np.ndarray:
        """Per-stage defect for u(t) = t^degree in normalized units."""
        if degree < 0:
            raise PeerError("degree must be nonnegative")
        old = coeffs.c
        new = 1.0 + coeffs.c
        u_old = old ** degree
        du_old = _monomial_derivative(old, degree)
        du_new = _monomial_derivative(new, degree)

        if mode == "implicit_base":
            approx = coeffs.P @ u_old + coeffs.Q @ du_old + coeffs.R @ du_new
        elif mode == "imex_split":
            explicit = coeffs.Qhat @ du_old + coeffs.Rhat @ du_new
            implicit = coeffs.Q @ du_old + coeffs.R @ du_new
            approx = coeffs.P @ u_old + alpha * explicit + (1.0 - alpha) * implicit
        else:
            raise PeerError(f"Unknown exactness mode: {mode}")
        return new ** degree - approx

    @staticmethod
    def extrapolation_residual(coeffs: PeerCoefficients, degree: int) -> np.ndarray:
        """S1 p(c - e) + S2 p(c) - p(c) for p(t) = t^degree."""
        p_new = coeffs.c ** degree
        return coeffs.S1 @ (coeffs.c - 1.0) ** degree + coeffs.S2 @ p_new - p_new

    @staticmethod
    def exactness_degree(residual: Callable[[int], np.ndarray], max_degree: int) -> int:
        degree = -1
        while degree < max_degree and np.max(np.abs(residual(degree + 1))) <= EXACTNESS_CUTOFF:
            degree += 1
        return degree

    @staticmethod
    def zero_stability(P) -> ZeroStabilityReport:
        """Spectral radius of P and whether its unit-modulus eigenvalues are semisimple."""
        P = np.asarray(P, dtype=float)
        s = P.shape[0]
        eigenvalues = linalg.eigvals(P)
        radius = float(np.max(np.abs(eigenvalues)))

        semisimple = True
        for lam in eigenvalues[np.abs(eigenvalues) > 1.0 - 1e-8]:
            algebraic = int(np.sum(np.abs(eigenvalues - lam) < 1e-6))
            geometric = s - np.linalg.matrix_rank(P - lam * np.eye(s), tol=1e-8 * max(1.0, np.max(np.abs(P))))
            if geometric < algebraic:
                semisimple = False
        return ZeroStabilityReport(
            spectral_radius=radius,
            semisimple=semisimple,
            stable=radius <= 1.0 + 1e-10 and semisimple,
        )

    @staticmethod
    def stiff_limit_amplification(coeffs: PeerCoefficients) -> float:
        """Spectral radius of -R^-1 Q, the limit of the implicit amplification matrix as z -> -inf."""
        limit = -linalg.solve_triangular(coeffs.R, coeffs.Q, lower=True)
        return float(np.max(np.abs(linalg.eigvals(limit))))

    @staticmethod
    def validate(coeffs: PeerCoefficients) -> ValidationReport:
        """Check every coefficient invariant and measure exactness degrees."""
        s = coeffs.s
        e = coeffs.e
        violations = []

        def record(name: str, magnitude: float, limit: float = 0.0):
            if magnitude > limit:
                violations.append(Violation(invariant=name, magnitude=float(magnitude)))

        distinct = np.unique(coeffs.c).size == s
        if not distinct:
            violations.append(Violation(invariant="c pairwise distinct", magnitude=1.0))
        record("c_s = 1", abs(coeffs.c[-1] - 1.0), VALIDATION_TOL)
        if not coeffs.gamma > 0:
            violations.append(Violation(invariant="gamma > 0", magnitude=abs(coeffs.gamma)))
        record("R lower triangular", np.max(np.abs(np.triu(coeffs.R, 1))))
        record("R diagonal = gamma", np.max(np.abs(np.diag(coeffs.R) - coeffs.gamma)), _scaled_tol(coeffs.R))
        record("S2 strictly lower", np.max(np.abs(np.triu(coeffs.S2))))
        record("Pe = e", np.max(np.abs(coeffs.P @ e - e)), _scaled_tol(coeffs.P))
        record(
            "(S1 + S2)e = e",
            np.max(np.abs((coeffs.S1 + coeffs.S2) @ e - e)),
            _scaled_tol(coeffs.S1, coeffs.S2),
        )
        record(
            "Qhat = Q + R S1",
            np.max(np.abs(coeffs.Qhat - coeffs.Q - coeffs.R @ coeffs.S1)),
            _scaled_tol(coeffs.Qhat, coeffs.R @ coeffs.S1),
        )
        record(
            "Rhat = R S2",
            np.max(np.abs(coeffs.Rhat - coeffs.R @ coeffs.S2)),
            _scaled_tol(coeffs.Rhat, coeffs.R @ coeffs.S2),
        )

        implicit_degree = imex_degree = extrapolation_degree = -1
        if distinct:
            expected_s1 = CoefficientService.derive_s1(coeffs.S2, coeffs.c)
            record(
                "S1 = (I - S2) V0 V1^-1",
                np.max(np.abs(coeffs.S1 - expected_s1)),
                _scaled_tol(coeffs.S1, expected_s1),
            )
            max_degree = 2 * s + 2
            implicit_degree = CoefficientService.exactness_degree(
                lambda d: CoefficientService.residual_polynomial_exactness(coeffs, d, "implicit_base"), max_degree
            )
            imex_degree = CoefficientService.exactness_degree(
                lambda d: CoefficientService.residual_polynomial_exactness(coeffs, d, "imex_split"), max_degree
            )
            extrapolation_degree = CoefficientService.exactness_degree(
                lambda d: CoefficientService.extrapolation_residual(coeffs, d), max_degree
            )

        stability = CoefficientService.zero_stability(coeffs.P)
        try:
            amplification = CoefficientService.stiff_limit_amplification(coeffs)
        except (linalg.LinAlgError, ValueError):
            amplification = None

        report = ValidationReport(
            passed=not violations,
            violations=violations,
            implicit_degree=implicit_degree,
            imex_degree=imex_degree,
            extrapolation_degree=extrapolation_degree,
            spectral_radius_p=stability.spectral_radius,
            zero_stable=stability.stable,
            stiff_limit_amplification=amplification,
        )
        if report.passed:
            logger.info(
                "Validated %s: implicit degree %d, extrapolation degree %d",
                coeffs.label, implicit_degree, extrapolation_degree,
            )
        else:
            logger.warning({"event": "validation_failed", "method": coeffs.label,
                            "violations": [v.model_dump() for v in violations]})
        return report
