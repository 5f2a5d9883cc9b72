"""Stability Service - spectral radii of Peer amplification matrices on complex grids"""

from typing import Optional

import numpy as np

from app.core.errors import PeerError
from app.core.logger import setup_logger
from app.models.coefficients import PeerCoefficients
from app.models.report import StabilityField

logger = setup_logger(name="stability_service")

POLE_TOL = 1e-12


class StabilityService:
    """Service for linear stability diagnostics"""

    @staticmethod
    def _radii(lhs: np.ndarray, rhs: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
        """Batched spectral radius of lhs^-1 rhs; NaN where the (triangular) lhs has a zero diagonal."""
        poles = np.abs(diagonal) <= POLE_TOL
        s = lhs.shape[-1]
        lhs = np.where(poles[..., None, None], np.eye(s), lhs)
        amplification = np.linalg.solve(lhs, rhs)
        radius = np.max(np.abs(np.linalg.eigvals(amplification)), axis=-1)
        return np.where(poles, np.nan, radius)

    @staticmethod
    def implicit_amplification(coeffs: PeerCoefficients, z) -> np.ndarray:
        """Spectral radius of M(z) = (I - zR)^-1 (P + zQ) for scalar or array z."""
        z = np.asarray(z, dtype=complex)
        zz = z[..., None, None]
        lhs = np.eye(coeffs.s) - zz * coeffs.R
        rhs = coeffs.P + zz * coeffs.Q
        return StabilityService._radii(lhs, rhs, 1.0 - z * coeffs.gamma)

    @staticmethod
    def imex_amplification(coeffs: PeerCoefficients, z0, z1) -> np.ndarray:
        """Spectral radius of (I - z0 Rhat - z1 R)^-1 (P + z0 Qhat + z1 Q); z0 explicit, z1 implicit."""
        z0, z1 = np.broadcast_arrays(np.asarray(z0, dtype=complex), np.asarray(z1, dtype=complex))
        a, b = z0[..., None, None], z1[..., None, None]
        lhs = np.eye(coeffs.s) - a * coeffs.Rhat - b * coeffs.R
        rhs = coeffs.P + a * coeffs.Qhat + b * coeffs.Q
        return StabilityService._radii(lhs, rhs, 1.0 - z1 * coeffs.gamma)

    @staticmethod
    def stability_scan(
        coeffs: PeerCoefficients,
        re_min: float,
        re_max: float,
        im_min: float,
        im_max: float,
        resolution: int,
        z1: Optional[complex] = None,
    ) -> StabilityField:
        """
        Scan a rectangle of the complex plane.
        Without ``z1`` the implicit amplification M(z) is scanned; with ``z1`` the
        grid holds the explicit argument z0 of the IMEX pair at fixed implicit z1.
        """
        if resolution < 1:
            raise PeerError("Stability grid needs at least one point per axis")
        if re_min > re_max or im_min > im_max:
            raise PeerError("Stability grid bounds are reversed")

        re = np.linspace(re_min, re_max, resolution)
        im = np.linspace(im_min, im_max, resolution)
        xx, yy = np.meshgrid(re, im)
        zz = xx + 1j * yy

        if z1 is None:
            radius = StabilityService.implicit_amplification(coeffs, zz)
        else:
            radius = StabilityService.imex_amplification(coeffs, zz, z1)

        pole_rows, pole_cols = np.nonzero(np.isnan(radius))
        poles = [[float(re[j]), float(im[i])] for i, j in zip(pole_rows, pole_cols)]
        if poles:
            logger.warning("Stability scan of %s hit %d pole(s)", coeffs.label, len(poles))
        logger.info("Scanned %s on a %dx%d grid", coeffs.label, resolution, resolution)
        return StabilityField(re=re, im=im, radius=radius, poles=poles)
