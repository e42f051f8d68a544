"""Proximal and projection operators for the PAM block updates.

Group penalties act on mode-3 tubes (capped L1, phi(x) = min{x, 1}) and on
lateral slices (capped Lp, psi(x) = min{x^p / nu^p, 1}). Both reduce to a
scalar problem on the group norm with the direction kept.
"""

import numpy as np
import numpy.typing as npt
from scipy.optimize import bisect

from errors import DegenerateInputError
from models import CapLpParams, Matrix, Tensor3
from tensor_core import conj_transpose, lateral_slice_norms, tprod, tsvd, tube_norms

BISECT_XTOL = 1e-12
BISECT_MAXITER = 200


def capl1_penalty(x: Tensor3) -> float:
    """sum over tubes of min{||x(i, j, :)||, 1}."""
    return float(np.sum(np.minimum(tube_norms(x), 1.0)))


def caplp_penalty(z: Tensor3, p: float, nu: float) -> float:
    """sum over lateral slices of min{||z(:, j, :)||^p / nu^p, 1}."""
    return float(np.sum(np.minimum((lateral_slice_norms(z) / nu) ** p, 1.0)))


def prox_group_capl1(e_hat: Tensor3, lambda_hat: float) -> Tensor3:
    """Exact prox of lambda_hat * sum_tubes min{||.||, 1} applied tube-wise.

    Below lambda_hat = 2, tubes with norm up to 1 + lambda_hat / 2 are
    soft-thresholded (zeroed when the norm is at most lambda_hat) and longer
    tubes sit on the flat part of the cap and are returned unchanged. From
    lambda_hat = 2 on the shrink branch never wins and the prox is a hard
    threshold at sqrt(2 * lambda_hat).
    """
    if lambda_hat <= 0:
        raise ValueError(f"lambda_hat must be positive, got {lambda_hat}")
    e = tube_norms(e_hat)
    if lambda_hat >= 2.0:
        keep = (e > np.sqrt(2.0 * lambda_hat)).astype(np.float64)
        return e_hat * keep[:, :, np.newaxis]
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(e > 0, np.maximum(0.0, 1.0 - lambda_hat / e), 0.0)
    factor = np.where(e > 1.0 + lambda_hat / 2.0, 1.0, shrink)
    return e_hat * factor[:, :, np.newaxis]


def _prox_lp(z: float, lam: float, p: float) -> float:
    """Global minimizer over u >= 0 of lam * u^p + (u - z)^2 / 2 for z >= 0."""
    pi1 = (2.0 * lam * (1.0 - p)) ** (1.0 / (2.0 - p))
    pi2 = pi1 + lam * p * pi1 ** (p - 1.0)
    if z <= pi2:
        return 0.0

    def g(u: float) -> float:
        return u + lam * p * u ** (p - 1.0) - z

    # g(pi1) = pi2 - z < 0 < g(z) and g is increasing on (pi1, z)
    return float(bisect(g, pi1, z, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER))


def prox_caplp_scalar(z: float, params: CapLpParams, literal: bool = False) -> float:
    """argmin over u >= 0 of lambda_hat * psi(u) + (u - z)^2 / 2.

    Args:
        z: Non-negative group norm
        params: Penalty weight and shape
        literal: Use lambda_hat itself as the inner Lp prox weight and compare only
            the two candidates u1 = min{prox(z), nu}, u2 = max{z, nu}

    Returns:
        Minimizing magnitude; ties resolve to the smaller candidate
    """
    if z < 0:
        raise ValueError(f"Group norm must be non-negative, got {z}")
    if z == 0:
        return 0.0

    lam, p, nu = params.lambda_hat, params.p, params.nu

    def objective(u: float) -> float:
        return lam * min((u / nu) ** p, 1.0) + 0.5 * (u - z) ** 2

    if literal:
        u1 = min(_prox_lp(z, lam, p), nu)
        candidates = [u1, max(z, nu)]
    else:
        u1 = min(_prox_lp(z, lam / nu**p, p), nu)
        candidates = [0.0, u1, nu, max(z, nu)]

    return min(sorted(set(candidates)), key=objective)


def prox_group_caplp(z_hat: Tensor3, params: CapLpParams, literal: bool = False) -> Tensor3:
    """Apply :func:`prox_caplp_scalar` to every lateral-slice norm, keeping directions."""
    norms = lateral_slice_norms(z_hat)
    out = np.zeros_like(z_hat)
    for j in np.flatnonzero(norms > 0):
        magnitude = prox_caplp_scalar(float(norms[j]), params, literal=literal)
        if magnitude > 0:
            out[:, j, :] = z_hat[:, j, :] * (magnitude / norms[j])
    return out


def project_unit_tubes(c_hat: Tensor3) -> Tensor3:
    """Scale every mode-3 tube to unit norm.

    Raises:
        DegenerateInputError: If any tube is zero
    """
    norms = tube_norms(c_hat)
    zero = norms == 0
    if np.any(zero):
        raise DegenerateInputError(f"{int(zero.sum())} zero tube(s) cannot be normalized")
    return c_hat / norms[:, :, np.newaxis]


def project_nonneg(b_hat: Matrix) -> Matrix:
    return np.maximum(b_hat, 0.0)


def procrustes_orth(g: Tensor3) -> Tensor3:
    """argmax of <D, g> over D with D^T * D = I, computed as U * V^T from the T-SVD of g."""
    n1, r = g.shape[0], g.shape[1]
    if r > n1:
        raise DegenerateInputError(f"Orthogonal factor needs r <= n1, got r={r}, n1={n1}")
    factors = tsvd(g, economy=True)
    return tprod(factors.u, conj_transpose(factors.v))


def frobenius_inner(x: npt.NDArray[np.float64], y: npt.NDArray[np.float64]) -> float:
    return float(np.sum(x * y))
