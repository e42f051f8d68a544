"""Third-order tensor algebra under the t-product.

Tensors are numpy arrays of shape (n1, n2, n3) indexed x[i, j, k]; the third
axis is the tube (spectral) axis. The t-product and T-SVD are evaluated slice
by slice in the Fourier domain along that axis. Because every tensor handled
here is real, only the first n3 // 2 + 1 Fourier slices are computed (the
rest are their complex conjugates), which is exactly what ``numpy.fft.rfft``
returns. DFT convention: unnormalized forward transform, 1/n3-scaled inverse.
"""

import numpy as np
import numpy.typing as npt
import structlog

from errors import DimensionMismatchError, NumericFailureError
from models import FTensor3, Matrix, Tensor3, TSvdFactors

logger = structlog.get_logger(__name__)

SPECTRAL_NORM_MAX_ITER = 100
SPECTRAL_NORM_RTOL = 1e-10
TUBAL_RANK_RTOL = 1e-8


def _as_tensor3(x: npt.ArrayLike, name: str = "x") -> Tensor3:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionMismatchError(f"{name} must be a third-order tensor, got shape {arr.shape}")
    return arr


def _half_spectrum(x: Tensor3) -> npt.NDArray[np.complex128]:
    """Fourier slices 0..n3//2 stacked on the leading axis: shape (n3//2 + 1, n1, n2)."""
    return np.moveaxis(np.fft.rfft(x, axis=2), 2, 0)


def _from_half_spectrum(half: npt.NDArray[np.complex128], n3: int) -> Tensor3:
    return np.fft.irfft(np.moveaxis(half, 0, 2), n=n3, axis=2)


def _real_slices(n3: int) -> list[int]:
    # DC and (for even n3) Nyquist slices of a real tensor are real matrices.
    return [0, n3 // 2] if n3 % 2 == 0 and n3 > 1 else [0]


def dft3(x: Tensor3) -> FTensor3:
    """DFT along the third mode (unnormalized)."""
    return np.fft.fft(_as_tensor3(x), axis=2)


def idft3(xf: FTensor3) -> Tensor3:
    """Inverse of :func:`dft3`; the imaginary residue of a conjugate-symmetric input is dropped."""
    return np.fft.ifft(np.asarray(xf), axis=2).real


def band_sequential(x: Tensor3) -> npt.NDArray[np.float64]:
    """Flatten with band k outermost, row i, then column j: offset (k*n1 + i)*n2 + j."""
    return np.ascontiguousarray(np.transpose(_as_tensor3(x), (2, 0, 1))).ravel()


def from_band_sequential(values: npt.ArrayLike, n1: int, n2: int, n3: int) -> Tensor3:
    flat = np.asarray(values, dtype=np.float64)
    if flat.size != n1 * n2 * n3:
        raise DimensionMismatchError(f"Expected {n1 * n2 * n3} values for {n1}x{n2}x{n3}, got {flat.size}")
    return np.ascontiguousarray(flat.reshape(n3, n1, n2).transpose(1, 2, 0))


def _check_tprod_dims(x: Tensor3, y: Tensor3) -> None:
    if x.shape[1] != y.shape[0] or x.shape[2] != y.shape[2]:
        raise DimensionMismatchError(f"t-product needs n1 x n2 x n3 by n2 x n4 x n3 operands, got {x.shape} and {y.shape}")


def tprod(x: Tensor3, y: Tensor3) -> Tensor3:
    """t-product x * y of an n1 x n2 x n3 and an n2 x n4 x n3 tensor."""
    x = _as_tensor3(x, "x")
    y = _as_tensor3(y, "y")
    _check_tprod_dims(x, y)
    return _from_half_spectrum(_half_spectrum(x) @ _half_spectrum(y), x.shape[2])


def bcirc(x: Tensor3) -> Matrix:
    """Block circulant matrix of x: block (p, q) is the frontal slice (p - q) mod n3."""
    x = _as_tensor3(x)
    n1, n2, n3 = x.shape
    out = np.zeros((n1 * n3, n2 * n3))
    for p in range(n3):
        for q in range(n3):
            out[p * n1 : (p + 1) * n1, q * n2 : (q + 1) * n2] = x[:, :, (p - q) % n3]
    return out


def unfold(y: Tensor3) -> Matrix:
    """Stack frontal slices vertically: (n2 * n3) x n4."""
    y = _as_tensor3(y)
    return np.concatenate([y[:, :, k] for k in range(y.shape[2])], axis=0)


def fold(m: Matrix, n1: int, n3: int) -> Tensor3:
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] != n1 * n3:
        raise DimensionMismatchError(f"Cannot fold {m.shape[0]} rows into {n3} slices of {n1} rows")
    return np.stack([m[k * n1 : (k + 1) * n1] for k in range(n3)], axis=2)


def bcirc_oracle_tprod(x: Tensor3, y: Tensor3) -> Tensor3:
    """Literal fold(bcirc(x) @ unfold(y)); reference for :func:`tprod`, not used by the solver."""
    x = _as_tensor3(x, "x")
    y = _as_tensor3(y, "y")
    _check_tprod_dims(x, y)
    return fold(bcirc(x) @ unfold(y), x.shape[0], x.shape[2])


def conj_transpose(x: Tensor3) -> Tensor3:
    """Transpose every frontal slice and reverse the order of slices 2..n3."""
    x = _as_tensor3(x)
    reordered = np.concatenate([x[:, :, :1], x[:, :, :0:-1]], axis=2)
    return np.ascontiguousarray(reordered.transpose(1, 0, 2))


def identity_tensor(n: int, n3: int) -> Tensor3:
    """n x n x n3 tensor whose first frontal slice is the identity and the rest zero."""
    if n < 1 or n3 < 1:
        raise DimensionMismatchError(f"Identity tensor needs n, n3 >= 1, got n={n}, n3={n3}")
    out = np.zeros((n, n, n3))
    out[:, :, 0] = np.eye(n)
    return out


def tsvd(x: Tensor3, economy: bool = True) -> TSvdFactors:
    """T-SVD x = U * S * V^T computed from per-Fourier-slice matrix SVDs.

    Args:
        x: Tensor to factorize
        economy: Return n1 x q x n3 / q x q x n3 / n2 x q x n3 factors with q = min(n1, n2)

    Returns:
        TSvdFactors with orthogonal U, V and f-diagonal S

    Raises:
        NumericFailureError: If a slice SVD does not converge
    """
    x = _as_tensor3(x)
    n1, n2, n3 = x.shape
    q = min(n1, n2)
    half = _half_spectrum(x)

    try:
        uf, sf, vhf = np.linalg.svd(half, full_matrices=not economy)
        for k in _real_slices(n3):
            u_k, s_k, vh_k = np.linalg.svd(half[k].real, full_matrices=not economy)
            uf[k], sf[k], vhf[k] = u_k, s_k, vh_k
    except np.linalg.LinAlgError as e:
        logger.error("Slice SVD did not converge", shape=x.shape)
        raise NumericFailureError(f"T-SVD failed to converge for tensor of shape {x.shape}") from e

    s_rows, s_cols = (q, q) if economy else (n1, n2)
    s_half = np.zeros((half.shape[0], s_rows, s_cols), dtype=np.complex128)
    idx = np.arange(q)
    s_half[:, idx, idx] = sf
    vf = np.conj(np.swapaxes(vhf, 1, 2))

    return TSvdFactors(
        u=_from_half_spectrum(uf, n3),
        s=_from_half_spectrum(s_half, n3),
        v=_from_half_spectrum(vf, n3),
        economy=economy,
    )


def tubal_rank(x: Tensor3, tol: float | None = None) -> int:
    """Number of singular tubes S(i, i, :) with norm above ``tol``.

    The default tolerance is 1e-8 times the largest singular tube norm.
    """
    norms = tsvd(x).singular_tube_norms
    if norms.size == 0:
        return 0
    if tol is None:
        tol = TUBAL_RANK_RTOL * float(norms.max())
    if tol < 0:
        raise ValueError(f"Tolerance must be non-negative, got {tol}")
    return int(np.count_nonzero(norms > tol))


def mode3_unfold(x: Tensor3) -> Matrix:
    """X_(3) of shape n3 x (n1 * n2) with column i * n2 + j holding the tube x[i, j, :]."""
    x = _as_tensor3(x)
    n1, n2, n3 = x.shape
    return np.ascontiguousarray(x.reshape(n1 * n2, n3).T)


def mode3_fold(m: Matrix, dims: tuple[int, int, int]) -> Tensor3:
    n1, n2, n3 = dims
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (n3, n1 * n2):
        raise DimensionMismatchError(f"Cannot fold matrix of shape {m.shape} into {dims}")
    return np.ascontiguousarray(m.T.reshape(n1, n2, n3))


def mode3_product(x: Tensor3, m: Matrix) -> Tensor3:
    """(x x_3 m)(i, j, k) = sum_l x(i, j, l) m(k, l)."""
    x = _as_tensor3(x)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != x.shape[2]:
        raise DimensionMismatchError(f"Mode-3 product needs a p x {x.shape[2]} matrix, got {m.shape}")
    return np.tensordot(x, m, axes=([2], [1]))


def spectral_norm(
    m: Matrix,
    max_iter: int = SPECTRAL_NORM_MAX_ITER,
    rtol: float = SPECTRAL_NORM_RTOL,
) -> float:
    """Largest singular value by power iteration on the smaller Gram matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0 or not np.any(m):
        return 0.0

    gram = m.T @ m if m.shape[1] <= m.shape[0] else m @ m.T
    v = np.random.default_rng(0).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)

    estimate = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            break
        v = w / norm_w
        converged = abs(norm_w - estimate) <= rtol * norm_w
        estimate = norm_w
        if converged:
            break
    return float(np.sqrt(estimate))


def tube_norms(x: Tensor3) -> npt.NDArray[np.float64]:
    """Euclidean norm of every mode-3 tube x[i, j, :], shape (n1, n2)."""
    return np.sqrt(np.sum(np.square(x), axis=2))


def lateral_slice_norms(x: Tensor3) -> npt.NDArray[np.float64]:
    """Frobenius norm of every lateral slice x[:, j, :], shape (n2,)."""
    return np.sqrt(np.sum(np.square(x), axis=(0, 2)))


def group_support(z: Tensor3, tol: float = 0.0) -> frozenset[int]:
    """Indices j of lateral slices with norm above ``tol`` (zero-based)."""
    if tol < 0:
        raise ValueError(f"Tolerance must be non-negative, got {tol}")
    return frozenset(int(j) for j in np.flatnonzero(lateral_slice_norms(_as_tensor3(z)) > tol))
