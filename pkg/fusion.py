"""Spectral/spatial detection maps and their guided-filter fusion."""

from typing import Literal

import numpy as np

from errors import DimensionMismatchError, InvalidInputError
from models import GuidedFilterParams, Map2D, Tensor3
from tensor_core import tube_norms

FusionMode = Literal["single", "nested"]


def spectral_map(e1: Tensor3) -> Map2D:
    """T1: per-pixel norm of the spectral anomaly tube E1(i, j, :)."""
    return tube_norms(np.asarray(e1, dtype=np.float64))


def spatial_map(e2: Tensor3) -> Map2D:
    """T2: per-pixel norm of the spatial anomaly tube E2(i, j, :)."""
    return tube_norms(np.asarray(e2, dtype=np.float64))


def minmax_scale(m: Map2D) -> Map2D:
    """Scale to [0, 1]; a constant map becomes all zero."""
    m = np.asarray(m, dtype=np.float64)
    lo, hi = float(m.min()), float(m.max())
    if hi <= lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def box_filter(m: Map2D, radius: int) -> Map2D:
    """Mean over the (2r+1)^2 window clipped to the image, via a summed-area table."""
    if radius < 1:
        raise InvalidInputError(f"Box filter radius must be >= 1, got {radius}")
    m = np.asarray(m, dtype=np.float64)
    n1, n2 = m.shape

    sat = np.zeros((n1 + 1, n2 + 1))
    sat[1:, 1:] = m.cumsum(axis=0).cumsum(axis=1)

    rows = np.arange(n1)
    cols = np.arange(n2)
    top = np.clip(rows - radius, 0, n1)
    bottom = np.clip(rows + radius + 1, 0, n1)
    left = np.clip(cols - radius, 0, n2)
    right = np.clip(cols + radius + 1, 0, n2)

    window_sum = (
        sat[np.ix_(bottom, right)] - sat[np.ix_(top, right)] - sat[np.ix_(bottom, left)] + sat[np.ix_(top, left)]
    )
    counts = np.outer(bottom - top, right - left)
    return window_sum / counts


def guided_filter(source: Map2D, guide: Map2D, params: GuidedFilterParams) -> Map2D:
    """Edge-preserving filter of ``source`` with a local linear model in ``guide``."""
    source = np.asarray(source, dtype=np.float64)
    guide = np.asarray(guide, dtype=np.float64)
    if source.shape != guide.shape:
        raise DimensionMismatchError(f"Guided filter input {source.shape} and guide {guide.shape} differ")

    r = params.radius
    mean_i = box_filter(guide, r)
    mean_p = box_filter(source, r)
    cov_ip = box_filter(guide * source, r) - mean_i * mean_p
    var_i = box_filter(guide * guide, r) - mean_i * mean_i

    a = cov_ip / (var_i + params.eps)
    b = mean_p - a * mean_i
    return box_filter(a, r) * guide + box_filter(b, r)


def hadamard_map(t1: Map2D, t2: Map2D) -> Map2D:
    """T1 o T2."""
    if t1.shape != t2.shape:
        raise DimensionMismatchError(f"Detection maps differ in shape: {t1.shape} vs {t2.shape}")
    return np.asarray(t1, dtype=np.float64) * np.asarray(t2, dtype=np.float64)


def fuse(t1: Map2D, t2: Map2D, mode: FusionMode, params: GuidedFilterParams) -> Map2D:
    """Fuse spectral and spatial maps into the final detection map in [0, 1].

    ``single`` filters the [0, 1]-scaled Hadamard product guided by itself;
    ``nested`` follows with two more passes guided by T1 and then T2.
    """
    product = minmax_scale(hadamard_map(t1, t2))
    fused = guided_filter(product, product, params)
    if mode == "nested":
        fused = guided_filter(fused, minmax_scale(t1), params)
        fused = guided_filter(fused, minmax_scale(t2), params)
    elif mode != "single":
        raise InvalidInputError(f"Unknown fusion mode '{mode}'")
    return minmax_scale(fused)
