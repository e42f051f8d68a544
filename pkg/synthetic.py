"""Planted-model hyperspectral scenes with known anomalies.

The background C-layer is built from ``r_true`` materials. Rows are split into
``r_true`` contiguous bands, one per material, and every (material, column)
pair gets its own non-negative unit tube peaked on the material's axis of the
spectral basis. All rows of a band agree within a column, so each Fourier
slice of the layer has rank at most ``r_true`` and the layer already satisfies
the unit-tube constraint. Spatial anomalies are tubes peaked on a different
axis, i.e. a material out of place.
"""

import numpy as np
import numpy.typing as npt
import structlog

from errors import InvalidInputError
from models import GroundTruth, SyntheticScene, Tensor3
from tensor_core import mode3_product

E1_NORM_RANGE = (0.2, 0.8)
MATERIAL_SPREAD = 0.1


def _random_tubes(rng: np.random.Generator, count: int, length: int, norm_range: tuple[float, float]) -> Tensor3:
    directions = rng.standard_normal((count, length))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * rng.uniform(*norm_range, size=(count, 1))


def _material_tubes(rng: np.random.Generator, axes: npt.NDArray[np.intp], b: int) -> npt.NDArray[np.float64]:
    """Unit tubes e_axis + U(0, MATERIAL_SPREAD) per entry, one row per axis."""
    tubes = rng.uniform(0.0, MATERIAL_SPREAD, size=(axes.size, b))
    tubes[np.arange(axes.size), axes] += 1.0
    return tubes / np.linalg.norm(tubes, axis=1, keepdims=True)


def _check_args(n1: int, n2: int, n3: int, b: int, r_true: int, anomaly_count: int, noise_sigma: float) -> None:
    if min(n1, n2, n3) < 1:
        raise InvalidInputError(f"Dimensions must be positive, got {n1}x{n2}x{n3}")
    if b < 2:
        raise InvalidInputError(f"b must be at least 2 to place a material out of position, got {b}")
    if not 1 <= r_true <= min(n1, n2):
        raise InvalidInputError(f"r_true must lie in 1..{min(n1, n2)}, got {r_true}")
    if anomaly_count < 0 or anomaly_count >= n1 * n2 / 10:
        raise InvalidInputError(f"anomaly_count must lie in [0, {n1 * n2 / 10:g}), got {anomaly_count}")
    if noise_sigma < 0:
        raise InvalidInputError(f"noise_sigma must be non-negative, got {noise_sigma}")


def background_layer(n1: int, n2: int, b: int, r_true: int, rng: np.random.Generator) -> Tensor3:
    """Unit-tube n1 x n2 x b layer of tubal rank ``r_true`` (for generic draws)."""
    row_class = np.empty(n1, dtype=np.intp)
    for m, rows in enumerate(np.array_split(np.arange(n1), r_true)):
        row_class[rows] = m
    axes = np.repeat(np.arange(r_true) % b, n2)
    tubes = _material_tubes(rng, axes, b).reshape(r_true, n2, b)
    return tubes[row_class]


def synth_dataset(
    n1: int,
    n2: int,
    n3: int,
    b: int,
    r_true: int,
    anomaly_count: int,
    noise_sigma: float,
    seed: int,
) -> SyntheticScene:
    """Generate H = C x_3 B + E1 + noise with C the background layer plus spatial anomalies.

    E1 and E2 share the same ``anomaly_count`` random pixels. At those pixels the
    C-layer tube is replaced by a tube peaked on another axis of B, so the stored
    E2 (the difference to the background) has norm in [0.5, 1.5].
    E1 tubes have norms in [0.2, 0.8]. B is entrywise non-negative.

    Raises:
        InvalidInputError: On parameter violations
    """
    _check_args(n1, n2, n3, b, r_true, anomaly_count, noise_sigma)
    logger = structlog.get_logger(__name__)
    rng = np.random.default_rng(seed)

    background = background_layer(n1, n2, b, r_true, rng)
    pixels = rng.choice(n1 * n2, size=anomaly_count, replace=False)
    rows, cols = np.unravel_index(pixels, (n1, n2))

    c_layer = background.copy()
    axes = np.argmax(c_layer[rows, cols, :], axis=1)
    offsets = rng.integers(1, b, size=anomaly_count)
    c_layer[rows, cols, :] = _material_tubes(rng, (axes + offsets) % b, b)
    e2 = c_layer - background

    e1 = np.zeros((n1, n2, n3))
    e1[rows, cols, :] = _random_tubes(rng, anomaly_count, n3, E1_NORM_RANGE)

    basis = rng.uniform(0.0, 1.0, size=(n3, b))
    h = mode3_product(c_layer, basis) + e1
    if noise_sigma > 0:
        h = h + noise_sigma * rng.standard_normal(h.shape)

    labels: npt.NDArray[np.bool_] = np.zeros((n1, n2), dtype=bool)
    labels[rows, cols] = True

    logger.info(
        "Synthetic scene generated",
        shape=(n1, n2, n3),
        b=b,
        r_true=r_true,
        anomalies=anomaly_count,
        noise_sigma=noise_sigma,
        seed=seed,
    )
    return SyntheticScene(
        h=h,
        ground_truth=GroundTruth(labels=labels),
        c_layer=c_layer,
        basis=basis,
        e1=e1,
        e2=e2,
        rank=r_true,
    )
