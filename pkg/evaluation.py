"""Detection-quality metrics and the RX baseline detector."""

import numpy as np
import numpy.typing as npt
import scipy.linalg
from sklearn.metrics import auc as trapezoid_auc
from sklearn.metrics import roc_curve as sklearn_roc_curve

from errors import DimensionMismatchError, InvalidInputError, NumericFailureError
from fusion import minmax_scale
from models import ClassSummary, EvalReport, GroundTruth, Map2D, Tensor3
from tensor_core import mode3_unfold

RX_LOADING = 1e-6


def _check_pair(score: Map2D, gt: GroundTruth) -> npt.NDArray[np.float64]:
    score = np.asarray(score, dtype=np.float64)
    if score.shape != gt.shape:
        raise DimensionMismatchError(f"Score map {score.shape} and ground truth {gt.shape} differ")
    if not np.all(np.isfinite(score)):
        raise InvalidInputError("Score map contains non-finite values")
    gt.require_both_classes()
    return score


def roc_curve(score: Map2D, gt: GroundTruth) -> npt.NDArray[np.float64]:
    """ROC points (FPR, TPR), one per distinct score threshold, from (0, 0) to (1, 1).

    Raises:
        InvalidInputError: If the ground truth has a single class
        DimensionMismatchError: If the map and mask shapes differ
    """
    score = _check_pair(score, gt)
    fpr, tpr, _ = sklearn_roc_curve(gt.labels.ravel(), score.ravel(), drop_intermediate=False)
    return np.column_stack([fpr, tpr])


def auc(roc: npt.NDArray[np.float64]) -> float:
    """Trapezoidal area under the ROC points."""
    return float(trapezoid_auc(roc[:, 0], roc[:, 1]))


def five_number_summary(values: npt.NDArray[np.float64]) -> ClassSummary:
    q = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return ClassSummary(*(float(v) for v in q))


def separability_stats(score: Map2D, gt: GroundTruth) -> tuple[ClassSummary, ClassSummary]:
    """(background, anomaly) five-number summaries of the [0, 1]-normalized scores."""
    score = minmax_scale(_check_pair(score, gt))
    return five_number_summary(score[~gt.labels]), five_number_summary(score[gt.labels])


def evaluate(score: Map2D, gt: GroundTruth, name: str = "T") -> EvalReport:
    roc = roc_curve(score, gt)
    background, anomaly = separability_stats(score, gt)
    return EvalReport(roc=roc, auc=auc(roc), background=background, anomaly=anomaly, name=name)


def rx_baseline(h: Tensor3) -> Map2D:
    """Global RX: Mahalanobis distance of every pixel spectrum to the scene mean.

    Raises:
        InvalidInputError: If the cube has fewer than two pixels
        NumericFailureError: If the loaded covariance is still singular
    """
    h = np.asarray(h, dtype=np.float64)
    n1, n2, n3 = h.shape
    if n1 * n2 < 2:
        raise InvalidInputError(f"RX needs at least two pixels, got {n1}x{n2}")
    pixels = mode3_unfold(h).T
    centered = pixels - pixels.mean(axis=0)

    cov = np.atleast_2d(np.cov(pixels, rowvar=False))
    trace = float(np.trace(cov))
    # Absolute floor: a constant cube leaves only round-off in the trace
    cov[np.diag_indices(n3)] += RX_LOADING * max(trace / n3, 1.0)

    try:
        factor = scipy.linalg.cho_factor(cov)
        whitened = scipy.linalg.cho_solve(factor, centered.T)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericFailureError(f"RX covariance is singular: {e}") from e

    return np.einsum("pk,kp->p", centered, whitened).reshape(n1, n2)
