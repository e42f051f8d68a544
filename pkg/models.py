"""Data models shared by the tensor algebra, solver, fusion and evaluation layers."""

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from errors import InvalidInputError

# Dense third-order tensor, shape (n1, n2, n3), indexed x[i, j, k].
Tensor3 = npt.NDArray[np.float64]
# Mode-3 DFT of a Tensor3, complex, same shape.
FTensor3 = npt.NDArray[np.complex128]
Matrix = npt.NDArray[np.float64]
Map2D = npt.NDArray[np.float64]


@dataclass
class TSvdFactors:
    """T-SVD factors x = U * S * V^T."""

    u: Tensor3
    s: Tensor3
    v: Tensor3
    economy: bool = True

    @property
    def singular_tube_norms(self) -> npt.NDArray[np.float64]:
        """Frobenius norm of each diagonal tube S(i, i, :)."""
        q = min(self.s.shape[0], self.s.shape[1])
        idx = np.arange(q)
        return np.linalg.norm(self.s[idx, idx, :], axis=1)


@dataclass(frozen=True)
class CapLpParams:
    """Shape of the capped-Lp penalty psi(x) = min{x^p / nu^p, 1} and its prox weight."""

    lambda_hat: float
    p: float = 0.5
    nu: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise InvalidInputError(f"CapLp exponent p must lie in (0, 1), got {self.p}")
        if self.nu <= 0.0:
            raise InvalidInputError(f"CapLp cap location nu must be positive, got {self.nu}")
        if self.lambda_hat <= 0.0:
            raise InvalidInputError(f"CapLp weight must be positive, got {self.lambda_hat}")


@dataclass(frozen=True)
class GuidedFilterParams:
    """Guided image filter window half-width and regularization."""

    radius: int = 2
    eps: float = 1e-2

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise InvalidInputError(f"Guided filter radius must be >= 1, got {self.radius}")
        if self.eps <= 0.0:
            raise InvalidInputError(f"Guided filter eps must be positive, got {self.eps}")


@dataclass
class GroundTruth:
    """Per-pixel anomaly labels (True = anomaly)."""

    labels: npt.NDArray[np.bool_]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def positives(self) -> int:
        return int(self.labels.sum())

    @property
    def negatives(self) -> int:
        return int(self.labels.size - self.labels.sum())

    def require_both_classes(self) -> None:
        """Raise if either class is empty.

        Raises:
            InvalidInputError: If the mask marks no anomaly or no background pixel
        """
        if self.positives == 0 or self.negatives == 0:
            raise InvalidInputError(
                f"Ground truth must contain both classes (anomalies={self.positives}, background={self.negatives})"
            )


@dataclass
class SolverState:
    """PAM iterate W^t = (C, B, E1, D, Z, E2) plus parked lateral slices of D."""

    c: Tensor3
    basis: Matrix
    e1: Tensor3
    d: Tensor3
    z: Tensor3
    e2: Tensor3
    d_sub: Tensor3
    iteration: int = 0

    @property
    def rank(self) -> int:
        return int(self.d.shape[1])

    @property
    def parked(self) -> int:
        return int(self.d_sub.shape[1])

    def blocks(self) -> tuple[npt.NDArray[np.float64], ...]:
        return (self.c, self.basis, self.e1, self.d, self.z, self.e2)

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(block**2) for block in self.blocks())))


@dataclass
class Trace:
    """Per-iteration record of a solver run; row 0 is the initial state."""

    objective: list[float] = field(default_factory=list)
    step: list[float] = field(default_factory=list)
    rank: list[int] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    removed: list[int] = field(default_factory=list)
    restored: list[int] = field(default_factory=list)

    def record(
        self,
        objective: float,
        step: float,
        rank: int,
        seconds: float,
        removed: int = 0,
        restored: int = 0,
    ) -> None:
        self.objective.append(objective)
        self.step.append(step)
        self.rank.append(rank)
        self.seconds.append(seconds)
        self.removed.append(removed)
        self.restored.append(restored)

    def __len__(self) -> int:
        return len(self.objective)

    def rows(self) -> list[tuple[int, float, float, int, float, int, int]]:
        return [
            (t, f, s, r, sec, rem, res)
            for t, (f, s, r, sec, rem, res) in enumerate(
                zip(self.objective, self.step, self.rank, self.seconds, self.removed, self.restored, strict=True)
            )
        ]


@dataclass
class DetectionResult:
    """Detection maps and solver diagnostics of one run."""

    t1: Map2D
    t2: Map2D
    t12: Map2D
    t: Map2D
    state: SolverState
    trace: Trace
    seconds: float


@dataclass
class ClassSummary:
    """Five-number summary of normalized scores for one class."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.q3, self.maximum)


@dataclass
class EvalReport:
    """ROC curve, AUC and anomaly/background separability of one score map."""

    roc: npt.NDArray[np.float64]
    auc: float
    background: ClassSummary
    anomaly: ClassSummary
    name: str = "T"


@dataclass
class SyntheticScene:
    """Planted-model cube with its ground truth and the components it was built from."""

    h: Tensor3
    ground_truth: GroundTruth
    c_layer: Tensor3
    basis: Matrix
    e1: Tensor3
    e2: Tensor3
    rank: int


@dataclass
class BenchRecord:
    """One benchmark run: solver variant, swept parameter values and outcome."""

    variant: str
    lambda4: float
    b: int
    seconds: float
    final_rank: int
    iterations: int
    auc: float
