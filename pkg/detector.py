"""Detection pipeline: cube -> LTD solve -> detection maps -> artifacts on disk."""

import json
import time
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import structlog

from config import LtdParams
from cube_io import normalize_cube, read_cube, write_map_pgm, write_scores_csv, write_trace_csv
from errors import CubeIOError, InvalidInputError
from evaluation import auc, roc_curve, rx_baseline
from fusion import fuse, hadamard_map, spatial_map, spectral_map
from models import BenchRecord, DetectionResult, Tensor3
from report_renderer import ReportRenderer
from solver import LtdSolver
from synthetic import synth_dataset

ERROR_FAILED_TO_CREATE_OUTPUT = "Failed to create output directory {path}: {error}"
ERROR_FAILED_TO_WRITE_SUMMARY = "Failed to write summary to {path}"

MAP_NAMES = ("T1", "T2", "T")
SUMMARY_FILE = "summary.json"

BENCH_VARIANTS: dict[str, dict[str, bool]] = {
    "fixed": {"rank_reduction": False, "validation": False},
    "rr": {"rank_reduction": True, "validation": True},
    "rr-novalid": {"rank_reduction": True, "validation": False},
}
BENCH_LAMBDA4 = (1e-2, 1e-1, 5e-1, 1.0)


def ensure_out_dir(out_dir: Path) -> Path:
    """Create ``out_dir`` (and parents) if needed.

    Raises:
        CubeIOError: If the directory cannot be created
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CubeIOError(ERROR_FAILED_TO_CREATE_OUTPUT.format(path=out_dir, error=e.strerror or e)) from e
    return out_dir


class AnomalyDetector:
    """Run the LTD model on a cube and produce spectral, spatial and fused maps."""

    def __init__(self, params: LtdParams, solver: LtdSolver | None = None) -> None:
        """Initialize detector.

        Args:
            params: Validated run parameters
            solver: Solver to use; built from ``params`` when omitted
        """
        self.logger: structlog.typing.FilteringBoundLogger = structlog.get_logger(__name__)
        self.params: LtdParams = params
        self.solver: LtdSolver = solver or LtdSolver(params)

    def prepare(self, h: Tensor3) -> Tensor3:
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 3:
            raise InvalidInputError(f"Cube must be a third-order tensor, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidInputError("Cube contains non-finite values")
        if self.params.normalize_input:
            self.logger.debug("Normalizing cube", peak=self.params.normalize_peak)
            return normalize_cube(h, peak=self.params.normalize_peak)
        return h

    def detect(self, h: Tensor3) -> DetectionResult:
        """Decompose ``h`` and build T1, T2, their Hadamard product and the fused map T.

        Raises:
            InvalidInputError: If the cube is malformed or constant
            NumericFailureError: If the solver diverges
        """
        start = time.perf_counter()
        h = self.prepare(h)
        state, trace = self.solver.run(h)

        t1 = spectral_map(state.e1)
        t2 = spatial_map(state.e2)
        t12 = hadamard_map(t1, t2)
        t = fuse(t1, t2, self.params.fusion_mode, self.params.guided_filter())

        seconds = time.perf_counter() - start
        self.logger.info(
            "Detection finished",
            shape=h.shape,
            iterations=state.iteration,
            r=state.rank,
            fusion_mode=self.params.fusion_mode,
            seconds=round(seconds, 3),
        )
        return DetectionResult(t1=t1, t2=t2, t12=t12, t=t, state=state, trace=trace, seconds=seconds)

    def detect_file(self, cube_path: Path, out_dir: Path, rx: bool = False) -> DetectionResult:
        """Read a cube, detect, and write maps, tables and the run summary into ``out_dir``."""
        self.logger.info("Detecting anomalies", cube=str(cube_path), out=str(out_dir), rx=rx)
        h = read_cube(cube_path)
        # Create or validate the output directory up front
        out_dir = ensure_out_dir(out_dir)

        result = self.detect(h)

        # Score maps first, then the per-iteration trace and the JSON summary
        self._write_maps(out_dir, result)
        write_trace_csv(out_dir / "trace.csv", result.trace)
        self._write_summary(out_dir, result)

        # RX sees the same normalized cube as the solver
        if rx:
            self.logger.info("Computing RX baseline")
            rx_map = rx_baseline(self.prepare(h))
            write_scores_csv(out_dir / "RX.csv", rx_map)
            write_map_pgm(out_dir / "RX.pgm", rx_map)

        self.logger.info("Artifacts written", out=str(out_dir))
        return result

    def _write_maps(self, out_dir: Path, result: DetectionResult) -> None:
        for name, m in zip(MAP_NAMES, (result.t1, result.t2, result.t), strict=True):
            write_map_pgm(out_dir / f"{name}.pgm", m)
        write_scores_csv(out_dir / "T.csv", result.t)
        write_scores_csv(out_dir / "T12.csv", result.t12)

    def _write_summary(self, out_dir: Path, result: DetectionResult) -> None:
        summary = {
            "shape": list(result.t.shape),
            "final_rank": result.state.rank,
            "parked_slices": result.state.parked,
            "iterations": result.state.iteration,
            "objective": result.trace.objective[-1],
            "seconds": result.seconds,
            "params": self.params.model_dump(),
        }
        path = out_dir / SUMMARY_FILE
        try:
            path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        except OSError as e:
            self.logger.error("Failed to write summary", path=str(path), error=str(e))
            raise CubeIOError(ERROR_FAILED_TO_WRITE_SUMMARY.format(path=path)) from e


@dataclass
class BenchScene:
    """Synthetic scene parameters for a benchmark sweep."""

    n1: int = 64
    n2: int = 64
    n3: int = 30
    r_true: int = 3
    anomaly_count: int = 40
    noise_sigma: float = 1e-2
    seed: int = 0


class SolverBenchmark:
    """Compare the fixed-size, rank-reduced and unvalidated rank-reduced solvers on one scene."""

    def __init__(self, params: LtdParams, renderer: ReportRenderer) -> None:
        self.logger: structlog.typing.FilteringBoundLogger = structlog.get_logger(__name__)
        self.params: LtdParams = params
        self.renderer: ReportRenderer = renderer

    def _variant_params(self, variant: str, lambda4: float, b: int) -> LtdParams:
        update = {**self.params.model_dump(), **BENCH_VARIANTS[variant], "lambda4": lambda4, "b": b}
        if self.params.dataset_profile != "custom":
            update.pop("lambda6")
        return LtdParams(**update)

    def run(
        self,
        scene: BenchScene,
        lambda4_values: Sequence[float] = BENCH_LAMBDA4,
        b_values: Sequence[int] | None = None,
        variants: Iterable[str] = BENCH_VARIANTS,
    ) -> list[BenchRecord]:
        """Run every variant for every (lambda4, b) pair; one synthetic scene per b.

        Raises:
            InvalidInputError: If a variant name is unknown or a grid is empty
        """
        variants = list(variants)
        unknown = [v for v in variants if v not in BENCH_VARIANTS]
        if unknown:
            raise InvalidInputError(f"Unknown benchmark variant(s): {', '.join(unknown)}")
        b_values = list(b_values) if b_values else [self.params.b]
        if not lambda4_values or not variants:
            raise InvalidInputError("Benchmark grid is empty")

        records: list[BenchRecord] = []
        for b in b_values:
            data = synth_dataset(
                scene.n1, scene.n2, scene.n3, b, scene.r_true, scene.anomaly_count, scene.noise_sigma, scene.seed
            )
            for lambda4 in lambda4_values:
                for variant in variants:
                    detector = AnomalyDetector(self._variant_params(variant, lambda4, b))
                    result = detector.detect(data.h)
                    record = BenchRecord(
                        variant=variant,
                        lambda4=float(lambda4),
                        b=b,
                        seconds=result.trace.seconds[-1],
                        final_rank=result.state.rank,
                        iterations=result.state.iteration,
                        auc=auc(roc_curve(result.t, data.ground_truth)),
                    )
                    self.logger.info("Benchmark run", **asdict(record))
                    records.append(record)
        return records

    def write(self, out_dir: Path, records: Sequence[BenchRecord]) -> None:
        """Write ``bench.csv`` and the Markdown table ``bench.md``."""
        out_dir = ensure_out_dir(out_dir)
        header = "variant,lambda4,b,seconds,final_rank,iterations,auc"
        lines = [header] + [
            f"{r.variant},{r.lambda4:.17g},{r.b},{r.seconds:.6f},{r.final_rank},{r.iterations},{r.auc:.17g}"
            for r in records
        ]
        try:
            (out_dir / "bench.csv").write_text("\n".join(lines) + "\n")
            (out_dir / "bench.md").write_text(self.renderer.render_bench(records))
        except OSError as e:
            self.logger.error("Failed to write benchmark tables", out=str(out_dir), error=str(e))
            raise CubeIOError(f"Cannot write benchmark tables to {out_dir}: {e.strerror or e}") from e
        self.logger.info("Benchmark tables written", out=str(out_dir), runs=len(records))
