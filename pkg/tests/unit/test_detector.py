"""Test AnomalyDetector and SolverBenchmark."""

import json
from pathlib import Path
from unittest.mock import Mock

import numpy as np
import pytest

from config import LtdParams
from cube_io import read_scores_csv, write_cube
from detector import AnomalyDetector, BenchScene, SolverBenchmark, ensure_out_dir
from errors import CubeIOError, DegenerateInputError, InvalidInputError
from models import BenchRecord
from report_renderer import ReportRenderer


@pytest.mark.unit
class TestPrepare:
    """Input checks and normalization."""

    def test_normalizes_by_default(self, rng):
        h = rng.uniform(3.0, 9.0, size=(3, 3, 4))
        params = LtdParams(b=2)
        out = AnomalyDetector(params).prepare(h)
        assert out.min() == 0.0
        assert out.max() == params.normalize_peak == 1e4

    def test_custom_peak(self, rng):
        h = rng.uniform(3.0, 9.0, size=(3, 3, 4))
        out = AnomalyDetector(LtdParams(b=2, normalize_peak=1.0)).prepare(h)
        assert out.max() == 1.0

    def test_normalization_can_be_disabled(self, rng):
        h = rng.uniform(3.0, 9.0, size=(3, 3, 4))
        np.testing.assert_array_equal(AnomalyDetector(LtdParams(b=2, normalize_input=False)).prepare(h), h)

    def test_rejects_matrix(self):
        with pytest.raises(InvalidInputError):
            AnomalyDetector(LtdParams()).prepare(np.ones((3, 3)))

    def test_rejects_non_finite(self):
        h = np.ones((2, 2, 2))
        h[0, 0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            AnomalyDetector(LtdParams()).prepare(h)

    def test_rejects_constant_cube(self):
        with pytest.raises(DegenerateInputError):
            AnomalyDetector(LtdParams()).prepare(np.full((2, 2, 2), 0.5))


@pytest.mark.unit
class TestDetect:
    """Map construction on a small planted scene."""

    def test_maps_have_image_shape(self, tiny_scene, small_params):
        result = AnomalyDetector(small_params).detect(tiny_scene.h)
        for m in (result.t1, result.t2, result.t12, result.t):
            assert m.shape == (12, 10)
        assert np.min(result.t1) >= 0.0
        assert np.min(result.t2) >= 0.0
        np.testing.assert_allclose(result.t12, result.t1 * result.t2)
        assert 0.0 <= result.t.min() and result.t.max() <= 1.0

    def test_uses_injected_solver(self, tiny_scene, small_params):
        real = AnomalyDetector(small_params).solver.run(AnomalyDetector(small_params).prepare(tiny_scene.h))
        solver = Mock()
        solver.run.return_value = real
        AnomalyDetector(small_params, solver=solver).detect(tiny_scene.h)
        solver.run.assert_called_once()

    def test_detect_file_writes_artifacts(self, tmp_path, tiny_scene, small_params):
        cube = tmp_path / "cube.hsc"
        write_cube(cube, tiny_scene.h)
        out = tmp_path / "results" / "run1"

        result = AnomalyDetector(small_params).detect_file(cube, out, rx=True)

        for name in ("T1.pgm", "T2.pgm", "T.pgm", "T.csv", "T12.csv", "trace.csv", "summary.json", "RX.csv", "RX.pgm"):
            assert (out / name).exists(), f"Missing artifact: {name}"
        np.testing.assert_array_equal(read_scores_csv(out / "T.csv"), result.t)

        summary = json.loads((out / "summary.json").read_text())
        assert summary["shape"] == [12, 10]
        assert summary["final_rank"] == result.state.rank
        assert summary["iterations"] == result.state.iteration
        assert summary["params"]["b"] == 2
        assert len((out / "trace.csv").read_text().splitlines()) == result.state.iteration + 2

    def test_ensure_out_dir_over_file(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(CubeIOError):
            ensure_out_dir(blocker / "out")


@pytest.mark.unit
class TestSolverBenchmark:
    """Variant sweep bookkeeping."""

    def test_variant_params(self, report_renderer):
        bench = SolverBenchmark(LtdParams(lambda3=0.5), report_renderer)
        params = bench._variant_params("rr-novalid", 0.1, 4)
        assert params.rank_reduction is True
        assert params.validation is False
        assert (params.lambda4, params.b) == (0.1, 4)
        assert params.lambda6 == pytest.approx(0.05)

    def test_unknown_variant(self, report_renderer):
        with pytest.raises(InvalidInputError, match="Unknown benchmark variant"):
            SolverBenchmark(LtdParams(), report_renderer).run(BenchScene(), variants=["fast"])

    def test_empty_grid(self, report_renderer):
        with pytest.raises(InvalidInputError, match="empty"):
            SolverBenchmark(LtdParams(), report_renderer).run(BenchScene(), lambda4_values=())

    def test_run_records_every_combination(self, report_renderer):
        bench = SolverBenchmark(LtdParams(max_iter=3), report_renderer)
        scene = BenchScene(n1=10, n2=10, n3=6, r_true=2, anomaly_count=4)
        records = bench.run(scene, lambda4_values=(0.1, 0.5), b_values=[2], variants=["fixed", "rr"])

        assert [(r.variant, r.lambda4) for r in records] == [("fixed", 0.1), ("rr", 0.1), ("fixed", 0.5), ("rr", 0.5)]
        assert all(r.b == 2 for r in records)
        assert all(r.iterations <= 3 for r in records)
        assert all(0.0 <= r.auc <= 1.0 for r in records)
        assert records[0].final_rank == 10

    def test_write_tables(self, tmp_path: Path, template_path: Path):
        records = [BenchRecord(variant="rr", lambda4=0.5, b=3, seconds=1.25, final_rank=3, iterations=20, auc=1.0)]
        SolverBenchmark(LtdParams(), ReportRenderer(template_path)).write(tmp_path, records)

        lines = (tmp_path / "bench.csv").read_text().splitlines()
        assert lines == ["variant,lambda4,b,seconds,final_rank,iterations,auc", "rr,0.5,3,1.250000,3,20,1"]
        assert (tmp_path / "bench.md").read_text().startswith("# Solver benchmark")
