"""Test evaluation report and benchmark table rendering."""

from pathlib import Path

import numpy as np
import pytest

from errors import CubeIOError
from models import BenchRecord, ClassSummary, EvalReport, GroundTruth
from report_renderer import ReportRenderer, format_auc


def _report(name: str, auc: float) -> EvalReport:
    return EvalReport(
        roc=np.array([[0.0, 0.0], [1.0, 1.0]]),
        auc=auc,
        background=ClassSummary(0.0, 0.05, 0.1, 0.2, 0.6),
        anomaly=ClassSummary(0.4, 0.7, 0.9, 0.95, 1.0),
        name=name,
    )


def test_template_has_all_placeholders(template_path: Path) -> None:
    """Verify template contains all required placeholders."""
    template = template_path.read_text()

    required_placeholders = [
        "{{MASK_PATH}}",
        "{{ROWS}}",
        "{{COLS}}",
        "{{POSITIVES}}",
        "{{NEGATIVES}}",
        "{{AUC_TABLE}}",
        "{{SEPARABILITY}}",
    ]

    for placeholder in required_placeholders:
        assert placeholder in template, f"Missing placeholder: {placeholder}"


@pytest.mark.parametrize(("value", "expected"), [(1.0, "100.00"), (0.5, "50.00"), (0.97123, "97.12"), (0.0, "0.00")])
def test_format_auc(value: float, expected: str) -> None:
    assert format_auc(value) == expected


def test_render_eval_fills_every_placeholder(report_renderer: ReportRenderer, six_pixel_truth: GroundTruth) -> None:
    """Verify rendered report has no leftover placeholders and shows the key numbers."""
    text = report_renderer.render_eval([_report("T", 0.9712)], six_pixel_truth, "data/mask.pgm")

    assert "{{" not in text
    assert "Mask:        data/mask.pgm" in text
    assert "Image size:  2 x 3" in text
    assert "Anomalies:   2 pixel(s)" in text
    assert "Background:  4 pixel(s)" in text
    assert "97.12" in text
    assert "median(anomaly) - q3(background) = 0.7000" in text


def test_render_eval_lists_every_map(report_renderer: ReportRenderer, six_pixel_truth: GroundTruth) -> None:
    text = report_renderer.render_eval([_report("T", 0.99), _report("T12", 0.95)], six_pixel_truth, "mask.pgm")

    assert "T:\n" in text
    assert "T12:\n" in text
    assert "99.00" in text
    assert "95.00" in text


def test_missing_template_raises(tmp_path: Path, six_pixel_truth: GroundTruth) -> None:
    renderer = ReportRenderer(tmp_path / "missing.txt")
    with pytest.raises(CubeIOError, match="Template file not found"):
        renderer.render_eval([_report("T", 1.0)], six_pixel_truth, "mask.pgm")


def test_render_bench_table(report_renderer: ReportRenderer) -> None:
    records = [
        BenchRecord(variant="fixed", lambda4=0.5, b=3, seconds=2.5, final_rank=64, iterations=100, auc=0.981),
        BenchRecord(variant="rr", lambda4=0.5, b=3, seconds=0.75, final_rank=4, iterations=37, auc=0.99),
    ]
    lines = report_renderer.render_bench(records).splitlines()

    assert lines[0] == "# Solver benchmark"
    assert lines[2] == "| variant | lambda4 | b | seconds | final r | iterations | AUC (%) |"
    assert lines[4] == "| fixed | 0.5 | 3 | 2.500 | 64 | 100 | 98.10 |"
    assert lines[5] == "| rr | 0.5 | 3 | 0.750 | 4 | 37 | 99.00 |"
