"""Shared fixtures for LTD tests."""

from pathlib import Path

import numpy as np
import pytest

from config import LtdParams
from models import GroundTruth, SyntheticScene
from report_renderer import ReportRenderer
from synthetic import synth_dataset


@pytest.fixture(scope="session")
def template_path() -> Path:
    """Path to EVAL_REPORT_TEMPLATE.txt."""
    return Path(__file__).parent.parent / "EVAL_REPORT_TEMPLATE.txt"


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator; every test gets a fresh stream."""
    return np.random.default_rng(20240917)


@pytest.fixture
def small_params() -> LtdParams:
    """Default parameters with a short iteration limit for small cubes."""
    return LtdParams(max_iter=15, b=2)


@pytest.fixture(scope="session")
def tiny_scene() -> SyntheticScene:
    """12 x 10 x 8 planted scene with rank 2 background and 6 anomalies."""
    return synth_dataset(n1=12, n2=10, n3=8, b=2, r_true=2, anomaly_count=6, noise_sigma=1e-3, seed=7)


@pytest.fixture
def six_pixel_truth() -> GroundTruth:
    """2 x 3 mask with anomalies at (0, 0) and (1, 2)."""
    return GroundTruth(labels=np.array([[True, False, False], [False, False, True]]))


@pytest.fixture
def report_renderer(template_path: Path) -> ReportRenderer:
    """Report renderer instance."""
    return ReportRenderer(template_path)
