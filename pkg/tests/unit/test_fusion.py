"""Tests for detection maps and guided-filter fusion."""

import numpy as np
import pytest

from errors import DimensionMismatchError, InvalidInputError
from fusion import box_filter, fuse, guided_filter, hadamard_map, minmax_scale, spatial_map, spectral_map
from models import GuidedFilterParams


def _naive_box(m: np.ndarray, r: int) -> np.ndarray:
    n1, n2 = m.shape
    out = np.zeros_like(m)
    for i in range(n1):
        for j in range(n2):
            out[i, j] = m[max(0, i - r) : i + r + 1, max(0, j - r) : j + r + 1].mean()
    return out


@pytest.mark.unit
class TestMaps:
    """Per-pixel tube norms."""

    def test_spectral_map_is_tube_norm(self):
        e1 = np.zeros((2, 2, 2))
        e1[1, 0] = [3.0, 4.0]
        np.testing.assert_allclose(spectral_map(e1), [[0.0, 0.0], [5.0, 0.0]])

    def test_spatial_map_zero(self):
        assert not np.any(spatial_map(np.zeros((3, 2, 4))))

    def test_hadamard(self):
        t1 = np.array([[1.0, 2.0], [3.0, 0.0]])
        t2 = np.array([[2.0, 0.5], [1.0, 9.0]])
        np.testing.assert_array_equal(hadamard_map(t1, t2), [[2.0, 1.0], [3.0, 0.0]])

    def test_hadamard_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            hadamard_map(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.unit
class TestMinMaxScale:
    """[0, 1] scaling."""

    def test_range(self, rng):
        out = minmax_scale(rng.standard_normal((5, 4)) * 7 + 3)
        assert out.min() == 0.0
        assert out.max() == 1.0

    def test_constant_becomes_zero(self):
        assert not np.any(minmax_scale(np.full((3, 3), 4.2)))


@pytest.mark.unit
class TestBoxFilter:
    """Summed-area-table mean filter."""

    @pytest.mark.parametrize("radius", [1, 2, 4])
    def test_matches_naive_window_mean(self, rng, radius):
        m = rng.standard_normal((7, 5))
        np.testing.assert_allclose(box_filter(m, radius), _naive_box(m, radius), atol=1e-12)

    def test_radius_beyond_image_gives_global_mean(self, rng):
        m = rng.standard_normal((4, 5))
        np.testing.assert_allclose(box_filter(m, 10), np.full((4, 5), m.mean()), atol=1e-12)

    def test_constant_image(self):
        np.testing.assert_allclose(box_filter(np.full((4, 6), 2.0), 2), np.full((4, 6), 2.0))

    def test_invalid_radius(self):
        with pytest.raises(InvalidInputError):
            box_filter(np.zeros((3, 3)), 0)


@pytest.mark.unit
class TestGuidedFilter:
    """Local linear guided filter."""

    def test_constant_input_is_preserved(self):
        c = np.full((6, 6), 0.3)
        guide = np.linspace(0, 1, 36).reshape(6, 6)
        np.testing.assert_allclose(guided_filter(c, guide, GuidedFilterParams()), c, atol=1e-12)

    def test_small_eps_preserves_linear_image(self):
        """A source that is a linear function of the guide passes through when eps is tiny."""
        guide = np.add.outer(np.arange(8.0), np.arange(8.0)) / 14.0
        source = 2.0 * guide + 0.1
        out = guided_filter(source, guide, GuidedFilterParams(radius=1, eps=1e-12))
        np.testing.assert_allclose(out, source, atol=1e-6)

    def test_large_eps_reduces_to_box_mean(self, rng):
        source = rng.uniform(size=(9, 9))
        guide = rng.uniform(size=(9, 9))
        out = guided_filter(source, guide, GuidedFilterParams(radius=2, eps=1e12))
        np.testing.assert_allclose(out, box_filter(box_filter(source, 2), 2), atol=1e-6)

    def test_linear_in_source(self, rng):
        x, y, guide = (rng.uniform(size=(8, 10)) for _ in range(3))
        params = GuidedFilterParams()
        lhs = guided_filter(x + y, guide, params)
        rhs = guided_filter(x, guide, params) + guided_filter(y, guide, params)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_matches_per_window_regression(self, rng):
        """a, b fitted by ridge regression in every clipped window, then averaged."""
        source = rng.uniform(size=(16, 16))
        guide = rng.uniform(size=(16, 16))
        r, eps = 2, 1e-2
        n1, n2 = source.shape
        a = np.zeros_like(source)
        b = np.zeros_like(source)
        for i in range(n1):
            for j in range(n2):
                win = (slice(max(0, i - r), i + r + 1), slice(max(0, j - r), j + r + 1))
                g, p = guide[win].ravel(), source[win].ravel()
                a[i, j] = (np.mean(g * p) - g.mean() * p.mean()) / (g.var() + eps)
                b[i, j] = p.mean() - a[i, j] * g.mean()
        expected = _naive_box(a, r) * guide + _naive_box(b, r)
        out = guided_filter(source, guide, GuidedFilterParams(radius=r, eps=eps))
        np.testing.assert_allclose(out, expected, atol=1e-8)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            guided_filter(np.zeros((3, 3)), np.zeros((3, 4)), GuidedFilterParams())

    def test_invalid_params(self):
        with pytest.raises(InvalidInputError):
            GuidedFilterParams(radius=0)
        with pytest.raises(InvalidInputError):
            GuidedFilterParams(eps=0.0)


@pytest.mark.unit
class TestFuse:
    """Hadamard product followed by guided filtering."""

    def test_output_in_unit_range(self, rng):
        t1 = rng.uniform(0, 2, (10, 12))
        t2 = rng.uniform(0, 5, (10, 12))
        for mode in ("single", "nested"):
            out = fuse(t1, t2, mode, GuidedFilterParams())
            assert out.shape == (10, 12)
            assert out.min() >= 0.0
            assert out.max() <= 1.0

    def test_zero_spectral_map_annihilates(self, rng):
        out = fuse(np.zeros((6, 6)), rng.uniform(size=(6, 6)), "nested", GuidedFilterParams())
        assert not np.any(out)

    def test_constant_maps_fuse_to_zero(self):
        t = np.ones((5, 5))
        assert not np.any(fuse(t, t, "single", GuidedFilterParams()))

    def test_isolated_anomaly_stays_on_top(self):
        t1 = np.full((11, 11), 0.05)
        t2 = np.full((11, 11), 0.05)
        t1[5, 5] = t2[5, 5] = 1.0
        out = fuse(t1, t2, "single", GuidedFilterParams(radius=1, eps=1e-4))
        assert np.unravel_index(np.argmax(out), out.shape) == (5, 5)

    def test_unknown_mode(self):
        with pytest.raises(InvalidInputError):
            fuse(np.ones((3, 3)), np.ones((3, 3)), "triple", GuidedFilterParams())  # type: ignore[arg-type]
