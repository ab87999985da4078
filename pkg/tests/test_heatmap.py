import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from itrace.heatmap import (
    RenderConfig,
    blur_frame,
    build_brightness_volume,
    composite,
    cumulative_field,
    frame_brightness,
    gaussian_kernel_1d,
    merge_sessions,
    normalize_brightness,
    remap_spatial,
    temporal_weight,
)
from itrace.model import GazePoint

from conftest import make_session


CFG10 = RenderConfig(fps=10.0, fade_duration_s=0.3)


class TestTemporalWeight:
    def test_peak_at_timestamp(self):
        assert temporal_weight(0.0, 0.3) == 1.0

    def test_zero_at_support_boundary(self):
        assert temporal_weight(0.3, 0.3) == 0.0
        assert temporal_weight(-0.3, 0.3) == 0.0

    def test_linear_midpoint(self):
        assert temporal_weight(0.15, 0.3) == pytest.approx(0.5)

    @given(st.floats(-2, 2, allow_nan=False), st.floats(0.01, 2))
    def test_even_and_bounded(self, dt, fade):
        w = temporal_weight(dt, fade)
        assert 0.0 <= w <= 1.0
        assert w == temporal_weight(-dt, fade)


class TestBrightnessVolume:
    def test_single_point_fade_window(self):
        # point at t=1.0, fps=10, fade=0.3: only frames 8..12 can be lit
        vol = build_brightness_volume(
            [GazePoint(0.5, 0.5, 1.0)], CFG10, duration_s=2.0, dims=(10, 10)
        )
        lit = sorted(set(np.nonzero(vol)[0].tolist()))
        assert lit == [8, 9, 10, 11, 12]
        assert vol[10, 5, 5] == 1.0
        # brute-force evaluation of the weight formula per frame
        for f in range(vol.shape[0]):
            expected = max(0.0, 1.0 - abs(f / 10.0 - 1.0) / 0.3)
            assert vol[f, 5, 5] == pytest.approx(expected, abs=1e-12)

    def test_additivity_of_identical_points(self):
        pts = [GazePoint(0.5, 0.5, 1.0)] * 2
        vol = build_brightness_volume(pts, CFG10, 2.0, (10, 10))
        assert vol[10, 5, 5] == 2.0

    def test_empty_points_all_zero(self):
        vol = build_brightness_volume([], CFG10, 2.0, (10, 10))
        assert vol.shape == (20, 10, 10)
        assert not vol.any()

    def test_zero_dims_rejected(self):
        with pytest.raises(ValueError):
            build_brightness_volume([], CFG10, 1.0, (0, 10))

    def test_linearity_before_normalization(self):
        rng = np.random.default_rng(3)
        a = [GazePoint(*rng.random(2), float(rng.random() * 2)) for _ in range(7)]
        b = [GazePoint(*rng.random(2), float(rng.random() * 2)) for _ in range(5)]
        va = build_brightness_volume(a, CFG10, 2.0, (16, 9))
        vb = build_brightness_volume(b, CFG10, 2.0, (16, 9))
        vab = build_brightness_volume(a + b, CFG10, 2.0, (16, 9))
        assert np.allclose(vab, va + vb, atol=1e-12)

    def test_frame_brightness_matches_volume(self):
        rng = np.random.default_rng(4)
        pts = [GazePoint(*rng.random(2), float(rng.random() * 2)) for _ in range(9)]
        vol = build_brightness_volume(pts, CFG10, 2.0, (16, 9))
        for f in range(vol.shape[0]):
            assert np.allclose(frame_brightness(pts, f, CFG10, (16, 9)), vol[f])


class TestNormalization:
    def test_sqrt_of_quarter_max(self):
        vol = np.zeros((2, 2, 2))
        vol[0, 0, 0] = 4.0
        vol[1, 1, 1] = 1.0
        out = normalize_brightness(vol)
        assert out[1, 1, 1] == pytest.approx(0.5)

    def test_max_maps_to_one(self):
        vol = np.array([[[3.0, 1.0]]])
        assert normalize_brightness(vol).max() == 1.0

    def test_all_zero_unchanged(self):
        vol = np.zeros((3, 4, 5))
        assert not normalize_brightness(vol).any()

    def test_monotone_preserves_argmax(self):
        rng = np.random.default_rng(5)
        vol = rng.random((6, 8, 8))
        out = normalize_brightness(vol)
        assert np.all((out >= 0) & (out <= 1))
        for f in range(vol.shape[0]):
            assert np.argmax(out[f]) == np.argmax(vol[f])


def direct_blur_oracle(field, sigma):
    """Independent full 2-D convolution with symmetric reflection."""
    k = gaussian_kernel_1d(sigma)
    r = (len(k) - 1) // 2
    kernel2d = np.outer(k, k)
    padded = np.pad(field, r, mode="symmetric")
    out = np.zeros_like(field, dtype=np.float64)
    for i in range(field.shape[0]):
        for j in range(field.shape[1]):
            out[i, j] = np.sum(padded[i : i + 2 * r + 1, j : j + 2 * r + 1] * kernel2d)
    return out


class TestBlur:
    def test_sigma_zero_is_identity(self):
        f = np.random.default_rng(0).random((9, 12))
        assert np.array_equal(blur_frame(f, 0.0), f)

    def test_impulse_matches_direct_convolution(self):
        f = np.zeros((21, 21))
        f[10, 10] = 1.0
        out = blur_frame(f, 2.0)
        assert np.allclose(out, direct_blur_oracle(f, 2.0), atol=1e-12)
        assert out.sum() == pytest.approx(1.0, abs=1e-6)

    def test_random_field_matches_direct_convolution(self):
        f = np.random.default_rng(1).random((18, 25))
        assert np.allclose(blur_frame(f, 1.3), direct_blur_oracle(f, 1.3), atol=1e-12)

    def test_constant_frame_preserved(self):
        f = np.full((15, 15), 0.37)
        assert np.allclose(blur_frame(f, 3.0), 0.37, atol=1e-6)

    def test_interior_mass_conservation(self):
        f = np.zeros((40, 40))
        f[18:22, 18:22] = np.random.default_rng(2).random((4, 4))
        total = f.sum()
        assert blur_frame(f, 2.0).sum() == pytest.approx(total, rel=1e-6)


class TestComposite:
    def test_pure_darkening_where_no_heat(self):
        bg = np.full((4, 4, 3), 200, np.uint8)
        heat = np.zeros((4, 4, 3), np.uint8)
        out = composite(heat, np.zeros((4, 4)), bg, 0.5)
        assert np.all(out == 100)

    def test_full_alpha_shows_heat_exactly(self):
        bg = np.full((4, 4, 3), 200, np.uint8)
        heat = np.full((4, 4, 3), 37, np.uint8)
        out = composite(heat, np.ones((4, 4)), bg, 0.5)
        assert np.all(out == 37)

    def test_half_alpha_blend_arithmetic(self):
        bg = np.full((1, 1, 3), 100, np.uint8)
        heat = np.full((1, 1, 3), 200, np.uint8)
        out = composite(heat, np.full((1, 1), 0.5), bg, 0.5)
        # 100*0.5*0.5 + 200*0.5 = 125
        assert np.all(out == 125)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            composite(
                np.zeros((2, 2, 3), np.uint8),
                np.zeros((2, 2)),
                np.zeros((3, 3, 3), np.uint8),
                0.5,
            )


class TestMergeSessions:
    def test_multiset_union_counts(self):
        a = make_session([(0.1, 0.1, float(i)) for i in range(3)])
        b = make_session([(0.2, 0.2, float(i)) for i in range(5)])
        assert len(merge_sessions([a, b])) == 8

    def test_identical_points_double_brightness(self):
        a = make_session([(0.5, 0.5, 1.0)])
        b = make_session([(0.5, 0.5, 1.0)], user_id="u2")
        merged = merge_sessions([a, b])
        v2 = build_brightness_volume(merged, CFG10, 2.0, (10, 10))
        v1 = build_brightness_volume(a.points, CFG10, 2.0, (10, 10))
        assert v2[10, 5, 5] == 2 * v1[10, 5, 5]

    def test_mismatched_video_names_rejected(self):
        a = make_session([], video_name="a.mp4")
        b = make_session([], video_name="b.mp4")
        with pytest.raises(ValueError, match="a.mp4"):
            merge_sessions([a, b])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            merge_sessions([])

    def test_order_invariant(self):
        a = make_session([(0.1, 0.2, 1.0), (0.3, 0.4, 3.0)])
        b = make_session([(0.5, 0.6, 2.0)], user_id="u2")
        assert merge_sessions([a, b]) == merge_sessions([b, a])


class TestRemapSpatial:
    def test_delay_shift(self):
        cfg = RenderConfig(delay_offset_s=0.4)
        kept, dropped = remap_spatial([GazePoint(0.5, 0.5, 2.0)], cfg, 1000)
        assert dropped == []
        assert kept[0].t == pytest.approx(1.6)

    def test_pre_start_point_dropped(self):
        cfg = RenderConfig(delay_offset_s=0.4)
        kept, dropped = remap_spatial([GazePoint(0.5, 0.5, 0.3)], cfg, 1000)
        assert kept == [] and dropped == [0]

    def test_symmetric_crop_fixes_midline(self):
        cfg = RenderConfig(crop_top_px=100, crop_bottom_px=100)
        kept, _ = remap_spatial([GazePoint(0.5, 0.5, 1.0)], cfg, 1000)
        assert kept[0].y == pytest.approx(0.5)

    def test_point_in_cropped_band_dropped(self):
        cfg = RenderConfig(crop_top_px=100, crop_bottom_px=0)
        kept, dropped = remap_spatial([GazePoint(0.5, 0.05, 1.0)], cfg, 1000)
        assert kept == [] and dropped == [0]

    def test_excessive_crop_rejected(self):
        cfg = RenderConfig(crop_top_px=600, crop_bottom_px=500)
        with pytest.raises(ValueError):
            remap_spatial([], cfg, 1000)


class TestCumulativeField:
    def test_repeat_location_strictly_brighter(self):
        pts = [GazePoint(0.25, 0.25, float(i)) for i in range(10)]
        pts.append(GazePoint(0.75, 0.75, 0.0))
        field = cumulative_field(pts, (8, 8))
        assert field[2, 2] > field[6, 6] > 0
