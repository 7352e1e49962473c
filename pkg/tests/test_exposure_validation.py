"""Histogram and cross-correlation tests."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rollsim.exposure_validation import (
    ChannelHistogram,
    channel_histograms,
    histogram_cross_correlation,
    simulate_capture,
)


def hist(bins, channel="R"):
    return ChannelHistogram(channel, np.asarray(bins, dtype=np.int64))


class TestChannelHistograms:
    def test_all_black(self):
        frame = np.zeros((8, 4, 3), dtype=np.uint8)
        for h in channel_histograms(frame):
            assert h.bins[0] == 32
            assert h.bins[1:].sum() == 0

    def test_pure_red(self):
        frame = np.zeros((8, 4, 3), dtype=np.uint8)
        frame[:, :, 0] = 255
        r, g, b = channel_histograms(frame)
        assert r.bins[255] == 32 and g.bins[0] == 32 and b.bins[0] == 32

    def test_checkerboard(self):
        frame = np.zeros((8, 8, 3), dtype=np.uint8)
        frame[::2, 1::2] = 255
        frame[1::2, ::2] = 255
        for h in channel_histograms(frame):
            assert h.bins[0] == 32 and h.bins[255] == 32

    def test_counts_sum_to_pixels(self):
        rng = np.random.default_rng(0)
        frame = rng.integers(0, 256, size=(31, 17, 3), dtype=np.uint8)
        for h in channel_histograms(frame):
            assert h.bins.sum() == 31 * 17


class TestCrossCorrelation:
    def test_identical_is_one(self):
        h = hist(np.arange(256))
        assert histogram_cross_correlation(h, h) == pytest.approx(1.0)

    def test_matches_pearson_formula(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 1000, size=256)
        b = a[::-1].copy()
        expected = np.corrcoef(a.astype(float), b.astype(float))[0, 1]
        assert histogram_cross_correlation(hist(a), hist(b)) == pytest.approx(expected, abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        a = rng.integers(1, 100, size=256)
        c = histogram_cross_correlation(hist(a), hist(a * 7))
        assert c == pytest.approx(1.0)

    @given(st.integers(0, 2**31 - 1))
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.integers(0, 50, size=(2, 256))
        if a.std() == 0 or b.std() == 0:
            return
        assert histogram_cross_correlation(hist(a), hist(b)) == pytest.approx(
            histogram_cross_correlation(hist(b), hist(a))
        )

    def test_zero_variance_identical_is_one(self):
        flat = hist(np.full(256, 3))
        assert histogram_cross_correlation(flat, flat) == 1.0

    def test_zero_variance_different_errors(self):
        with pytest.raises(ValueError, match="zero-variance"):
            histogram_cross_correlation(hist(np.full(256, 3)), hist(np.arange(256)))

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channel"):
            histogram_cross_correlation(hist(np.arange(256), "R"), hist(np.arange(256), "G"))


class TestExposureMonotonicity:
    def base_scene(self):
        # Large enough that histogram bins hold hundreds of pixels; per-capture
        # sensor noise then perturbs counts only fractionally.
        rng = np.random.default_rng(3)
        ramp = np.linspace(20, 180, 256)[None, :, None]
        scene = np.tile(ramp, (256, 1, 3)) + rng.normal(0, 10, size=(256, 256, 3))
        return np.clip(scene, 0, 255)

    def capture_corr(self, t_exp, t_ref=200.0):
        scene = self.base_scene()
        auto = simulate_capture(scene, t_ref, t_ref, seed=10)
        other = simulate_capture(scene, t_exp, t_ref, seed=11)
        return [
            histogram_cross_correlation(a, b)
            for a, b in zip(channel_histograms(auto), channel_histograms(other))
        ]

    def test_matched_exposure_near_one(self):
        for corr in self.capture_corr(200.0):
            assert corr > 0.98

    def test_offset_lowers_correlation(self):
        matched = self.capture_corr(200.0)
        offset = self.capture_corr(260.0)
        for m, o in zip(matched, offset):
            assert o < m

    def test_larger_offsets_monotone(self):
        corrs = [np.mean(self.capture_corr(200.0 + d)) for d in (0, 30, 60, 120, 240)]
        assert all(b <= a + 1e-9 for a, b in zip(corrs, corrs[1:]))
