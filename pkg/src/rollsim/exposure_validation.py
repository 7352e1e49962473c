"""Validate exposure-time estimates by comparing capture histograms.

If the estimated manual exposure matches what the auto-exposure picked,
frames captured under both settings have near-identical per-channel
histograms; the agreement is scored as the zero-lag Pearson correlation of
the 256-bin count vectors (reported correlations are <= 1 and near 1, which
pins "cross-correlation" to the normalized, zero-lag reading).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelHistogram",
    "channel_histograms",
    "histogram_cross_correlation",
    "simulate_capture",
]

CHANNELS = ("R", "G", "B")


@dataclass(frozen=True)
class ChannelHistogram:
    channel: str
    bins: np.ndarray  # 256 counts

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        b = np.asarray(self.bins, dtype=np.int64)
        if b.shape != (256,):
            raise ValueError(f"expected 256 bins, got shape {b.shape}")
        object.__setattr__(self, "bins", b)


def channel_histograms(frame) -> tuple[ChannelHistogram, ChannelHistogram, ChannelHistogram]:
    """Exact 256-bin counts for each color channel."""
    px = np.asarray(getattr(frame, "pixels", frame))
    if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 frame, got {px.shape} {px.dtype}")
    return tuple(
        ChannelHistogram(CHANNELS[c], np.bincount(px[:, :, c].ravel(), minlength=256))
        for c in range(3)
    )


def histogram_cross_correlation(a: ChannelHistogram, b: ChannelHistogram) -> float:
    """Zero-lag Pearson correlation of two same-channel histograms."""
    if a.channel != b.channel:
        raise ValueError(f"channel mismatch: {a.channel} vs {b.channel}")
    x = a.bins.astype(np.float64)
    y = b.bins.astype(np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float((xc * xc).sum())
    sy = float((yc * yc).sum())
    if sx == 0.0 or sy == 0.0:
        if np.array_equal(a.bins, b.bins):
            return 1.0
        raise ValueError("zero-variance histogram with differing content")
    return float((xc * yc).sum() / np.sqrt(sx * sy))


def simulate_capture(
    base_scene: np.ndarray,
    t_exp_us: float,
    t_ref_us: float,
    seed: int = 0,
    noise_dn: float = 2.0,
) -> np.ndarray:
    """Desk-scale linear capture model for exposure experiments.

    Pixel value scales with exposure time relative to the reference capture,
    plus mild Gaussian sensor noise.  A harness device, not a camera claim.
    """
    rng = np.random.default_rng(seed)
    scaled = base_scene.astype(np.float64) * (t_exp_us / t_ref_us)
    noisy = scaled + rng.normal(0.0, noise_dn, size=scaled.shape)
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
