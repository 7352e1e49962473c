"""Frame-pair dissimilarity metrics and tamper detection scoring.

SSIM, MS-SSIM and UQI are computed on BT.601 luma with an 11x11 Gaussian
window (sigma 1.5), stabilization constants K1=0.01/K2=0.03 on a 255
dynamic range, and MS-SSIM's standard five scale weights.  Values are
inverted to dissimilarities (1 - clamped similarity) so that a simple
threshold flags anomalous frame pairs, and detector quality is summarized
as ROC-AUC with ties counting one half.

All reductions are fixed-order, so results do not depend on scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

__all__ = [
    "StealthRecord",
    "MetricReport",
    "luma",
    "ssim",
    "ms_ssim",
    "uqi",
    "dissimilarity",
    "build_records",
    "threshold_detector",
    "roc_auc",
    "auc_report",
    "METRICS",
    "SCENARIOS",
]

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03
DYNAMIC_RANGE = 255.0
MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)

METRICS = ("ssim", "msssim", "uqi")
SCENARIOS = ("legit", "rolling", "blinding")

_DEGENERATE_EPS = 1e-8


def _gaussian_kernel(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    half = (size - 1) / 2
    x = np.arange(size) - half
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


_KERNEL = _gaussian_kernel()


def luma(frame) -> np.ndarray:
    """BT.601 luma as float64; passes 2-D arrays through unchanged."""
    px = np.asarray(getattr(frame, "pixels", frame), dtype=np.float64)
    if px.ndim == 2:
        return px
    if px.ndim == 3 and px.shape[2] == 3:
        return px @ np.array([0.299, 0.587, 0.114])
    raise ValueError(f"expected (H, W) or (H, W, 3) frame, got shape {px.shape}")


def _window_stats(x: np.ndarray, y: np.ndarray, kernel: np.ndarray):
    """Gaussian-weighted local means/variances/covariance, borders cropped."""
    half = len(kernel) // 2

    def filt(img):
        out = correlate1d(img, kernel, axis=0, mode="constant")
        out = correlate1d(out, kernel, axis=1, mode="constant")
        return out[half:-half, half:-half]

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    return mu_x, mu_y, var_x, var_y, cov


def _check_pair(a: np.ndarray, b: np.ndarray, min_size: int):
    if a.shape != b.shape:
        raise ValueError(f"frame dimensions differ: {a.shape} vs {b.shape}")
    if min(a.shape) < min_size:
        raise ValueError(f"frames of shape {a.shape} too small for a {min_size}-pixel window")


def ssim(a, b) -> float:
    """Mean local structural similarity over the sliding Gaussian window."""
    x, y = luma(a), luma(b)
    _check_pair(x, y, WINDOW_SIZE)
    c1 = (K1 * DYNAMIC_RANGE) ** 2
    c2 = (K2 * DYNAMIC_RANGE) ** 2
    mu_x, mu_y, var_x, var_y, cov = _window_stats(x, y, _KERNEL)
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )
    return float(ssim_map.mean())


def _downsample2(img: np.ndarray) -> np.ndarray:
    """2x2 mean pooling, trailing odd row/column dropped."""
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    img = img[:h, :w]
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def max_scales(shape: tuple[int, int], window: int = WINDOW_SIZE) -> int:
    """Largest scale count the image supports (window must fit at the coarsest)."""
    n = 1
    size = min(shape)
    while size // 2 >= window and n < len(MSSSIM_WEIGHTS):
        size //= 2
        n += 1
    return n


def ms_ssim(a, b, scales: int = 5) -> float:
    """Multi-scale SSIM: contrast/structure at every scale, luminance at the
    coarsest, combined with the standard exponent weights.

    When the frames cannot support the requested scale count the metric
    falls back to the largest supported count and warns.
    """
    x, y = luma(a), luma(b)
    _check_pair(x, y, WINDOW_SIZE)
    supported = max_scales(x.shape)
    if supported < scales:
        warnings.warn(
            f"frame {x.shape} supports only {supported} of {scales} MS-SSIM scales; reducing",
            stacklevel=2,
        )
        scales = supported
    weights = np.asarray(MSSSIM_WEIGHTS[:scales])
    weights = weights / weights.sum()

    c1 = (K1 * DYNAMIC_RANGE) ** 2
    c2 = (K2 * DYNAMIC_RANGE) ** 2
    value = 1.0
    for level in range(scales):
        mu_x, mu_y, var_x, var_y, cov = _window_stats(x, y, _KERNEL)
        cs = float(((2 * cov + c2) / (var_x + var_y + c2)).mean())
        if level == scales - 1:
            lum = float(((2 * mu_x * mu_y + c1) / (mu_x**2 + mu_y**2 + c1)).mean())
            value *= max(lum, 0.0) ** weights[level]
        value *= max(cs, 0.0) ** weights[level]
        if level < scales - 1:
            x = _downsample2(x)
            y = _downsample2(y)
    return float(value)


def uqi(a, b) -> float:
    """Universal image quality index: SSIM with zero stabilization constants.

    Windows with a zero denominator carry no signal: they count as 1 when
    the two windows hold identical content and are skipped otherwise.
    """
    x, y = luma(a), luma(b)
    _check_pair(x, y, WINDOW_SIZE)
    mu_x, mu_y, var_x, var_y, cov = _window_stats(x, y, _KERNEL)
    # Weighted variances can ring slightly negative in float; with no
    # stabilization constant to absorb that, clamp before forming Q.
    var_x = np.maximum(var_x, 0.0)
    var_y = np.maximum(var_y, 0.0)
    num = (2 * mu_x * mu_y) * (2 * cov)
    den = (mu_x**2 + mu_y**2) * (var_x + var_y)
    degenerate = (np.abs(var_x + var_y) < _DEGENERATE_EPS) | (
        mu_x**2 + mu_y**2 < _DEGENERATE_EPS
    )
    identical = degenerate & (np.abs(mu_x - mu_y) < _DEGENERATE_EPS)
    valid = ~degenerate
    total = float(np.where(valid, np.divide(num, den, out=np.zeros_like(num), where=valid), 0.0).sum())
    total += float(identical.sum())
    n = int(valid.sum() + identical.sum())
    if n == 0:
        # Every window degenerate with differing content (constant vs
        # different constant): no structural agreement anywhere.
        return 0.0
    return total / n


def dissimilarity(metric_value: float) -> float:
    """1 - clamp(value, 0, 1); identical frames map to exactly 0."""
    return 1.0 - min(max(metric_value, 0.0), 1.0)


@dataclass(frozen=True)
class StealthRecord:
    """Dissimilarities of one consecutive-frame pair under one scenario."""

    video_id: str
    pair_index: int
    scenario: str
    ssim_d: float
    msssim_d: float
    uqi_d: float

    def get(self, metric: str) -> float:
        return {"ssim": self.ssim_d, "msssim": self.msssim_d, "uqi": self.uqi_d}[metric]


def build_records(
    pairs: list[tuple[str, int, object, object]],
    scenario: str,
) -> list[StealthRecord]:
    """Score (video_id, pair_index, prev, curr) pairs under one scenario.

    Pairs where every metric reports zero dissimilarity are stationary and
    dropped, mirroring how static scenes carry no detection signal.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    records = []
    for video_id, pair_index, prev, curr in pairs:
        rec = StealthRecord(
            video_id=video_id,
            pair_index=pair_index,
            scenario=scenario,
            ssim_d=dissimilarity(ssim(prev, curr)),
            msssim_d=dissimilarity(ms_ssim(prev, curr)),
            uqi_d=dissimilarity(uqi(prev, curr)),
        )
        if rec.ssim_d == 0.0 and rec.msssim_d == 0.0 and rec.uqi_d == 0.0:
            continue
        records.append(rec)
    return records


def threshold_detector(
    records: list[StealthRecord], thresholds: dict[str, float]
) -> dict[str, list[bool]]:
    """Flag records whose dissimilarity exceeds the per-metric threshold."""
    labels: dict[str, list[bool]] = {}
    for metric, thr in thresholds.items():
        if not (0 <= thr <= 1):
            raise ValueError(f"threshold for {metric} must be in [0,1], got {thr}")
        labels[metric] = [rec.get(metric) > thr for rec in records]
    return labels


def roc_auc(positive: list[float], negative: list[float]) -> float:
    """Probability a random positive outranks a random negative, ties half.

    Computed from midranks (Mann-Whitney U), which matches the exhaustive
    pairwise comparison exactly.
    """
    if not positive or not negative:
        raise ValueError("both score sets must be nonempty")
    n_pos, n_neg = len(positive), len(negative)
    scores = np.asarray(list(positive) + list(negative), dtype=np.float64)
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1
        ranks[order[i : j + 1]] = midrank
        i = j + 1
    rank_sum_pos = float(ranks[:n_pos].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class MetricReport:
    """Detection summary of one metric against one attack scenario."""

    metric: str
    scenario: str
    auc: float
    threshold_at_0fpr: float
    detection_rate_at_0fpr: float


def auc_report(records: list[StealthRecord]) -> list[MetricReport]:
    """Score each attack scenario against legit records, per metric.

    threshold_at_0fpr is the highest legit dissimilarity; detection rate is
    the fraction of attack records strictly above it.
    """
    legit = [r for r in records if r.scenario == "legit"]
    if not legit:
        raise ValueError("no legit records to score against")
    reports = []
    for metric in METRICS:
        neg = [r.get(metric) for r in legit]
        thr = max(neg)
        for scenario in SCENARIOS:
            if scenario == "legit":
                continue
            pos = [r.get(metric) for r in records if r.scenario == scenario]
            if not pos:
                continue
            detected = sum(1 for v in pos if v > thr) / len(pos)
            reports.append(
                MetricReport(
                    metric=metric,
                    scenario=scenario,
                    auc=roc_auc(pos, neg),
                    threshold_at_0fpr=thr,
                    detection_rate_at_0fpr=detected,
                )
            )
    return reports
