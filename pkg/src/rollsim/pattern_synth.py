"""Distortion-pattern synthesis and extraction.

synthesize() plays the laser pulse train against the rolling readout on one
global timeline: frame k's scan position s resets at (k*N_rows + s) * dt_rst
and integrates for t_exp, and every pulse [j/f + phi, j/f + phi + t_on)
brightens the rows whose windows it overlaps.  Row intensity is the pulse
overlap as a fraction of the exposure time, scaled by the laser gain, so
band edges ramp off linearly the way photon integration does.

All timeline arithmetic uses exact rationals: frame and pulse periods are
generally not commensurate, and a float tie at a reset boundary would
otherwise flip a row in or out of a band nondeterministically.

Scan positions map to stored image rows bottom-to-top; under this
orientation a pulse train slightly faster than the frame rate scrolls the
band downwards across consecutive frames.  Dead (non-emitted) sensor rows
are dropped after mapping, which dilutes the per-frame distortion count by
n_rows_visible/n_rows_total.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from rollsim.sensor_timing import CameraSpec, EnvConditions, LaserConfig

__all__ = [
    "Interval",
    "DistortionPattern",
    "TimelineConfig",
    "DEAD_AREA_LAYOUTS",
    "synthesize",
    "extract_pattern",
]

log = logging.getLogger(__name__)

DEAD_AREA_LAYOUTS = ("trailing_block", "leading_block", "split")


@dataclass(frozen=True)
class Interval:
    """Contiguous band of affected visible rows, ends inclusive."""

    start: int
    end: int
    intensity: tuple[float, ...]

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad interval bounds [{self.start}, {self.end}]")
        if len(self.intensity) != self.end - self.start + 1:
            raise ValueError(
                f"intensity length {len(self.intensity)} != row span {self.end - self.start + 1}"
            )
        if any(not (0 <= a <= 1) for a in self.intensity):
            raise ValueError("intensities must lie in [0,1]")

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    @property
    def centroid(self) -> float:
        """Intensity-weighted mean affected row."""
        rows = np.arange(self.start, self.end + 1)
        w = np.asarray(self.intensity)
        return float((rows * w).sum() / w.sum())


@dataclass(frozen=True)
class DistortionPattern:
    """All injected bands for one frame."""

    frame_index: int
    intervals: tuple[Interval, ...]
    color: tuple[float, float, float]

    def __post_init__(self):
        prev_end = -1
        for iv in self.intervals:
            if iv.start <= prev_end:
                raise ValueError("intervals must be sorted and non-overlapping")
            prev_end = iv.end

    @property
    def n_rows_affected(self) -> int:
        return sum(iv.width for iv in self.intervals)

    def centroid(self) -> float | None:
        """Intensity-weighted mean row over all intervals, None if empty."""
        if not self.intervals:
            return None
        num = 0.0
        den = 0.0
        for iv in self.intervals:
            w = sum(iv.intensity)
            num += iv.centroid * w
            den += w
        return num / den

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "color": list(self.color),
            "intervals": [
                {"start": iv.start, "end": iv.end, "intensity": list(iv.intensity)}
                for iv in self.intervals
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistortionPattern":
        return cls(
            frame_index=d["frame_index"],
            intervals=tuple(
                Interval(iv["start"], iv["end"], tuple(iv["intensity"]))
                for iv in d["intervals"]
            ),
            color=tuple(d["color"]),
        )


@dataclass(frozen=True)
class TimelineConfig:
    """Simulation controls for one synthesis run.

    random_phase draws the pulse-train phase uniformly over one period from
    the seed (the attacker cannot synchronize with the reset grid); turn it
    off to use laser.phase verbatim.
    """

    spec: CameraSpec
    laser: LaserConfig
    env: EnvConditions
    n_frames: int
    dead_area_layout: str = "trailing_block"
    seed: int = 0
    random_phase: bool = True

    def __post_init__(self):
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.dead_area_layout not in DEAD_AREA_LAYOUTS:
            raise ValueError(
                f"dead_area_layout must be one of {DEAD_AREA_LAYOUTS}, got {self.dead_area_layout!r}"
            )

    def meta(self) -> dict:
        cam = self.spec
        return {
            "camera": {
                "frame_rate": cam.frame_rate,
                "n_rows_total": cam.n_rows_total,
                "n_rows_visible": cam.n_rows_visible,
                "name": cam.name,
            },
            "laser": {
                "frequency": self.laser.frequency,
                "duty_cycle": self.laser.duty_cycle,
                "phase": self.laser.phase,
                "color": list(self.laser.color),
                "irradiance_gain": self.laser.irradiance_gain,
            },
            "env": {
                "ambient_illuminance": self.env.ambient_illuminance,
                "exposure_time_us": self.env.exposure_time_us,
            },
            "n_frames": self.n_frames,
            "dead_area_layout": self.dead_area_layout,
            "seed": self.seed,
            "random_phase": self.random_phase,
        }


def _dead_area_lead(layout: str, n_rows: int, n_visible: int) -> int:
    """Scan positions before the visible block for the given layout."""
    dead = n_rows - n_visible
    if layout == "trailing_block":
        return 0
    if layout == "leading_block":
        return dead
    return dead // 2


def synthesize(config: TimelineConfig) -> list[DistortionPattern]:
    """Simulate the pulse train and return one pattern per frame.

    Returns an empty list (and logs a warning) when no pulse hits any
    visible row over the whole run.
    """
    spec, laser = config.spec, config.laser
    n_rows, n_visible = spec.n_rows_total, spec.n_rows_visible

    frame_rate = Fraction(spec.frame_rate)
    dt = 1 / (frame_rate * n_rows)  # seconds per row reset
    period = 1 / Fraction(laser.frequency)
    t_on = Fraction(laser.duty_cycle) / Fraction(laser.frequency)
    t_exp = Fraction(config.env.exposure_time_us) / 1_000_000

    phi = Fraction(laser.phase)
    if config.random_phase:
        rng = np.random.default_rng(config.seed)
        phi += Fraction(rng.random()) * period

    lead = _dead_area_lead(config.dead_area_layout, n_rows, n_visible)
    gain = laser.irradiance_gain

    patterns = []
    any_hit = False
    for k in range(config.n_frames):
        frame_start = k * n_rows * dt
        # Pulses that can overlap any row window of this frame.
        j_lo = math.floor((frame_start - t_on - phi) / period)
        j_hi = math.ceil((frame_start + (n_rows - 1) * dt + t_exp - phi) / period)
        acc: dict[int, Fraction] = {}
        for j in range(j_lo, j_hi + 1):
            pulse_lo = j * period + phi
            pulse_hi = pulse_lo + t_on
            # Affected scan positions: open interval in s.
            s_first = math.floor((pulse_lo - t_exp - frame_start) / dt) + 1
            s_last = math.ceil((pulse_hi - frame_start) / dt) - 1
            for s in range(max(s_first, 0), min(s_last, n_rows - 1) + 1):
                w_lo = frame_start + s * dt
                overlap = min(pulse_hi, w_lo + t_exp) - max(pulse_lo, w_lo)
                if overlap > 0:
                    acc[s] = acc.get(s, Fraction(0)) + overlap

        # Keep visible scan positions, flip into stored image rows.
        rows = {}
        for s, ov in acc.items():
            v = s - lead
            if 0 <= v < n_visible:
                image_row = n_visible - 1 - v
                rows[image_row] = min(1.0, gain * float(ov / t_exp))
        if rows:
            any_hit = True
        patterns.append(
            DistortionPattern(
                frame_index=k,
                intervals=_group_rows(rows),
                color=laser.color,
            )
        )

    if not any_hit:
        log.warning(
            "no pulse intersected any visible row over %d frames (f=%.3gHz, layout=%s)",
            config.n_frames, laser.frequency, config.dead_area_layout,
        )
        return []
    return patterns


def _group_rows(rows: dict[int, float]) -> tuple[Interval, ...]:
    """Contiguous runs of affected rows -> sorted Interval tuple."""
    if not rows:
        return ()
    indices = sorted(rows)
    intervals = []
    run_start = prev = indices[0]
    for r in indices[1:]:
        if r != prev + 1:
            intervals.append(
                Interval(run_start, prev, tuple(rows[i] for i in range(run_start, prev + 1)))
            )
            run_start = r
        prev = r
    intervals.append(Interval(run_start, prev, tuple(rows[i] for i in range(run_start, prev + 1))))
    return tuple(intervals)


def extract_pattern(
    frame: np.ndarray,
    channel_threshold: int = 10,
    frame_index: int = 0,
    expected_shape: tuple[int, int] | None = None,
) -> DistortionPattern:
    """Recover a distortion pattern from a (possibly corrupted) frame.

    A row belongs to the pattern when at least half its pixels exceed the
    threshold in some channel; its intensity is the mean per-pixel excess
    normalized to the 255 ceiling.  Color is the mean RGB of affected rows,
    normalized.
    """
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {frame.shape}")
    if expected_shape is not None and frame.shape[:2] != tuple(expected_shape):
        raise ValueError(f"frame shape {frame.shape[:2]} does not match expected {expected_shape}")

    lit = (frame > channel_threshold).any(axis=2)  # (H, W)
    row_hit = lit.mean(axis=1) >= 0.5

    excess = np.maximum(frame.astype(np.float64) - channel_threshold, 0.0) / (255 - channel_threshold)
    per_pixel = excess.max(axis=2)
    row_intensity = np.minimum(per_pixel.mean(axis=1), 1.0)

    rows = {int(r): float(row_intensity[r]) for r in np.flatnonzero(row_hit)}
    if rows:
        affected = frame[row_hit].reshape(-1, 3).astype(np.float64)
        color = tuple(float(c) for c in affected.mean(axis=0) / 255.0)
    else:
        color = (0.0, 0.0, 0.0)
    return DistortionPattern(frame_index=frame_index, intervals=_group_rows(rows), color=color)
