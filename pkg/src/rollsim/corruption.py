"""Apply distortion patterns or blinding floods to legitimate frames.

Both attack types add light: laser photons accumulate on top of the scene
charge, so compositing is additive with a 255 clamp, never alpha blending.
Rolling-shutter overlays touch only the pattern's rows; blinding is a
whole-frame radial flood with Gaussian falloff from a center point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rollsim.pattern_synth import DistortionPattern

__all__ = [
    "Frame",
    "BlindingModel",
    "CorruptionManifest",
    "overlay",
    "blind",
    "corrupt_corpus",
]


@dataclass(frozen=True)
class Frame:
    """8-bit RGB frame with a stable identifier."""

    frame_id: str
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(f"pixels must be (H, W, 3) uint8, got {px.shape} {px.dtype}")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BlindingModel:
    """Additive radial flood: out = in + peak*255*color*exp(-(d/radius)^2).

    center is in frame fractions; d is the distance from it in the same
    normalized coordinates, so the falloff is resolution-independent.
    """

    center: tuple[float, float] = (0.5, 0.5)
    peak_intensity: float = 1.0
    falloff_radius: float = 0.75
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not (0 <= self.peak_intensity <= 1):
            raise ValueError(f"peak_intensity must be in [0,1], got {self.peak_intensity}")
        if self.falloff_radius <= 0:
            raise ValueError(f"falloff_radius must be > 0, got {self.falloff_radius}")

    def params(self) -> dict:
        return {
            "center": list(self.center),
            "peak_intensity": self.peak_intensity,
            "falloff_radius": self.falloff_radius,
            "color": list(self.color),
        }


def overlay(frame: Frame, pattern: DistortionPattern) -> Frame:
    """Brighten the pattern's rows; all other pixels stay byte-identical."""
    out = frame.pixels.copy()
    add = 255.0 * np.asarray(pattern.color)
    for iv in pattern.intervals:
        if iv.end >= frame.height:
            raise ValueError(
                f"interval [{iv.start}, {iv.end}] exceeds frame height {frame.height}"
            )
        rows = out[iv.start : iv.end + 1].astype(np.float64)
        boost = np.asarray(iv.intensity)[:, None, None] * add[None, None, :]
        out[iv.start : iv.end + 1] = np.clip(np.rint(rows + boost), 0, 255).astype(np.uint8)
    return Frame(frame_id=frame.frame_id, pixels=out)


def blind(frame: Frame, model: BlindingModel) -> Frame:
    """Flood the whole frame with center-weighted light."""
    h, w = frame.height, frame.width
    ys = np.arange(h) / max(h - 1, 1)
    xs = np.arange(w) / max(w - 1, 1)
    dy = ys[:, None] - model.center[1]
    dx = xs[None, :] - model.center[0]
    g = np.exp(-((dx**2 + dy**2) / model.falloff_radius**2))
    boost = model.peak_intensity * 255.0 * g[:, :, None] * np.asarray(model.color)[None, None, :]
    out = np.clip(np.rint(frame.pixels.astype(np.float64) + boost), 0, 255).astype(np.uint8)
    return Frame(frame_id=frame.frame_id, pixels=out)


@dataclass
class CorruptionManifest:
    """Record of every (frame, pattern/model) pairing in a corrupted corpus."""

    mode: str  # "rolling" or "blinding"
    seed: int
    every_k: int
    entries: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "every_k": self.every_k,
            "entries": self.entries,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorruptionManifest":
        return cls(mode=d["mode"], seed=d["seed"], every_k=d["every_k"], entries=d["entries"])


def corrupt_corpus(
    frames: list[Frame],
    attack: list[DistortionPattern] | BlindingModel,
    every_k: int = 1,
    seed: int = 0,
) -> tuple[list[Frame], CorruptionManifest]:
    """Corrupt every k-th frame with a seeded pattern assignment.

    Pattern mode draws one pattern per selected frame from the supplied
    list; blinding mode applies the model uniformly.  The manifest records
    each pairing so a re-run with the same seed replays bit-identically.
    """
    if not frames:
        raise ValueError("empty corpus")
    if every_k < 1:
        raise ValueError(f"every_k must be >= 1, got {every_k}")

    selected = frames[::every_k]
    corrupted = []

    if isinstance(attack, BlindingModel):
        manifest = CorruptionManifest(mode="blinding", seed=seed, every_k=every_k)
        for fr in selected:
            corrupted.append(blind(fr, attack))
            manifest.entries.append({"frame_id": fr.frame_id, "model": attack.params()})
        return corrupted, manifest

    patterns = list(attack)
    if not patterns:
        raise ValueError("no patterns supplied")
    height = frames[0].height
    for p in patterns:
        for iv in p.intervals:
            if iv.end >= height:
                raise ValueError(
                    f"pattern frame_index={p.frame_index} interval end {iv.end} "
                    f"exceeds frame height {height}"
                )
    rng = np.random.default_rng(seed)
    manifest = CorruptionManifest(mode="rolling", seed=seed, every_k=every_k)
    for fr in selected:
        idx = int(rng.integers(len(patterns)))
        pat = patterns[idx]
        corrupted.append(overlay(fr, pat))
        manifest.entries.append(
            {
                "frame_id": fr.frame_id,
                "pattern_index": idx,
                "pattern_frame_index": pat.frame_index,
                "n_intervals": len(pat.intervals),
                "color": list(pat.color),
            }
        )
    return corrupted, manifest
