"""Deterministic synthetic fixtures: scenes, a toy detector, stealth corpora.

Everything here is a desk-scale stand-in for field data.  Scenes are
procedurally generated street-like frames with colored vehicle blobs moving
over a textured background; the toy detector finds those blobs by color
segmentation, so attacks disrupt it through the pixels exactly like a real
detector, just more legibly.  It exists for tests, demos and golden files —
real detections come from an external bridge over the box-file interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from rollsim.corruption import BlindingModel, Frame, blind, overlay
from rollsim.detection_eval import BoxSet, DetectionBox
from rollsim.pattern_synth import DistortionPattern, TimelineConfig, synthesize
from rollsim.sensor_timing import CameraSpec, EnvConditions, LaserConfig

__all__ = [
    "OBJECT_COLORS",
    "SceneSpec",
    "desk_camera",
    "render_frame",
    "make_scene_frames",
    "toy_detect",
    "make_stealth_corpus",
    "make_street_corpus",
]

# Saturated vehicle paints, far from anything the background produces.
OBJECT_COLORS = {
    "car": (200, 40, 40),
    "van": (40, 70, 200),
    "bus": (220, 180, 30),
}
_COLOR_TOLERANCE = 60.0


@dataclass(frozen=True)
class _SceneObject:
    label: str
    x: float
    y: float
    w: int
    h: int
    vx: float
    vy: float


@dataclass(frozen=True)
class SceneSpec:
    """One procedurally generated 'video': background waves plus objects."""

    width: int
    height: int
    objects: tuple[_SceneObject, ...]
    waves: tuple[tuple[float, float, float, float], ...]  # (amp, fx, fy, phase)
    pan_speed: float


def desk_camera(n_visible: int, dead_fraction: float = 0.5, frame_rate: float = 25.0) -> CameraSpec:
    """Camera whose visible rows match a fixture frame height."""
    n_total = round(n_visible / (1 - dead_fraction))
    return CameraSpec(
        frame_rate=frame_rate,
        n_rows_total=n_total,
        n_rows_visible=n_visible,
        name=f"desk{n_visible}",
    )


def make_scene_spec(
    width: int,
    height: int,
    rng: np.random.Generator,
    n_objects: int = 4,
    motion_scale: float = 2.0,
) -> SceneSpec:
    labels = list(OBJECT_COLORS)
    objects = []
    for _ in range(n_objects):
        w = int(rng.integers(width // 8, width // 4))
        h = int(rng.integers(height // 8, height // 5))
        objects.append(
            _SceneObject(
                label=labels[int(rng.integers(len(labels)))],
                x=float(rng.uniform(0, width - w)),
                y=float(rng.uniform(0, height - h)),
                w=w,
                h=h,
                vx=float(rng.uniform(-motion_scale, motion_scale)),
                vy=float(rng.uniform(-motion_scale / 2, motion_scale / 2)),
            )
        )
    # A few broad waves plus window-scale texture: translation then
    # decorrelates local windows the way real scene motion does.
    waves = tuple(
        (
            float(rng.uniform(10, 24)),
            float(rng.uniform(0.5, 3.0)),
            float(rng.uniform(0.5, 3.0)),
            float(rng.uniform(0, 2 * math.pi)),
        )
        for _ in range(3)
    ) + tuple(
        (
            float(rng.uniform(3, 9)),
            float(rng.uniform(4.0, 13.0)),
            float(rng.uniform(4.0, 13.0)),
            float(rng.uniform(0, 2 * math.pi)),
        )
        for _ in range(9)
    )
    return SceneSpec(
        width=width,
        height=height,
        objects=tuple(objects),
        waves=waves,
        pan_speed=float(rng.uniform(0, motion_scale)),
    )


def render_frame(spec: SceneSpec, t: float, frame_id: str, noise_seed: int | None = None) -> Frame:
    """Rasterize the scene at time t (in frame units).

    noise_seed adds per-frame Gaussian sensor noise (sigma 2 DN), so even a
    static scene never repeats byte-exactly between captures.
    """
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    pan = spec.pan_speed * t
    base = np.full((h, w), 92.0)
    for amp, fx, fy, phase in spec.waves:
        base += amp * np.sin(2 * math.pi * (fx * (xx + pan) / w + fy * yy / h) + phase + 0.05 * t)
    px = np.empty((h, w, 3), dtype=np.float64)
    px[:, :, 0] = base * 0.92
    px[:, :, 1] = base
    px[:, :, 2] = base * 0.85

    for obj in spec.objects:
        x = int(round(obj.x + obj.vx * t)) % w
        y = int(round(obj.y + obj.vy * t)) % h
        x1, y1 = x, y
        x2, y2 = min(x + obj.w, w), min(y + obj.h, h)
        if x2 > x1 and y2 > y1:
            px[y1:y2, x1:x2] = OBJECT_COLORS[obj.label]
    if noise_seed is not None:
        px += np.random.default_rng(noise_seed).normal(0.0, 2.0, size=px.shape)
    return Frame(frame_id=frame_id, pixels=np.clip(np.rint(px), 0, 255).astype(np.uint8))


def make_scene_frames(
    n_frames: int,
    width: int,
    height: int,
    seed: int,
    n_objects: int = 4,
    motion_scale: float = 2.0,
) -> list[Frame]:
    rng = np.random.default_rng(seed)
    spec = make_scene_spec(width, height, rng, n_objects=n_objects, motion_scale=motion_scale)
    return [render_frame(spec, t, f"{t:06d}") for t in range(n_frames)]


def toy_detect(frame: Frame, score_threshold: float = 0.5, min_area: int = 120) -> BoxSet:
    """Color-segmentation detector for the fixture vehicle palette.

    Score is the component's fill ratio inside its bounding box, so split or
    shredded blobs drop out the way low-confidence detections would.
    """
    px = frame.pixels.astype(np.float64)
    boxes = []
    for label, color in OBJECT_COLORS.items():
        dist = np.sqrt(((px - np.asarray(color)) ** 2).sum(axis=2))
        mask = dist < _COLOR_TOLERANCE
        components, n = ndimage.label(mask)
        for idx in range(1, n + 1):
            ys, xs = np.nonzero(components == idx)
            area = len(ys)
            if area < min_area:
                continue
            x1, x2 = int(xs.min()), int(xs.max()) + 1
            y1, y2 = int(ys.min()), int(ys.max()) + 1
            score = min(1.0, area / ((x2 - x1) * (y2 - y1)))
            if score >= score_threshold:
                boxes.append(
                    DetectionBox(x1=x1, y1=y1, x2=x2, y2=y2, class_label=label, score=score)
                )
    return sorted(boxes, key=lambda b: (b.x1, b.y1, b.x2, b.y2, b.class_label))


def _stealth_laser(gain: float) -> LaserConfig:
    return LaserConfig(frequency=750.0, duty_cycle=0.40, color=(0.2, 1.0, 0.25), irradiance_gain=gain)


def make_stealth_corpus(
    n_videos: int = 20,
    pairs_per_video: int = 5,
    width: int = 256,
    height: int = 192,
    seed: int = 1234,
    gain_range: tuple[float, float] = (0.01, 0.22),
    t_exp_us: float = 32.0,
    motion_range: tuple[float, float] = (0.5, 4.5),
    blinding: BlindingModel | None = None,
) -> dict[str, list[tuple[str, int, Frame, Frame]]]:
    """Consecutive-frame pairs per scenario for the stealth comparison.

    Legit pairs carry the scene's own motion (magnitude varies per video);
    rolling pairs overlay a synthesized pattern on the current frame;
    blinding floods it.  The effective laser strength varies per video
    (log-uniform over gain_range), standing in for the spread of attack
    configurations a sweep produces.  Deterministic in the seed.
    """
    blinding = blinding or BlindingModel()
    camera = desk_camera(height)
    env = EnvConditions(ambient_illuminance=7800.0, exposure_time_us=t_exp_us)
    master = np.random.default_rng(seed)
    pairs: dict[str, list[tuple[str, int, Frame, Frame]]] = {
        "legit": [],
        "rolling": [],
        "blinding": [],
    }
    for v in range(n_videos):
        video_id = f"video{v:03d}"
        video_seed = int(master.integers(2**31))
        rng = np.random.default_rng(video_seed)
        # Motion varies widely across videos (slow sweep to fast driving
        # pan) so legitimate frame-to-frame change spans a broad range.
        motion = float(rng.uniform(*motion_range))
        gain = float(np.exp(rng.uniform(np.log(gain_range[0]), np.log(gain_range[1]))))
        spec = make_scene_spec(width, height, rng, n_objects=3, motion_scale=motion)
        patterns = synthesize(
            TimelineConfig(
                spec=camera,
                laser=_stealth_laser(gain),
                env=env,
                n_frames=pairs_per_video,
                seed=video_seed,
            )
        )
        for i in range(pairs_per_video):
            t = i * 3.0
            prev = render_frame(spec, t, f"{2*i:06d}", noise_seed=video_seed + 7919 * i)
            curr = render_frame(spec, t + 1.0, f"{2*i+1:06d}", noise_seed=video_seed + 7919 * i + 1)
            pairs["legit"].append((video_id, i, prev, curr))
            pat = patterns[i] if i < len(patterns) else DistortionPattern(i, (), (0, 1, 0))
            pairs["rolling"].append((video_id, i, prev, overlay(curr, pat)))
            pairs["blinding"].append((video_id, i, prev, blind(curr, blinding)))
    return pairs


def make_street_corpus(
    n_frames: int = 50,
    width: int = 640,
    height: int = 360,
    seed: int = 99,
    n_objects: int = 6,
) -> list[Frame]:
    """Street-scene fixture frames sized for the detector bridge."""
    return make_scene_frames(
        n_frames, width, height, seed, n_objects=n_objects, motion_scale=3.0
    )
