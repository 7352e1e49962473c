"""Detector registry: batch inference producing interchange box files.

Frames are resized to 640x360 before inference.  Two backend families:

* ``fixture-blob`` — a deterministic color-segmentation detector for the
  simulator's synthetic street fixtures; needs no weights and runs anywhere.
* ``torchvision:<model>`` — pretrained COCO detectors (ssdlite, ssd300,
  faster-rcnn).  Checkpoints are loaded from an explicit weights path or the
  torchvision download cache; without either, the run aborts with
  instructions rather than producing silent garbage.

Inference is single-process CPU with deterministic algorithms enabled, so a
rerun over the same frames yields an identical box file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from rollsim_ml.interchange import Box, list_frame_files, read_frame, resize_frame, save_boxes

__all__ = ["DetectorRun", "run_detector", "fixture_blob_detect", "available_models"]

INFERENCE_SIZE = (640, 360)  # (width, height)

# Palette of the simulator's synthetic vehicles.
FIXTURE_COLORS = {
    "car": (200, 40, 40),
    "van": (40, 70, 200),
    "bus": (220, 180, 30),
}
_COLOR_TOLERANCE = 60.0
_MIN_AREA = 120

_TORCHVISION_MODELS = (
    "torchvision:ssdlite320_mobilenet_v3_large",
    "torchvision:ssd300_vgg16",
    "torchvision:fasterrcnn_resnet50_fpn",
)

# COCO categories produced by the torchvision detection zoo.
COCO_CLASSES = {1: "person", 2: "bicycle", 3: "car", 4: "motorcycle", 6: "bus", 8: "truck"}


@dataclass(frozen=True)
class DetectorRun:
    """One batch-inference job over a frame directory."""

    model: str
    frames_dir: Path
    out_path: Path
    score_threshold: float = 0.5
    weights: Path | None = None
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.score_threshold <= 1):
            raise ValueError(f"score_threshold must be in [0,1], got {self.score_threshold}")


def available_models() -> list[str]:
    return ["fixture-blob", *_TORCHVISION_MODELS]


def fixture_blob_detect(pixels: np.ndarray, score_threshold: float = 0.5) -> list[Box]:
    """Color segmentation over the fixture vehicle palette.

    Connected components of palette-colored pixels become boxes; the score
    is the component's fill ratio, so blobs shredded by injected rows fall
    below threshold like low-confidence detections.
    """
    px = pixels.astype(np.float64)
    boxes = []
    for label, color in FIXTURE_COLORS.items():
        dist = np.sqrt(((px - np.asarray(color)) ** 2).sum(axis=2))
        components, n = ndimage.label(dist < _COLOR_TOLERANCE)
        for idx in range(1, n + 1):
            ys, xs = np.nonzero(components == idx)
            area = len(ys)
            if area < _MIN_AREA:
                continue
            x1, x2 = int(xs.min()), int(xs.max()) + 1
            y1, y2 = int(ys.min()), int(ys.max()) + 1
            score = min(1.0, area / ((x2 - x1) * (y2 - y1)))
            if score >= score_threshold:
                boxes.append(Box(x1, y1, x2, y2, label, score))
    return sorted(boxes, key=lambda b: (b.x1, b.y1, b.x2, b.y2, b.class_label))


def _load_torchvision_model(name: str, weights: Path | None):
    import torch

    try:
        from torchvision.models import detection as tvdet
    except ImportError as exc:
        raise RuntimeError(
            "torchvision is not installed; `pip install torchvision` or use "
            "--model fixture-blob"
        ) from exc

    arch = name.split(":", 1)[1]
    builders = {
        "ssdlite320_mobilenet_v3_large": tvdet.ssdlite320_mobilenet_v3_large,
        "ssd300_vgg16": tvdet.ssd300_vgg16,
        "fasterrcnn_resnet50_fpn": tvdet.fasterrcnn_resnet50_fpn,
    }
    if arch not in builders:
        raise ValueError(f"unknown torchvision model {arch!r}; choose from {sorted(builders)}")
    if weights is not None:
        if not Path(weights).exists():
            raise RuntimeError(f"weights file not found: {weights}")
        model = builders[arch](weights=None)
        model.load_state_dict(torch.load(weights, map_location="cpu"))
    else:
        try:
            model = builders[arch](weights="DEFAULT")
        except Exception as exc:
            raise RuntimeError(
                f"could not fetch pretrained weights for {arch} (offline?); pass "
                f"--weights /path/to/checkpoint.pth or use --model fixture-blob"
            ) from exc
    model.eval()
    return model


def _torchvision_detect(model, pixels: np.ndarray, score_threshold: float) -> list[Box]:
    import torch

    x = torch.from_numpy(pixels).permute(2, 0, 1).float() / 255.0
    with torch.no_grad():
        pred = model([x])[0]
    boxes = []
    for (x1, y1, x2, y2), label, score in zip(
        pred["boxes"].tolist(), pred["labels"].tolist(), pred["scores"].tolist()
    ):
        if score < score_threshold or int(label) not in COCO_CLASSES:
            continue
        if x2 <= x1 or y2 <= y1:
            continue
        boxes.append(Box(x1, y1, x2, y2, COCO_CLASSES[int(label)], score))
    return sorted(boxes, key=lambda b: (b.x1, b.y1, b.x2, b.y2, b.class_label))


def run_detector(run: DetectorRun) -> dict:
    """Detect over every frame in the directory, writing boxes + metadata.

    Unreadable frames are skipped with a warning recorded in the metadata
    sidecar (<out>.meta.json); the run aborts only for configuration and
    model problems.
    """
    import torch

    torch.manual_seed(run.seed)
    torch.use_deterministic_algorithms(True)

    if run.model == "fixture-blob":
        detect = lambda px: fixture_blob_detect(px, run.score_threshold)
    elif run.model in _TORCHVISION_MODELS:
        model = _load_torchvision_model(run.model, run.weights)
        detect = lambda px: _torchvision_detect(model, px, run.score_threshold)
    else:
        raise ValueError(f"unknown model {run.model!r}; available: {available_models()}")

    frame_files = list_frame_files(run.frames_dir)
    boxes_by_frame: dict[str, list[Box]] = {}
    warnings: list[str] = []
    for frame_id, path in frame_files:
        try:
            pixels = read_frame(path)
        except Exception as exc:
            warnings.append(f"skipped unreadable frame {path.name}: {exc}")
            continue
        resized = resize_frame(pixels, *INFERENCE_SIZE)
        boxes_by_frame[frame_id] = detect(resized)

    save_boxes(run.out_path, boxes_by_frame)
    meta = {
        "model": run.model,
        "score_threshold": run.score_threshold,
        "inference_size": list(INFERENCE_SIZE),
        "deterministic_algorithms": True,
        "seed": run.seed,
        "n_frames": len(boxes_by_frame),
        "n_boxes": sum(len(v) for v in boxes_by_frame.values()),
        "warnings": warnings,
    }
    with open(str(run.out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    return meta
