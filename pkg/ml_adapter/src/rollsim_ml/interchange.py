"""File formats shared with the simulator: box JSONL, pattern JSON, frames.

The simulator is consumed only through these published formats, never
imported: box records are newline-delimited JSON objects with a frame_id
and a box list; pattern files carry per-frame row intervals with
per-row intensities; frames are numbered PNGs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "Box",
    "FRAME_NAME_RE",
    "list_frame_files",
    "read_frame",
    "resize_frame",
    "save_boxes",
    "load_boxes",
    "load_patterns",
    "overlay_pattern",
]

FRAME_NAME_RE = re.compile(r"^(\d{6})\.png$")


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float
    class_label: str
    score: float

    def to_dict(self) -> dict:
        return {
            "x1": self.x1,
            "y1": self.y1,
            "x2": self.x2,
            "y2": self.y2,
            "class": self.class_label,
            "score": self.score,
        }


def list_frame_files(frames_dir: str | Path) -> list[tuple[str, Path]]:
    """Numbered frame files in numeric order as (frame_id, path)."""
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"frame directory not found: {frames_dir}")
    found = []
    for p in frames_dir.iterdir():
        m = FRAME_NAME_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), m.group(1), p))
    found.sort()
    return [(fid, path) for _, fid, path in found]


def read_frame(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def resize_frame(pixels: np.ndarray, width: int = 640, height: int = 360) -> np.ndarray:
    """Bilinear resize to the inference resolution."""
    if pixels.shape[0] == height and pixels.shape[1] == width:
        return pixels
    im = Image.fromarray(pixels).resize((width, height), Image.BILINEAR)
    return np.asarray(im, dtype=np.uint8)


def save_boxes(path: str | Path, boxes_by_frame: dict[str, list[Box]]):
    with open(path, "w") as fh:
        for frame_id in sorted(boxes_by_frame):
            rec = {"frame_id": frame_id,
                   "boxes": [b.to_dict() for b in boxes_by_frame[frame_id]]}
            fh.write(json.dumps(rec) + "\n")


def load_boxes(path: str | Path) -> dict[str, list[Box]]:
    out: dict[str, list[Box]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out[rec["frame_id"]] = [
                Box(b["x1"], b["y1"], b["x2"], b["y2"], b["class"], b["score"])
                for b in rec["boxes"]
            ]
    return out


def load_patterns(path: str | Path) -> tuple[dict, list[dict]]:
    """Pattern file -> (meta, frame pattern dicts)."""
    with open(path) as fh:
        doc = json.load(fh)
    if "meta" not in doc or "frames" not in doc:
        raise ValueError(f"{path}: not a pattern file (needs meta and frames)")
    return doc["meta"], doc["frames"]


def overlay_pattern(pixels: np.ndarray, pattern: dict) -> np.ndarray:
    """Additive overlay with 255 clamp, per the pattern-file contract."""
    out = pixels.astype(np.float64)
    color = 255.0 * np.asarray(pattern["color"])
    for iv in pattern["intervals"]:
        lo, hi = iv["start"], iv["end"]
        if hi >= pixels.shape[0]:
            raise ValueError(
                f"pattern interval [{lo}, {hi}] exceeds frame height {pixels.shape[0]}"
            )
        boost = np.asarray(iv["intensity"])[:, None, None] * color[None, None, :]
        out[lo : hi + 1] += boost
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
