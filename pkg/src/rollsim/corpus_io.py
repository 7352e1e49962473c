"""Load and store the artifacts the pipeline exchanges.

Frame corpora are directories of numbered PNGs (%06d.png) — lossless, since
the attack's thin row bands would not survive a lossy codec.  Patterns and
manifests are JSON; detection boxes are newline-delimited JSON (one record
per frame); tables are plain CSV with a mandatory header.  Every persisted
type round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from rollsim.corruption import CorruptionManifest, Frame
from rollsim.detection_eval import BoxSet, DetectionBox, GroupSummary
from rollsim.pattern_synth import DistortionPattern
from rollsim.stealth_metrics import MetricReport, StealthRecord

__all__ = [
    "Corpus",
    "SchemaError",
    "DataError",
    "load_frames",
    "save_frames",
    "load_boxes",
    "save_boxes",
    "load_patterns",
    "save_patterns",
    "load_manifest",
    "save_manifest",
    "write_records_csv",
    "read_records_csv",
    "write_auc_report_csv",
    "write_summary_csv",
    "write_surface_csv",
    "write_correlation_csv",
]

FRAME_NAME_RE = re.compile(r"^(\d{6})\.png$")


class DataError(Exception):
    """Unreadable or inconsistent input data."""


class SchemaError(DataError):
    """Structured file violates its schema; message carries line and field."""


@dataclass(frozen=True)
class Corpus:
    """A directory-backed frame sequence with a single resolution."""

    root: Path
    frame_ids: tuple[str, ...]
    resolution: tuple[int, int]  # (width, height)
    camera_id: str = ""

    def __len__(self):
        return len(self.frame_ids)

    def path_of(self, frame_id: str) -> Path:
        return self.root / f"{frame_id}.png"

    def load_frame(self, frame_id: str) -> Frame:
        return _read_png(self.path_of(frame_id), frame_id)

    def iter_frames(self):
        for fid in self.frame_ids:
            yield self.load_frame(fid)


def _read_png(path: Path, frame_id: str) -> Frame:
    try:
        with Image.open(path) as im:
            px = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise DataError(f"unreadable frame file {path}: {exc}") from exc
    return Frame(frame_id=frame_id, pixels=px)


def load_frames(path: str | Path, every_k: int = 1, camera_id: str = "") -> Corpus:
    """Index every k-th numbered PNG in a directory, checking resolutions."""
    root = Path(path)
    if every_k < 1:
        raise ValueError(f"every_k must be >= 1, got {every_k}")
    if not root.is_dir():
        raise DataError(f"frame directory not found: {root}")
    numbered = []
    for p in root.iterdir():
        m = FRAME_NAME_RE.match(p.name)
        if m:
            numbered.append((int(m.group(1)), m.group(1)))
    if not numbered:
        raise DataError(f"no frames matching NNNNNN.png in {root}")
    numbered.sort()
    selected = [fid for _, fid in numbered][::every_k]

    resolution = None
    for fid in selected:
        fr = _read_png(root / f"{fid}.png", fid)
        res = (fr.width, fr.height)
        if resolution is None:
            resolution = res
        elif res != resolution:
            raise DataError(
                f"resolution mismatch in {root}: frame {fid} is {res}, expected {resolution}"
            )
    return Corpus(root=root, frame_ids=tuple(selected), resolution=resolution, camera_id=camera_id)


def save_frames(frames: list[Frame], out_dir: str | Path) -> Corpus:
    """Write frames as numbered PNGs; ids must be numeric six-digit strings."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for fr in frames:
        if not FRAME_NAME_RE.match(f"{fr.frame_id}.png"):
            raise ValueError(f"frame_id {fr.frame_id!r} is not a six-digit id")
        Image.fromarray(fr.pixels).save(out / f"{fr.frame_id}.png")
    ids = tuple(sorted(fr.frame_id for fr in frames))
    res = (frames[0].width, frames[0].height) if frames else (0, 0)
    return Corpus(root=out, frame_ids=ids, resolution=res)


# ---------------------------------------------------------------------------
# Detection boxes: one JSON record per frame, newline delimited.

_BOX_FIELDS = ("x1", "y1", "x2", "y2", "class", "score")


def save_boxes(path: str | Path, boxes_by_frame: dict[str, BoxSet]):
    with open(path, "w") as fh:
        for frame_id in sorted(boxes_by_frame):
            rec = {
                "frame_id": frame_id,
                "boxes": [
                    {
                        "x1": b.x1,
                        "y1": b.y1,
                        "x2": b.x2,
                        "y2": b.y2,
                        "class": b.class_label,
                        "score": b.score,
                    }
                    for b in boxes_by_frame[frame_id]
                ],
            }
            fh.write(json.dumps(rec) + "\n")


def load_boxes(path: str | Path) -> dict[str, BoxSet]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"box file not found: {path}")
    out: dict[str, BoxSet] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "frame_id" not in rec:
                raise SchemaError(f"{path}:{lineno}: missing field 'frame_id'")
            if not isinstance(rec.get("boxes"), list):
                raise SchemaError(f"{path}:{lineno}: field 'boxes' must be a list")
            frame_id = rec["frame_id"]
            if frame_id in out:
                raise SchemaError(f"{path}:{lineno}: duplicate frame_id {frame_id!r}")
            boxes = []
            for i, b in enumerate(rec["boxes"]):
                for f in _BOX_FIELDS:
                    if f not in b:
                        raise SchemaError(f"{path}:{lineno}: boxes[{i}]: missing field '{f}'")
                try:
                    boxes.append(
                        DetectionBox(
                            x1=float(b["x1"]),
                            y1=float(b["y1"]),
                            x2=float(b["x2"]),
                            y2=float(b["y2"]),
                            class_label=str(b["class"]),
                            score=float(b["score"]),
                        )
                    )
                except ValueError as exc:
                    raise SchemaError(f"{path}:{lineno}: boxes[{i}]: {exc}") from exc
            out[frame_id] = boxes
    return out


# ---------------------------------------------------------------------------
# Pattern sequences and corruption manifests (JSON documents).


def save_patterns(path: str | Path, patterns: list[DistortionPattern], meta: dict):
    doc = {"meta": meta, "frames": [p.to_dict() for p in patterns]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_patterns(path: str | Path) -> tuple[list[DistortionPattern], dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"pattern file not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("meta", "frames"):
        if key not in doc:
            raise SchemaError(f"{path}: missing top-level field '{key}'")
    try:
        patterns = [DistortionPattern.from_dict(d) for d in doc["frames"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: bad pattern record: {exc}") from exc
    return patterns, doc["meta"]


def save_manifest(path: str | Path, manifest: CorruptionManifest):
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=1)


def load_manifest(path: str | Path) -> CorruptionManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return CorruptionManifest.from_dict(doc)
    except KeyError as exc:
        raise SchemaError(f"{path}: missing manifest field {exc}") from exc


# ---------------------------------------------------------------------------
# CSV tables. Comma separator, '.' decimal point, header row mandatory.


def _write_csv(path: str | Path, header: list[str], rows: list[list]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_records_csv(path: str | Path, records: list[StealthRecord]):
    rows = []
    for rec in records:
        for metric in ("ssim", "msssim", "uqi"):
            rows.append([rec.video_id, rec.pair_index, rec.scenario, metric, repr(rec.get(metric))])
    _write_csv(path, ["video_id", "pair_index", "scenario", "metric", "dissimilarity"], rows)


def read_records_csv(path: str | Path) -> list[StealthRecord]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"records file not found: {path}")
    grouped: dict[tuple[str, int, str], dict[str, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"video_id", "pair_index", "scenario", "metric", "dissimilarity"}
        if set(reader.fieldnames or ()) != expected:
            raise SchemaError(f"{path}: header must be {sorted(expected)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["video_id"], int(row["pair_index"]), row["scenario"])
                grouped.setdefault(key, {})[row["metric"]] = float(row["dissimilarity"])
            except (ValueError, KeyError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    records = []
    for (vid, idx, scenario), metrics in sorted(grouped.items()):
        missing = {"ssim", "msssim", "uqi"} - set(metrics)
        if missing:
            raise SchemaError(f"{path}: pair {vid}/{idx}/{scenario} missing metrics {sorted(missing)}")
        records.append(
            StealthRecord(
                video_id=vid,
                pair_index=idx,
                scenario=scenario,
                ssim_d=metrics["ssim"],
                msssim_d=metrics["msssim"],
                uqi_d=metrics["uqi"],
            )
        )
    return records


def write_auc_report_csv(path: str | Path, reports: list[MetricReport]):
    rows = [
        [r.metric, r.scenario, repr(r.auc), repr(r.threshold_at_0fpr), repr(r.detection_rate_at_0fpr)]
        for r in reports
    ]
    _write_csv(
        path,
        ["metric", "scenario", "auc", "threshold_at_0fpr", "detection_rate_at_0fpr"],
        rows,
    )


def write_summary_csv(path: str | Path, summaries: list[GroupSummary]):
    """Outcome table keyed by (f_hz, t_exp_us, t_on_us) parameter tuples."""
    rows = []
    for s in summaries:
        f_hz, t_exp, t_on = s.params
        rows.append(
            [
                repr(float(f_hz)),
                repr(float(t_exp)),
                repr(float(t_on)),
                repr(s.hidden_mean),
                repr(s.misplaced_mean),
                repr(s.appeared_mean),
                repr(s.hidden_std),
                repr(s.misplaced_std),
                repr(s.appeared_std),
                s.n_reports,
            ]
        )
    _write_csv(
        path,
        [
            "f_hz",
            "t_exp_us",
            "t_on_us",
            "hidden",
            "misplaced",
            "appeared",
            "hidden_std",
            "misplaced_std",
            "appeared_std",
            "n_reports",
        ],
        rows,
    )


def write_surface_csv(path: str | Path, rows: list[tuple[float, float, float, float]]):
    _write_csv(
        path,
        ["t_exp_true_us", "t_exp_est_us", "t_on_us", "ratio"],
        [[repr(a), repr(b), repr(c), repr(d)] for a, b, c, d in rows],
    )


def write_correlation_csv(path: str | Path, rows: list[tuple[str, str, float]]):
    _write_csv(
        path,
        ["channel", "scenario", "correlation"],
        [[ch, sc, repr(corr)] for ch, sc, corr in rows],
    )
