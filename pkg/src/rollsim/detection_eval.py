"""Categorize how an attack changed a detector's output, box by box.

For each box found on the clean frame the outcome is decided against the
corrupted frame's boxes (and vice versa for "appeared"):

    hidden     no corrupted box overlaps it with IoU > 0.5
    misplaced  some box overlaps, but the best same-class match has IoU < 0.95
    unaltered  best same-class match has IoU >= 0.95
    appeared   a corrupted box no original box overlaps with IoU > 0.5

Matching is non-exclusive max-IoU per box: the definitions are existence
quantifiers, so no one-to-one assignment is computed.  Every original box
lands in exactly one of hidden/misplaced/unaltered.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

__all__ = [
    "DetectionBox",
    "BoxSet",
    "OutcomeReport",
    "GroupSummary",
    "iou",
    "categorize",
    "aggregate",
]

IOU_EXISTENCE = 0.5
IOU_PLACEMENT = 0.95


@dataclass(frozen=True)
class DetectionBox:
    x1: float
    y1: float
    x2: float
    y2: float
    class_label: str
    score: float = 1.0

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box ({self.x1},{self.y1},{self.x2},{self.y2})")
        if not (0 <= self.score <= 1):
            raise ValueError(f"score must be in [0,1], got {self.score}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


BoxSet = list[DetectionBox]


def iou(a: DetectionBox, b: DetectionBox) -> float:
    """Intersection area over union area, in [0, 1]."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass
class OutcomeReport:
    """Per-frame attack outcome counts and fractions.

    Fractions for hidden/misplaced/unaltered are over the original box
    count; appeared is over the corrupted box count.
    """

    frame_id: str = ""
    params: tuple = ()
    n_original: int = 0
    n_corrupted: int = 0
    hidden: int = 0
    misplaced: int = 0
    unaltered: int = 0
    appeared: int = 0

    @property
    def hidden_fraction(self) -> float:
        return self.hidden / self.n_original if self.n_original else 0.0

    @property
    def misplaced_fraction(self) -> float:
        return self.misplaced / self.n_original if self.n_original else 0.0

    @property
    def unaltered_fraction(self) -> float:
        return self.unaltered / self.n_original if self.n_original else 0.0

    @property
    def appeared_fraction(self) -> float:
        return self.appeared / self.n_corrupted if self.n_corrupted else 0.0


def categorize(original: BoxSet, corrupted: BoxSet, frame_id: str = "", params: tuple = ()) -> OutcomeReport:
    """Classify every original box as hidden/misplaced/unaltered and every
    corrupted box as appeared or matched."""
    report = OutcomeReport(
        frame_id=frame_id,
        params=params,
        n_original=len(original),
        n_corrupted=len(corrupted),
    )
    for box in original:
        best_any = max((iou(box, c) for c in corrupted), default=0.0)
        if best_any <= IOU_EXISTENCE:
            report.hidden += 1
            continue
        best_same = max(
            (iou(box, c) for c in corrupted if c.class_label == box.class_label),
            default=0.0,
        )
        if best_same < IOU_PLACEMENT:
            report.misplaced += 1
        else:
            report.unaltered += 1
    for box in corrupted:
        best_any = max((iou(box, o) for o in original), default=0.0)
        if best_any <= IOU_EXISTENCE:
            report.appeared += 1
    return report


@dataclass(frozen=True)
class GroupSummary:
    """Mean and population std of outcome fractions for one parameter group."""

    params: tuple
    n_reports: int
    hidden_mean: float
    hidden_std: float
    misplaced_mean: float
    misplaced_std: float
    appeared_mean: float
    appeared_std: float


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, var**0.5


def aggregate(reports: list[OutcomeReport]) -> list[GroupSummary]:
    """Group by parameter tuple; error bars are std over the reports."""
    if not reports:
        raise ValueError("no reports to aggregate")
    groups: dict[tuple, list[OutcomeReport]] = defaultdict(list)
    for r in reports:
        groups[r.params].append(r)
    summaries = []
    for params in sorted(groups):
        rs = groups[params]
        h_mean, h_std = _mean_std([r.hidden_fraction for r in rs])
        m_mean, m_std = _mean_std([r.misplaced_fraction for r in rs])
        a_mean, a_std = _mean_std([r.appeared_fraction for r in rs])
        summaries.append(
            GroupSummary(
                params=params,
                n_reports=len(rs),
                hidden_mean=h_mean,
                hidden_std=h_std,
                misplaced_mean=m_mean,
                misplaced_std=m_std,
                appeared_mean=a_mean,
                appeared_std=a_std,
            )
        )
    return summaries
