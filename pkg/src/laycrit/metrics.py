"""Benchmark metrics: overlay (Ove), underlay effectiveness (Und) and occlusion (Occ)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from laycrit.geometry import DEFAULT_RESOLUTION, BBox, area, intersect_area, iou, rasterized_union_overlap
from laycrit.layout import Layout

CONTAIN_TOL = 1e-9


def overlay(layout: Layout) -> float:
    """Mean pairwise IoU among non-underlay elements (0 with fewer than two)."""
    boxes = [e.box for e in layout.elements if e.category != "underlay"]
    pairs = list(combinations(boxes, 2))
    if not pairs:
        return 0.0
    return sum(iou(a, b) for a, b in pairs) / len(pairs)


def underlay_effectiveness_detail(layout: Layout) -> tuple[float, bool]:
    """Return ``(score, vacuous)``; vacuous is True when the layout has no underlay."""
    underlays = layout.of_category("underlay")
    if not underlays:
        return 1.0, True
    content = [e.box for e in layout.elements if e.category != "underlay"]
    effective = 0
    for u in underlays:
        if any(abs(intersect_area(c, u.box) - area(c)) <= CONTAIN_TOL for c in content):
            effective += 1
    return effective / len(underlays), False


def underlay_effectiveness(layout: Layout) -> float:
    return underlay_effectiveness_detail(layout)[0]


def occlusion(layout: Layout, saliency: Sequence[BBox], resolution: int = DEFAULT_RESOLUTION) -> float:
    if not saliency:
        return 0.0
    return rasterized_union_overlap(layout.boxes, saliency, resolution)


@dataclass
class LayoutMetrics:
    layout_id: str
    ove: float
    und: float
    occ: float
    und_vacuous: bool = False


@dataclass
class MetricsReport:
    ove: float
    und: float
    occ: float
    n_layouts: int
    und_vacuous: bool = False
    per_layout: Optional[list[LayoutMetrics]] = field(default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layout_id", "ove", "und", "occ"])
        for m in self.per_layout or []:
            writer.writerow([m.layout_id, f"{m.ove:.6f}", f"{m.und:.6f}", f"{m.occ:.6f}"])
        return buf.getvalue()

    def aggregate_dict(self) -> dict:
        return {
            "ove": self.ove,
            "und": self.und,
            "occ": self.occ,
            "n_layouts": self.n_layouts,
            "und_vacuous": self.und_vacuous,
        }

    def to_json(self) -> str:
        return json.dumps(self.aggregate_dict(), indent=2)


def evaluate_batch(
    layouts: Sequence[tuple[Layout, Sequence[BBox]]],
    ids: Optional[Sequence[str]] = None,
    resolution: int = DEFAULT_RESOLUTION,
    keep_per_layout: bool = True,
) -> MetricsReport:
    """Score every ``(layout, saliency)`` pair and average.

    Und is averaged only over layouts that contain an underlay; if none do,
    the aggregate is 1.0 and flagged vacuous.
    """
    if not layouts:
        raise ValueError("cannot evaluate an empty batch")
    if ids is None:
        ids = [str(i) for i in range(len(layouts))]
    rows = []
    for lid, (layout, saliency) in zip(ids, layouts):
        und, vacuous = underlay_effectiveness_detail(layout)
        rows.append(LayoutMetrics(lid, overlay(layout), und, occlusion(layout, saliency, resolution), vacuous))
    n = len(rows)
    real_und = [r.und for r in rows if not r.und_vacuous]
    return MetricsReport(
        ove=sum(r.ove for r in rows) / n,
        und=sum(real_und) / len(real_und) if real_und else 1.0,
        occ=sum(r.occ for r in rows) / n,
        n_layouts=n,
        und_vacuous=not real_und,
        per_layout=rows if keep_per_layout else None,
    )
