"""Axis-aligned bounding boxes in normalized canvas coordinates.

Every box is stored as ``(x, y, w, h)`` with the top-left corner at
``(x, y)`` and the unit canvas spanning ``[0, 1] x [0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BOX_EPS = 1e-6
DEFAULT_RESOLUTION = 512


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates: {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive width and height, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def within_canvas(self, eps: float = BOX_EPS) -> bool:
        """True when the box lies inside the unit canvas (up to ``eps`` overhang)."""
        return (
            -eps <= self.x <= 1 + eps
            and -eps <= self.y <= 1 + eps
            and self.x2 <= 1 + eps
            and self.y2 <= 1 + eps
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d) -> "BBox":
        return cls(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]))


def area(b: BBox) -> float:
    return b.w * b.h


def intersect_area(a: BBox, b: BBox) -> float:
    # hot path of every reward: plain comparisons beat the x2/y2 properties and min/max calls
    ax, ay, bx, by = a.x, a.y, b.x, b.y
    ax2, ay2, bx2, by2 = ax + a.w, ay + a.h, bx + b.w, by + b.h
    ow = (ax2 if ax2 < bx2 else bx2) - (ax if ax > bx else bx)
    if ow <= 0:
        return 0.0
    oh = (ay2 if ay2 < by2 else by2) - (ay if ay > by else by)
    if oh <= 0:
        return 0.0
    return ow * oh


def iou(a: BBox, b: BBox) -> float:
    inter = intersect_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    # the corner-difference intersection can exceed the area product by an ulp
    return min(1.0, inter / union)


def center(b: BBox) -> tuple[float, float]:
    return (b.x + b.w / 2, b.y + b.h / 2)


def _union_mask(boxes: Sequence[BBox], resolution: int) -> np.ndarray:
    # a pixel belongs to a box when its center does
    coords = (np.arange(resolution) + 0.5) / resolution
    mask = np.zeros((resolution, resolution), dtype=bool)
    for b in boxes:
        cols = (coords >= b.x) & (coords < b.x2)
        rows = (coords >= b.y) & (coords < b.y2)
        mask |= rows[:, None] & cols[None, :]
    return mask


def rasterized_union_overlap(
    boxes_a: Sequence[BBox],
    boxes_b: Sequence[BBox],
    resolution: int = DEFAULT_RESOLUTION,
) -> float:
    """Fraction of the union of ``boxes_b`` that is covered by the union of ``boxes_a``.

    Areas are approximated on a ``resolution x resolution`` pixel grid over the
    unit canvas. Returns 0 when ``boxes_b`` is empty (or rasterizes to nothing).
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    if not boxes_b:
        return 0.0
    mask_b = _union_mask(boxes_b, resolution)
    denom = mask_b.sum()
    if denom == 0 or not boxes_a:
        return 0.0
    mask_a = _union_mask(boxes_a, resolution)
    return float((mask_a & mask_b).sum() / denom)
