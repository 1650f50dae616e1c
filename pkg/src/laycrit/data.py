"""Annotation ingestion (canonical JSONL) and synthetic canvas generation.

All randomness goes through ``numpy.random.Generator(PCG64(seed))``; PCG64 is
portable, so generated suites are identical on every platform.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from laycrit.geometry import BBox, intersect_area
from laycrit.layout import CATEGORIES, CanvasSpec, ElementSpec, Layout, LayoutElement

log = logging.getLogger(__name__)

SPLITS = ("train", "test")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatedElement:
    category: str
    bbox_px: tuple[float, float, float, float]


@dataclass(frozen=True)
class AnnotationRecord:
    id: str
    width: int
    height: int
    elements: tuple[AnnotatedElement, ...]
    saliency: tuple[tuple[float, float, float, float], ...] = ()
    split: str = "train"

    def to_obj(self) -> dict:
        return {
            "id": self.id,
            "canvas": {"width": self.width, "height": self.height},
            "split": self.split,
            "elements": [{"category": e.category, "bbox_px": list(e.bbox_px)} for e in self.elements],
            "saliency": [{"bbox_px": list(s)} for s in self.saliency],
        }


def _check_px_box(box, width: int, height: int, what: str, tol: float = 1e-6) -> tuple[float, float, float, float]:
    if not isinstance(box, (list, tuple)) or len(box) != 4:
        raise AnnotationError(f"{what}: bbox_px must be [x, y, w, h]")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in box):
        raise AnnotationError(f"{what}: bbox_px values must be numbers")
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        raise AnnotationError(f"{what}: non-positive box size")
    if x < -tol or y < -tol or x + w > width * (1 + tol) or y + h > height * (1 + tol):
        raise AnnotationError(f"{what}: box exceeds canvas")
    return (x, y, w, h)


def record_from_obj(obj: dict) -> AnnotationRecord:
    try:
        rid = str(obj["id"])
        width, height = obj["canvas"]["width"], obj["canvas"]["height"]
        raw_elements, raw_saliency = obj["elements"], obj["saliency"]
    except (KeyError, TypeError) as exc:
        raise AnnotationError(f"missing field {exc}") from None
    if not (isinstance(width, int) and isinstance(height, int)) or width <= 0 or height <= 0:
        raise AnnotationError("canvas width/height must be positive integers")
    split = obj.get("split", "train")
    if split not in SPLITS:
        raise AnnotationError(f"unknown split {split!r}")
    if not raw_elements:
        raise AnnotationError("record has no elements")
    elements = []
    for k, e in enumerate(raw_elements):
        if not isinstance(e, dict) or e.get("category") not in CATEGORIES:
            raise AnnotationError(f"element {k}: missing or unknown category")
        elements.append(AnnotatedElement(e["category"], _check_px_box(e.get("bbox_px"), width, height, f"element {k}")))
    saliency = []
    for k, s in enumerate(raw_saliency):
        if not isinstance(s, dict):
            raise AnnotationError(f"saliency {k}: expected an object")
        saliency.append(_check_px_box(s.get("bbox_px"), width, height, f"saliency {k}"))
    return AnnotationRecord(rid, width, height, tuple(elements), tuple(saliency), split)


def load_annotations(path, strict: bool = False) -> list[AnnotationRecord]:
    """Read a JSONL annotation file.

    Malformed lines are logged and skipped, or raise when ``strict`` is set.
    Raises :class:`AnnotationError` if no valid record remains.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(record_from_obj(json.loads(line)))
            except (json.JSONDecodeError, AnnotationError) as exc:
                if strict:
                    raise AnnotationError(f"{path}:{lineno}: {exc}") from None
                log.warning("%s:%d: skipping malformed record (%s)", path, lineno, exc)
    if not records:
        raise AnnotationError(f"{path}: no valid records")
    return records


def write_annotations(records: Iterable[AnnotationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_obj()) + "\n")


def _normalize(box, width: int, height: int) -> BBox:
    x, y, w, h = box
    return BBox(x / width, y / height, w / width, h / height)


def to_canvas_spec(rec: AnnotationRecord) -> tuple[CanvasSpec, Layout]:
    """Masked canvas spec plus the ground-truth layout, in normalized units."""
    boxes = [_normalize(e.bbox_px, rec.width, rec.height) for e in rec.elements]
    spec = CanvasSpec(
        rec.width,
        rec.height,
        tuple(ElementSpec(i, e.category) for i, e in enumerate(rec.elements)),
        tuple(_normalize(s, rec.width, rec.height) for s in rec.saliency),
    )
    reference = Layout(tuple(LayoutElement(i, e.category, b) for i, (e, b) in enumerate(zip(rec.elements, boxes))))
    return spec, reference


def from_canvas_spec(spec: CanvasSpec, layout: Layout, rid: str = "0", split: str = "train") -> AnnotationRecord:
    W, H = spec.canvas_width, spec.canvas_height
    elements = tuple(
        AnnotatedElement(e.category, (e.box.x * W, e.box.y * H, e.box.w * W, e.box.h * H)) for e in layout.elements
    )
    saliency = tuple((s.x * W, s.y * H, s.w * W, s.h * H) for s in spec.saliency)
    return AnnotationRecord(rid, W, H, elements, saliency, split)


# --- synthetic generation ------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    count: int = 100
    min_elements: int = 2
    max_elements: int = 8
    underlay_prob: float = 0.3
    min_saliency: int = 0
    max_saliency: int = 2
    mode: str = "designed"
    seed: int = 0
    canvas_sizes: tuple[tuple[int, int], ...] = field(default=((513, 750), (600, 800), (750, 513)))

    def __post_init__(self):
        if self.mode not in ("random", "designed"):
            raise ValueError(f"mode must be 'random' or 'designed', got {self.mode!r}")
        if not 1 <= self.min_elements <= self.max_elements:
            raise ValueError("element count range must satisfy 1 <= min <= max")
        if not 0 <= self.min_saliency <= self.max_saliency:
            raise ValueError("saliency count range must satisfy 0 <= min <= max")
        if not 0.0 <= self.underlay_prob <= 1.0:
            raise ValueError("underlay_prob must lie in [0, 1]")
        if self.count < 1:
            raise ValueError("count must be positive")


@dataclass(frozen=True)
class SyntheticSample:
    spec: CanvasSpec
    layout: Layout


def _categories(rng: np.random.Generator, cfg: SynthConfig) -> list[str]:
    n = int(rng.integers(cfg.min_elements, cfg.max_elements + 1))
    # content rows first, then one underlay per selected text
    cats = []
    while len(cats) < n:
        room = n - len(cats)
        c = str(rng.choice(["text", "text", "text", "logo", "embellishment"]))
        if c == "text" and room >= 2 and rng.random() < cfg.underlay_prob:
            cats += ["text", "underlay"]
        else:
            cats.append(c)
    return cats


def _designed(rng: np.random.Generator, cats: list[str], n_sal: int):
    """Column of evenly spaced rows on one side, saliency confined to the other."""
    left_column = bool(rng.random() < 0.5)
    col_x0, col_x1 = (0.05, 0.5) if left_column else (0.5, 0.95)
    sal_x0, sal_x1 = (0.55, 0.95) if left_column else (0.05, 0.45)

    rows = [i for i, c in enumerate(cats) if c != "underlay"]
    k = len(rows)
    top, bottom = 0.08 + 0.1 * rng.random(), 0.92 - 0.1 * rng.random()
    pitch = (bottom - top) / k
    row_h = pitch * (0.45 + 0.2 * rng.random())
    pad = min(0.2 * (pitch - row_h), 0.01)
    col_cx = (col_x0 + col_x1) / 2

    boxes: list[Optional[BBox]] = [None] * len(cats)
    for r, i in enumerate(rows):
        w = (col_x1 - col_x0 - 2 * pad) * (0.5 + 0.45 * rng.random())
        y = top + r * pitch + (pitch - row_h) / 2
        boxes[i] = BBox(col_cx - w / 2, y, w, row_h)
    # each underlay backs the text emitted just before it
    for i, c in enumerate(cats):
        if c == "underlay":
            t = boxes[i - 1]
            boxes[i] = BBox(t.x - pad, t.y - pad, t.w + 2 * pad, t.h + 2 * pad)

    saliency = []
    for _ in range(n_sal):
        w = (sal_x1 - sal_x0) * (0.4 + 0.6 * rng.random())
        h = 0.2 + 0.5 * rng.random()
        x = sal_x0 + (sal_x1 - sal_x0 - w) * rng.random()
        y = (1 - h) * rng.random()
        saliency.append(BBox(x, y, w, h))
    return boxes, saliency


def _random_box(rng: np.random.Generator) -> BBox:
    w, h = rng.uniform(0.05, 0.5, size=2)
    x, y = rng.uniform(0, 1 - w), rng.uniform(0, 1 - h)
    return BBox(float(x), float(y), float(w), float(h))


def generate_synthetic(cfg: SynthConfig) -> list[SyntheticSample]:
    """Deterministic synthetic canvases with a layout for each.

    ``designed`` layouts are near-ideal: every underlay wraps exactly one text,
    content rows are evenly spaced and disjoint, and saliency sits away from
    the column. ``random`` layouts place every box uniformly at random.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    out = []
    for _ in range(cfg.count):
        W, H = cfg.canvas_sizes[int(rng.integers(len(cfg.canvas_sizes)))]
        cats = _categories(rng, cfg)
        n_sal = int(rng.integers(cfg.min_saliency, cfg.max_saliency + 1))
        if cfg.mode == "designed":
            boxes, saliency = _designed(rng, cats, n_sal)
        else:
            boxes = [_random_box(rng) for _ in cats]
            saliency = [_random_box(rng) for _ in range(n_sal)]
        spec = CanvasSpec(W, H, tuple(ElementSpec(i, c) for i, c in enumerate(cats)), tuple(saliency))
        layout = Layout(tuple(LayoutElement(i, c, b) for i, (c, b) in enumerate(zip(cats, boxes))))
        out.append(SyntheticSample(spec, layout))
    return out


def samples_to_records(samples: Sequence[SyntheticSample], prefix: str = "synth", split: str = "train"):
    return [from_canvas_spec(s.spec, s.layout, f"{prefix}-{i:05d}", split) for i, s in enumerate(samples)]


BUNDLED_SUITE_CONFIG = SynthConfig(count=10, mode="designed", seed=2024)


def bundled_suite() -> list[tuple[CanvasSpec, Layout]]:
    """The 10-canvas designed suite shipped with the package."""
    path = resources.files("laycrit") / "data" / "suite10.jsonl"
    with resources.as_file(path) as p:
        return [to_canvas_spec(r) for r in load_annotations(Path(p), strict=True)]


def overlaps_saliency(layout: Layout, saliency: Sequence[BBox]) -> bool:
    return any(intersect_area(e.box, s) > 0 for e in layout.elements for s in saliency)
