"""Canvas environments, layouts and the ``<design>``/``<layout>`` output format."""

from __future__ import annotations

import enum
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from laycrit.geometry import BBox

MASK_TOKEN = "[MASK]"


class ElementCategory(str, enum.Enum):
    TEXT = "text"
    LOGO = "logo"
    UNDERLAY = "underlay"
    EMBELLISHMENT = "embellishment"


CATEGORIES = tuple(c.value for c in ElementCategory)


class ParseStatus(str, enum.Enum):
    MISSING_BLOCK = "MISSING_BLOCK"
    BAD_JSON = "BAD_JSON"
    SCHEMA_MISMATCH = "SCHEMA_MISMATCH"
    VALID = "VALID"


@dataclass(frozen=True)
class ElementSpec:
    id: int
    category: str
    geometry: Optional[BBox] = None  # None means masked

    @property
    def masked(self) -> bool:
        return self.geometry is None


@dataclass(frozen=True)
class CanvasSpec:
    canvas_width: int
    canvas_height: int
    elements: tuple[ElementSpec, ...]
    saliency: tuple[BBox, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "saliency", tuple(self.saliency))
        if self.canvas_width <= 0 or self.canvas_height <= 0:
            raise ValueError("canvas dimensions must be positive")
        if not self.elements:
            raise ValueError("a canvas needs at least one element")
        ids = [e.id for e in self.elements]
        if sorted(ids) != list(range(len(ids))):
            raise ValueError(f"element ids must be dense 0..N-1, got {ids}")
        for e in self.elements:
            if e.category not in CATEGORIES:
                raise ValueError(f"unknown category {e.category!r}")
        for s in self.saliency:
            if not s.within_canvas():
                raise ValueError(f"saliency box {s} exceeds the canvas")

    @property
    def categories(self) -> list[str]:
        return [e.category for e in sorted(self.elements, key=lambda e: e.id)]

    def category_counts(self) -> Counter:
        return Counter(e.category for e in self.elements)

    def masked(self) -> "CanvasSpec":
        elems = tuple(ElementSpec(e.id, e.category) for e in self.elements)
        return CanvasSpec(self.canvas_width, self.canvas_height, elems, self.saliency)


@dataclass(frozen=True)
class LayoutElement:
    id: int
    category: str
    box: BBox


@dataclass(frozen=True)
class Layout:
    elements: tuple[LayoutElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("a layout needs at least one element")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def boxes(self) -> list[BBox]:
        return [e.box for e in self.elements]

    def category_counts(self) -> Counter:
        return Counter(e.category for e in self.elements)

    def of_category(self, category: str) -> list[LayoutElement]:
        return [e for e in self.elements if e.category == category]

    @classmethod
    def from_boxes(cls, items: Sequence[tuple[str, BBox]]) -> "Layout":
        """Build a layout from ``(category, box)`` pairs, numbering ids in order."""
        return cls(tuple(LayoutElement(i, c, b) for i, (c, b) in enumerate(items)))

    def to_json_obj(self) -> dict:
        return {"elements": [{"category": e.category, **e.box.to_dict()} for e in self.elements]}


@dataclass(frozen=True)
class DualLevelOutput:
    design_trace: str
    layout: Optional[Layout]
    parse_status: ParseStatus
    detail: str = field(default="", compare=False)


# --- canonical environment JSON -------------------------------------------

def spec_to_obj(spec: CanvasSpec) -> dict:
    elements = []
    for e in sorted(spec.elements, key=lambda e: e.id):
        geom: Union[str, dict] = MASK_TOKEN if e.masked else e.geometry.to_dict()
        elements.append({"id": e.id, "category": e.category, "geometry": geom})
    return {
        "canvas": {"width": spec.canvas_width, "height": spec.canvas_height},
        "elements": elements,
        "saliency": [s.to_dict() for s in spec.saliency],
    }


def serialize_spec(spec: CanvasSpec, indent: Optional[int] = None) -> str:
    """Render the environment document; key order is fixed so output is byte-stable."""
    return json.dumps(spec_to_obj(spec), indent=indent)


def spec_from_obj(obj: dict) -> CanvasSpec:
    canvas = obj["canvas"]
    elements = []
    for e in obj["elements"]:
        geom = e["geometry"]
        box = None if geom == MASK_TOKEN else BBox.from_dict(geom)
        elements.append(ElementSpec(int(e["id"]), e["category"], box))
    saliency = [BBox.from_dict(s) for s in obj["saliency"]]
    return CanvasSpec(int(canvas["width"]), int(canvas["height"]), tuple(elements), tuple(saliency))


def parse_spec(text: str) -> CanvasSpec:
    return spec_from_obj(json.loads(text))


# --- validation ---------------------------------------------------------------

def validate_layout(layout: Layout, spec: CanvasSpec) -> tuple[bool, list[str]]:
    """Check per-category counts against ``spec`` and every box against the canvas."""
    violations = []
    want, got = spec.category_counts(), layout.category_counts()
    for cat in CATEGORIES:
        if want.get(cat, 0) != got.get(cat, 0):
            violations.append(f"expected {want.get(cat, 0)} {cat} element(s), found {got.get(cat, 0)}")
    for e in layout.elements:
        if not e.box.within_canvas():
            violations.append(f"element {e.id} exceeds canvas")
    return not violations, violations


# --- dual-level output parsing ----------------------------------------------

_DESIGN_RE = re.compile(r"<design>(.*?)</design>", re.DOTALL)
_LAYOUT_RE = re.compile(r"<layout>(.*?)</layout>", re.DOTALL)


def _layout_from_json(obj, spec: CanvasSpec) -> tuple[Optional[Layout], str]:
    if not isinstance(obj, dict) or not isinstance(obj.get("elements"), list):
        return None, "layout JSON must be an object with an 'elements' list"
    items = []
    for k, raw in enumerate(obj["elements"]):
        if not isinstance(raw, dict) or raw.get("category") not in CATEGORIES:
            return None, f"entry {k}: missing or unknown category"
        try:
            vals = [raw[key] for key in ("x", "y", "w", "h")]
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
                raise TypeError
            box = BBox(*map(float, vals))
        except (KeyError, TypeError, ValueError):
            return None, f"entry {k}: geometry must be four numbers with positive w, h"
        if not box.within_canvas():
            return None, f"entry {k}: box exceeds canvas"
        items.append((raw["category"], box))

    got = Counter(c for c, _ in items)
    if got != spec.category_counts():
        return None, f"category counts {dict(got)} do not match {dict(spec.category_counts())}"

    # k-th entry of a category takes the id of the k-th spec element of that category
    queues: dict[str, list[int]] = {}
    for e in sorted(spec.elements, key=lambda e: e.id):
        queues.setdefault(e.category, []).append(e.id)
    elements = []
    for cat, box in items:
        elements.append(LayoutElement(queues[cat].pop(0), cat, box))
    elements.sort(key=lambda e: e.id)
    return Layout(tuple(elements)), ""


def parse_dual_output(raw: str, spec: CanvasSpec) -> DualLevelOutput:
    """Classify model text into one of the four parse levels. Never raises."""
    if not isinstance(raw, str):
        raw = ""
    design = _DESIGN_RE.search(raw)
    layout_block = _LAYOUT_RE.search(raw)
    if design is None or layout_block is None:
        trace = design.group(1).strip() if design else ""
        return DualLevelOutput(trace, None, ParseStatus.MISSING_BLOCK, "design or layout block missing")
    trace = design.group(1).strip()
    try:
        obj = json.loads(layout_block.group(1))
    except (json.JSONDecodeError, RecursionError) as exc:
        return DualLevelOutput(trace, None, ParseStatus.BAD_JSON, str(exc))
    layout, why = _layout_from_json(obj, spec)
    if layout is None:
        return DualLevelOutput(trace, None, ParseStatus.SCHEMA_MISMATCH, why)
    return DualLevelOutput(trace, layout, ParseStatus.VALID)


def emit_dual_output(layout: Layout, design_trace: str = "") -> str:
    """Inverse of :func:`parse_dual_output` for well-formed layouts."""
    return f"<design>{design_trace}</design>\n<layout>{json.dumps(layout.to_json_obj())}</layout>"


def as_valid_output(layout: Layout) -> DualLevelOutput:
    return DualLevelOutput("", layout, ParseStatus.VALID)
