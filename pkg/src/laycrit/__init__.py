"""Spatial critique, GRPO training and evaluation for content-aware graphic layouts."""

from laycrit.geometry import BBox, area, center, intersect_area, iou, rasterized_union_overlap
from laycrit.layout import (
    CanvasSpec,
    DualLevelOutput,
    ElementSpec,
    Layout,
    LayoutElement,
    ParseStatus,
    parse_dual_output,
    serialize_spec,
    validate_layout,
)
from laycrit.critique import (
    PRESETS,
    CompatibilityMatrix,
    QualityWeights,
    RewardBreakdown,
    RewardWeights,
    hybrid_reward,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "area",
    "center",
    "intersect_area",
    "iou",
    "rasterized_union_overlap",
    "CanvasSpec",
    "DualLevelOutput",
    "ElementSpec",
    "Layout",
    "LayoutElement",
    "ParseStatus",
    "parse_dual_output",
    "serialize_spec",
    "validate_layout",
    "PRESETS",
    "CompatibilityMatrix",
    "QualityWeights",
    "RewardBreakdown",
    "RewardWeights",
    "hybrid_reward",
]
