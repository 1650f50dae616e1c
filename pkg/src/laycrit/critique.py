"""Multi-objective spatial critique: format, quality and IoU rewards and their hybrid."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from laycrit.geometry import BBox, area, center, intersect_area, iou
from laycrit.layout import CanvasSpec, DualLevelOutput, Layout, ParseStatus

SALIENCY = "saliency"

FORMAT_SCORES = {
    ParseStatus.MISSING_BLOCK: 0.1,
    ParseStatus.BAD_JSON: 0.2,
    ParseStatus.SCHEMA_MISMATCH: 0.5,
    ParseStatus.VALID: 1.0,
}

# canvas is normalized, so D_max = sqrt(1 + 1)
D_MAX = math.sqrt(2.0)


class IncomparableLayouts(ValueError):
    """Raised when two layouts do not share per-category element counts."""


@dataclass(frozen=True)
class QualityWeights:
    w_icr: float = 0.2
    w_align: float = 0.2
    w_dist: float = 0.2
    w_spacing: float = 0.2
    w_underlay: float = 0.2
    alpha: float = 0.5

    def __post_init__(self):
        ws = self.as_tuple()
        if any(w < 0 for w in ws):
            raise ValueError("quality weights must be non-negative")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"quality weights must sum to 1, got {sum(ws)}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w_icr, self.w_align, self.w_dist, self.w_spacing, self.w_underlay)


@dataclass(frozen=True)
class RewardWeights:
    lambda_f: float
    lambda_q: float
    lambda_u: float

    def __post_init__(self):
        ls = (self.lambda_f, self.lambda_q, self.lambda_u)
        if any(v < 0 for v in ls) or not any(v > 0 for v in ls):
            raise ValueError("reward weights must be non-negative with at least one positive")

    @classmethod
    def parse(cls, text: str) -> "RewardWeights":
        """Accept a preset name or a comma-separated ``f,q,u`` triple."""
        if text in PRESETS:
            return PRESETS[text]
        parts = text.split(",")
        if len(parts) != 3:
            raise ValueError(f"expected a preset ({', '.join(PRESETS)}) or 'f,q,u', got {text!r}")
        return cls(*(float(p) for p in parts))


PRESETS = {
    "format_focused": RewardWeights(0.5, 0.4, 0.1),
    "quality_focused": RewardWeights(0.1, 0.8, 0.1),
    "iou_focused": RewardWeights(0.1, 0.1, 0.8),
    "balanced_hybrid": RewardWeights(0.1, 0.45, 0.45),
}


@dataclass(frozen=True)
class CompatibilityMatrix:
    """Which category pairs may overlap on purpose. Unlisted pairs are incompatible."""

    compatible: frozenset = field(default_factory=lambda: frozenset({frozenset({"underlay", "text"})}))

    def intended_overlap(self, a: str, b: str) -> bool:
        if SALIENCY in (a, b):
            return False
        return frozenset({a, b}) in self.compatible


DEFAULT_COMPAT = CompatibilityMatrix()


@dataclass
class RewardBreakdown:
    r_format: float = 0.0
    s_icr: float = 0.0
    s_align: float = 0.0
    s_dist: float = 0.0
    s_spacing: float = 0.0
    s_underlay: float = 0.0
    r_quality: float = 0.0
    r_iou: Optional[float] = None
    r_total: float = 0.0

    def to_dict(self) -> dict:
        return {
            "format": self.r_format,
            "icr": self.s_icr,
            "align": self.s_align,
            "dist": self.s_dist,
            "spacing": self.s_spacing,
            "underlay": self.s_underlay,
            "quality": self.r_quality,
            "iou": self.r_iou,
            "total": self.r_total,
        }


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def _pvar(vals: Sequence[float]) -> float:
    n = len(vals)
    m = sum(vals) / n
    return sum((v - m) ** 2 for v in vals) / n


def format_reward(out: DualLevelOutput) -> float:
    return FORMAT_SCORES[out.parse_status]


def inverse_collision(
    layout: Layout,
    saliency: Sequence[BBox] = (),
    compat: CompatibilityMatrix = DEFAULT_COMPAT,
) -> float:
    """Mean of ``1 - IoU`` over all incompatible pairs; 1.0 when there are none.

    Saliency boxes act as a pseudo-category that every element except an
    underlay must avoid.
    """
    scores = []
    for a, b in combinations(layout.elements, 2):
        if not compat.intended_overlap(a.category, b.category):
            scores.append(1.0 - iou(a.box, b.box))
    for e in layout.elements:
        if e.category == "underlay":
            continue
        for s in saliency:
            scores.append(1.0 - iou(e.box, s))
    if not scores:
        return 1.0
    return sum(scores) / len(scores)


def alignment_from_centers(centers: Sequence[tuple[float, float]], alpha: float = 0.5) -> float:
    n = len(centers)
    to_canvas = sum(math.hypot(cx - 0.5, cy - 0.5) for cx, cy in centers) / n
    a_ec = 1.0 - to_canvas / D_MAX
    a_ee = _clamp01(1.0 - (_pvar([c[0] for c in centers]) + _pvar([c[1] for c in centers])) / 2)
    return _clamp01(alpha * a_ec + (1 - alpha) * a_ee)


def alignment_score(layout: Layout, alpha: float = 0.5) -> float:
    return alignment_from_centers([center(b) for b in layout.boxes], alpha)


def grid_cell(cx: float, cy: float) -> tuple[int, int]:
    return (min(int(math.floor(3 * cx)), 2), min(int(math.floor(3 * cy)), 2))


def distribution_from_centers(centers: Sequence[tuple[float, float]]) -> float:
    n = len(centers)
    mx = sum(c[0] for c in centers) / n
    my = sum(c[1] for c in centers) / n
    spread = sum((cx - mx) ** 2 + (cy - my) ** 2 for cx, cy in centers) / n / D_MAX**2
    coverage = len({grid_cell(cx, cy) for cx, cy in centers}) / 9
    return _clamp01((spread + coverage) / 2)


def distribution_score(layout: Layout) -> float:
    return distribution_from_centers([center(b) for b in layout.boxes])


def spacing_from_centers(ys: Sequence[float]) -> float:
    """Spacing consistency of vertical centers (any order; sorted here)."""
    if len(ys) < 3:
        return 1.0
    ys = sorted(ys)
    gaps = [b - a for a, b in zip(ys, ys[1:])]
    mean_gap = sum(gaps) / len(gaps)
    if mean_gap == 0:
        return 1.0
    return _clamp01(1.0 - _pvar(gaps) / mean_gap**2)


def spacing_consistency(layout: Layout) -> float:
    # ties in vertical center keep id order; the gap multiset is the same either way
    ordered = sorted(layout.elements, key=lambda e: (e.box.y + e.box.h / 2, e.id))
    return spacing_from_centers([e.box.y + e.box.h / 2 for e in ordered])


def underlay_text_score(layout: Layout) -> float:
    """Mean per-underlay pairing score.

    An underlay scores the contained fraction of its single overlapping text,
    or 0 when no text or several texts overlap it. Layouts without underlays
    score 1.0.
    """
    underlays = layout.of_category("underlay")
    if not underlays:
        return 1.0
    texts = layout.of_category("text")
    total = 0.0
    for u in underlays:
        hits = [t for t in texts if intersect_area(t.box, u.box) > 0]
        if len(hits) == 1:
            t = hits[0]
            total += min(1.0, intersect_area(t.box, u.box) / area(t.box))
    return total / len(underlays)


def iou_reward(layout: Layout, reference: Layout) -> float:
    """Greedy per-category IoU matching, averaged over reference elements."""
    if layout.category_counts() != reference.category_counts():
        raise IncomparableLayouts(
            f"category counts differ: {dict(layout.category_counts())} vs {dict(reference.category_counts())}"
        )
    total = 0.0
    for cat in reference.category_counts():
        preds, refs = layout.of_category(cat), reference.of_category(cat)
        pairs = [(iou(p.box, r.box), p.id, r.id) for p in preds for r in refs]
        pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
        used_p, used_r = set(), set()
        for score, pid, rid in pairs:
            if pid in used_p or rid in used_r:
                continue
            used_p.add(pid)
            used_r.add(rid)
            total += score
    return total / len(reference)


def quality_reward(
    layout: Layout,
    saliency: Sequence[BBox] = (),
    qw: QualityWeights = QualityWeights(),
    compat: CompatibilityMatrix = DEFAULT_COMPAT,
) -> tuple[float, RewardBreakdown]:
    bd = RewardBreakdown(
        s_icr=inverse_collision(layout, saliency, compat),
        s_align=alignment_score(layout, qw.alpha),
        s_dist=distribution_score(layout),
        s_spacing=spacing_consistency(layout),
        s_underlay=underlay_text_score(layout),
    )
    subs = (bd.s_icr, bd.s_align, bd.s_dist, bd.s_spacing, bd.s_underlay)
    bd.r_quality = _clamp01(sum(w * s for w, s in zip(qw.as_tuple(), subs)))
    return bd.r_quality, bd


def effective_weights(rw: RewardWeights, has_reference: bool) -> tuple[float, float, float]:
    if has_reference:
        return rw.lambda_f, rw.lambda_q, rw.lambda_u
    return rw.lambda_f, rw.lambda_q + rw.lambda_u, 0.0


def hybrid_reward(
    out: DualLevelOutput,
    spec: CanvasSpec,
    reference: Optional[Layout] = None,
    rw: RewardWeights = PRESETS["balanced_hybrid"],
    qw: QualityWeights = QualityWeights(),
    compat: CompatibilityMatrix = DEFAULT_COMPAT,
) -> RewardBreakdown:
    """Weighted sum of format, quality and IoU rewards for one model output.

    Outputs that do not parse to a valid layout earn format credit only. With
    no reference layout the IoU weight is moved onto the quality term.
    """
    r_format = format_reward(out)
    if out.parse_status is ParseStatus.VALID and out.layout is not None:
        _, bd = quality_reward(out.layout, spec.saliency, qw, compat)
        if reference is not None:
            bd.r_iou = iou_reward(out.layout, reference)
    else:
        bd = RewardBreakdown(r_iou=0.0 if reference is not None else None)
    bd.r_format = r_format
    lf, lq, lu = effective_weights(rw, reference is not None)
    bd.r_total = lf * r_format + lq * bd.r_quality + lu * (bd.r_iou or 0.0)
    return bd


# --- vectorized scoring over many candidate layouts --------------------------
#
# ``boxes`` has shape (B, N, 4) holding (x, y, w, h) for B layouts that share the
# element list ``categories`` (ordered by id). Used by the grid oracle and the
# trainer, where scoring one layout at a time is too slow.


def _iou_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ow = np.minimum(a[..., 0] + a[..., 2], b[..., 0] + b[..., 2]) - np.maximum(a[..., 0], b[..., 0])
    oh = np.minimum(a[..., 1] + a[..., 3], b[..., 1] + b[..., 3]) - np.maximum(a[..., 1], b[..., 1])
    inter = np.clip(ow, 0, None) * np.clip(oh, 0, None)
    union = a[..., 2] * a[..., 3] + b[..., 2] * b[..., 3] - inter
    return np.where(union > 0, np.minimum(inter / np.where(union > 0, union, 1.0), 1.0), 0.0), inter


def _pvar_np(v: np.ndarray) -> np.ndarray:
    return ((v - v.mean(axis=-1, keepdims=True)) ** 2).mean(axis=-1)


def quality_batch(
    boxes: np.ndarray,
    categories: Sequence[str],
    saliency: Sequence[BBox] = (),
    qw: QualityWeights = QualityWeights(),
    compat: CompatibilityMatrix = DEFAULT_COMPAT,
) -> dict[str, np.ndarray]:
    """Quality sub-scores for a batch of layouts; matches :func:`quality_reward`."""
    boxes = np.asarray(boxes, dtype=float)
    B, N, _ = boxes.shape
    cats = list(categories)

    pair_iou, pair_inter = _iou_np(boxes[:, :, None, :], boxes[:, None, :, :])  # (B, N, N)
    iu, ju = np.triu_indices(N, k=1)
    keep = np.array([not compat.intended_overlap(cats[i], cats[j]) for i, j in zip(iu, ju)], dtype=bool)
    terms = [1.0 - pair_iou[:, iu[keep], ju[keep]]]
    sal = np.array([s.as_tuple() for s in saliency], dtype=float).reshape(-1, 4)
    fg = [i for i in range(N) if cats[i] != "underlay"]
    if len(sal) and fg:
        sal_iou = _iou_np(boxes[:, fg, None, :], sal[None, None, :, :])[0]  # (B, F, S)
        terms.append(1.0 - sal_iou.reshape(B, -1))
    terms = np.concatenate(terms, axis=1)
    icr = terms.mean(axis=1) if terms.shape[1] else np.ones(B)

    cx = boxes[..., 0] + boxes[..., 2] / 2
    cy = boxes[..., 1] + boxes[..., 3] / 2
    a_ec = 1.0 - np.hypot(cx - 0.5, cy - 0.5).mean(axis=1) / D_MAX
    a_ee = np.clip(1.0 - (_pvar_np(cx) + _pvar_np(cy)) / 2, 0, 1)
    align = np.clip(qw.alpha * a_ec + (1 - qw.alpha) * a_ee, 0, 1)

    spread = (_pvar_np(cx) + _pvar_np(cy)) / D_MAX**2
    cell = np.minimum(np.floor(3 * cx), 2) * 3 + np.minimum(np.floor(3 * cy), 2)
    occupied = np.zeros((B, 9), dtype=bool)
    np.put_along_axis(occupied, cell.astype(int), True, axis=1)
    dist = np.clip((spread + occupied.sum(axis=1) / 9) / 2, 0, 1)

    if N < 3:
        spacing = np.ones(B)
    else:
        ys = np.sort(cy, axis=1, kind="stable")
        gaps = np.diff(ys, axis=1)
        mean_gap = gaps.mean(axis=1)
        safe = np.where(mean_gap == 0, 1.0, mean_gap)
        spacing = np.where(mean_gap == 0, 1.0, np.clip(1.0 - _pvar_np(gaps) / safe**2, 0, 1))

    u_idx = [i for i, c in enumerate(cats) if c == "underlay"]
    t_idx = [i for i, c in enumerate(cats) if c == "text"]
    if not u_idx:
        underlay = np.ones(B)
    else:
        per_u = []
        for u in u_idx:
            if not t_idx:
                per_u.append(np.zeros(B))
                continue
            inter = pair_inter[:, t_idx, u]
            hits = inter > 0
            t_area = boxes[:, t_idx, 2] * boxes[:, t_idx, 3]
            frac = np.minimum(1.0, (inter * hits).sum(axis=1) / (t_area * hits).sum(axis=1).clip(1e-300))
            per_u.append(np.where(hits.sum(axis=1) == 1, frac, 0.0))
        underlay = np.mean(per_u, axis=0)

    subs = np.stack([icr, align, dist, spacing, underlay])
    quality = np.clip(np.tensordot(np.array(qw.as_tuple()), subs, axes=1), 0, 1)
    return {
        "icr": icr,
        "align": align,
        "dist": dist,
        "spacing": spacing,
        "underlay": underlay,
        "quality": quality,
    }


def iou_reward_batch(boxes: np.ndarray, categories: Sequence[str], reference: Layout) -> np.ndarray:
    """Greedy matching IoU for a batch; matches :func:`iou_reward`."""
    boxes = np.asarray(boxes, dtype=float)
    cats = list(categories)
    if Counter(cats) != reference.category_counts():
        raise IncomparableLayouts("category counts differ from the reference")
    B = boxes.shape[0]
    total = np.zeros(B)
    for cat in reference.category_counts():
        p_idx = [i for i, c in enumerate(cats) if c == cat]
        refs = np.array([r.box.as_tuple() for r in reference.of_category(cat)])
        k = len(p_idx)
        m = _iou_np(boxes[:, p_idx][:, :, None, :], refs[None, None, :, :])[0]  # (B, k, k)
        m = m.copy()
        rows = np.arange(B)
        for _ in range(k):
            # flat argmax takes the first maximum: smaller predicted id, then smaller reference id
            flat = m.reshape(B, -1).argmax(axis=1)
            pi, ri = np.divmod(flat, k)
            total += m[rows, pi, ri]
            m[rows, pi, :] = -1.0
            m[rows, :, ri] = -1.0
    return total / len(reference)


def hybrid_reward_batch(
    boxes: np.ndarray,
    spec: CanvasSpec,
    reference: Optional[Layout] = None,
    rw: RewardWeights = PRESETS["balanced_hybrid"],
    qw: QualityWeights = QualityWeights(),
    compat: CompatibilityMatrix = DEFAULT_COMPAT,
) -> dict[str, np.ndarray]:
    """:func:`hybrid_reward` for a batch of valid layouts of ``spec`` (format = 1)."""
    cats = spec.categories
    out = quality_batch(boxes, cats, spec.saliency, qw, compat)
    B = out["quality"].shape[0]
    out["format"] = np.ones(B)
    lf, lq, lu = effective_weights(rw, reference is not None)
    total = lf * out["format"] + lq * out["quality"]
    if reference is not None:
        out["iou"] = iou_reward_batch(boxes, cats, reference)
        total = total + lu * out["iou"]
    out["total"] = total
    return out
