"""Deterministic SVG rendering of layouts for inspection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from laycrit.geometry import BBox
from laycrit.layout import Layout

DEFAULT_FILLS = {
    "text": ("#1f77b4", 0.55),
    "logo": ("#d62728", 0.55),
    "underlay": ("#2ca02c", 0.35),
    "embellishment": ("#9467bd", 0.55),
}


@dataclass(frozen=True)
class RenderStyle:
    width: int = 400
    height: int = 600
    fills: Mapping[str, tuple[str, float]] = field(default_factory=lambda: dict(DEFAULT_FILLS))
    stroke_width: float = 1.0
    saliency_color: str = "#ff7f0e"
    hatch_spacing: int = 8
    background: str = "#ffffff"
    font_size: int = 10

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("output dimensions must be positive")


def _fmt(v: float) -> str:
    # fixed precision keeps output byte-stable across platforms
    return f"{v:.2f}"


def _rect_attrs(b: BBox, style: RenderStyle) -> str:
    return (
        f'x="{_fmt(b.x * style.width)}" y="{_fmt(b.y * style.height)}" '
        f'width="{_fmt(b.w * style.width)}" height="{_fmt(b.h * style.height)}"'
    )


def render_svg(layout: Layout, saliency: Sequence[BBox] = (), style: RenderStyle = RenderStyle()) -> str:
    """One labeled rect per element and one hatched rect per saliency box.

    Underlays are drawn first so the content they back stays visible.
    """
    W, H = style.width, style.height
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        "<defs>",
        f'<pattern id="hatch" patternUnits="userSpaceOnUse" width="{style.hatch_spacing}" '
        f'height="{style.hatch_spacing}" patternTransform="rotate(45)">',
        f'<line x1="0" y1="0" x2="0" y2="{style.hatch_spacing}" stroke="{style.saliency_color}" stroke-width="2"/>',
        "</pattern>",
        "</defs>",
        f'<path d="M0 0H{W}V{H}H0Z" fill="{style.background}"/>',
    ]
    for s in saliency:
        out.append(
            f'<rect class="saliency" {_rect_attrs(s, style)} fill="url(#hatch)" '
            f'stroke="{style.saliency_color}" stroke-width="{style.stroke_width}"/>'
        )
    ordered = sorted(layout.elements, key=lambda e: (e.category != "underlay", e.id))
    for e in ordered:
        color, opacity = style.fills.get(e.category, ("#7f7f7f", 0.5))
        out.append(
            f'<g class="element {escape(e.category)}">'
            f'<rect {_rect_attrs(e.box, style)} fill="{color}" fill-opacity="{opacity}" '
            f'stroke="{color}" stroke-width="{style.stroke_width}"/>'
            f'<text x="{_fmt(e.box.x * W + 2)}" y="{_fmt(e.box.y * H + style.font_size)}" '
            f'font-size="{style.font_size}" font-family="monospace">{e.id}:{escape(e.category)}</text>'
            "</g>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
