import xml.etree.ElementTree as ET

from laycrit.geometry import BBox
from laycrit.layout import Layout
from laycrit.render import RenderStyle, render_svg

NS = "{http://www.w3.org/2000/svg}"


def _three():
    return Layout.from_boxes(
        [("text", BBox(0.1, 0.1, 0.3, 0.1)), ("underlay", BBox(0.05, 0.05, 0.4, 0.2)), ("logo", BBox(0.7, 0.8, 0.1, 0.1))]
    )


def test_rect_count():
    root = ET.fromstring(render_svg(_three(), [BBox(0.5, 0.1, 0.3, 0.3)]))
    assert len(root.findall(f".//{NS}rect")) == 4


def test_deterministic():
    sal = [BBox(0.5, 0.1, 0.3, 0.3)]
    assert render_svg(_three(), sal) == render_svg(_three(), sal)


def test_no_saliency_no_hatch():
    root = ET.fromstring(render_svg(_three()))
    assert not [r for r in root.iter(f"{NS}rect") if r.get("fill") == "url(#hatch)"]


def test_underlay_drawn_first_and_scaled():
    root = ET.fromstring(render_svg(_three(), style=RenderStyle(width=200, height=100)))
    groups = root.findall(f"{NS}g")
    assert groups[0].get("class") == "element underlay"
    rect = groups[0].find(f"{NS}rect")
    assert (rect.get("x"), rect.get("width"), rect.get("height")) == ("10.00", "80.00", "20.00")
