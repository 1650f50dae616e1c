import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from laycrit.geometry import BBox
from laycrit.layout import CATEGORIES, CanvasSpec, ElementSpec, Layout

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"


@pytest.fixture(scope="session")
def expected():
    return json.loads((HERE / "expected_values.json").read_text())


def make_spec(categories, saliency=(), width=513, height=750):
    elems = tuple(ElementSpec(i, c) for i, c in enumerate(categories))
    return CanvasSpec(width, height, elems, tuple(saliency))


def random_box(rng):
    w, h = rng.uniform(0.02, 0.6, size=2)
    return BBox(float(rng.uniform(0, 1 - w)), float(rng.uniform(0, 1 - h)), float(w), float(h))


def random_layout(rng, n=None, n_sal=None):
    n = int(rng.integers(2, 9)) if n is None else n
    n_sal = int(rng.integers(0, 3)) if n_sal is None else n_sal
    cats = [CATEGORIES[k] for k in rng.integers(0, len(CATEGORIES), size=n)]
    layout = Layout.from_boxes([(c, random_box(rng)) for c in cats])
    return layout, make_spec(cats, [random_box(rng) for _ in range(n_sal)])


@st.composite
def boxes(draw, min_side=1e-3):
    w = draw(st.floats(min_side, 1.0))
    h = draw(st.floats(min_side, 1.0))
    x = draw(st.floats(0.0, 1.0 - w))
    y = draw(st.floats(0.0, 1.0 - h))
    return BBox(x, y, w, h)


@st.composite
def specs(draw, max_elements=8):
    n = draw(st.integers(1, max_elements))
    elems = []
    for i in range(n):
        cat = draw(st.sampled_from(CATEGORIES))
        geom = draw(st.one_of(st.none(), boxes()))
        elems.append(ElementSpec(i, cat, geom))
    sal = draw(st.lists(boxes(), max_size=2))
    w = draw(st.integers(1, 4000))
    h = draw(st.integers(1, 4000))
    return CanvasSpec(w, h, tuple(elems), tuple(sal))


@st.composite
def layouts(draw, min_elements=1, max_elements=8):
    n = draw(st.integers(min_elements, max_elements))
    items = [(draw(st.sampled_from(CATEGORIES)), draw(boxes())) for _ in range(n)]
    return Layout.from_boxes(items)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def _lay(*items):
    return Layout.from_boxes([(c, BBox(*b)) for c, b in items])


# Paired good/bad layouts, one pair per quality sub-score.
APPENDIX_PAIRS = {
    "icr": (
        _lay(("text", (0.1, 0.1, 0.3, 0.1)), ("logo", (0.6, 0.1, 0.2, 0.1)), ("text", (0.1, 0.5, 0.3, 0.1))),
        _lay(("text", (0.1, 0.1, 0.3, 0.1)), ("logo", (0.15, 0.12, 0.2, 0.1)), ("text", (0.12, 0.11, 0.3, 0.1))),
    ),
    "align": (
        _lay(("text", (0.3, 0.35, 0.4, 0.1)), ("text", (0.3, 0.55, 0.4, 0.1)), ("logo", (0.45, 0.2, 0.1, 0.08))),
        _lay(("text", (0.0, 0.0, 0.2, 0.05)), ("text", (0.8, 0.95, 0.2, 0.05)), ("logo", (0.9, 0.0, 0.1, 0.08))),
    ),
    "dist": (
        _lay(*[("text", (0.05 + 0.33 * i, 0.05 + 0.33 * j, 0.2, 0.05)) for i in range(3) for j in range(2)]),
        _lay(*[("text", (0.02 + 0.04 * i, 0.02 + 0.05 * j, 0.03, 0.02)) for i in range(3) for j in range(2)]),
    ),
    "spacing": (
        _lay(*[("text", (0.2, 0.1 + 0.2 * k, 0.6, 0.08)) for k in range(4)]),
        _lay(("text", (0.2, 0.1, 0.6, 0.08)), ("text", (0.2, 0.15, 0.6, 0.08)), ("text", (0.2, 0.2, 0.6, 0.08)),
             ("text", (0.2, 0.85, 0.6, 0.08))),
    ),
    "underlay": (
        _lay(("underlay", (0.18, 0.18, 0.44, 0.14)), ("text", (0.2, 0.2, 0.4, 0.1)), ("text", (0.2, 0.6, 0.4, 0.1))),
        _lay(("underlay", (0.18, 0.25, 0.44, 0.4)), ("text", (0.2, 0.2, 0.4, 0.1)), ("text", (0.2, 0.6, 0.4, 0.1))),
    ),
}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
