import pytest
from hypothesis import given

from laycrit.geometry import BBox
from laycrit.layout import Layout
from laycrit.metrics import evaluate_batch, occlusion, overlay, underlay_effectiveness, underlay_effectiveness_detail

from conftest import layouts


def lay(*items):
    return Layout.from_boxes([(c, BBox(*b)) for c, b in items])


def test_overlay_examples():
    assert overlay(lay(("text", (0.1, 0.1, 0.2, 0.1)), ("text", (0.5, 0.5, 0.2, 0.1)))) == 0.0
    assert overlay(lay(("text", (0.1, 0.1, 0.2, 0.1)), ("text", (0.1, 0.1, 0.2, 0.1)))) == 1.0
    mixed = lay(("text", (0.1, 0.1, 0.2, 0.1)), ("underlay", (0.1, 0.1, 0.2, 0.1)), ("logo", (0.6, 0.6, 0.1, 0.1)))
    assert overlay(mixed) == 0.0


def test_underlay_examples(expected):
    assert underlay_effectiveness(lay(("underlay", (0.1, 0.1, 0.4, 0.2)), ("text", (0.15, 0.15, 0.2, 0.1)))) == 1.0
    assert underlay_effectiveness(lay(("underlay", (0.1, 0.1, 0.4, 0.2)), ("text", (0.6, 0.6, 0.2, 0.1)))) == 0.0
    two = lay(("underlay", (0.1, 0.1, 0.4, 0.2)), ("underlay", (0.6, 0.6, 0.3, 0.2)), ("text", (0.15, 0.15, 0.2, 0.1)))
    assert underlay_effectiveness(two) == pytest.approx(expected["und_half"], abs=1e-12)


def test_underlay_vacuous_flag():
    assert underlay_effectiveness_detail(lay(("text", (0.1, 0.1, 0.2, 0.1)))) == (1.0, True)


def test_underlay_partial_containment_not_effective():
    assert underlay_effectiveness(lay(("underlay", (0.2, 0.1, 0.4, 0.2)), ("text", (0.15, 0.15, 0.2, 0.1)))) == 0.0


def test_occlusion_examples(expected):
    res = 512
    layout = lay(("text", (0, 0, 0.5, 1)))
    assert occlusion(layout, []) == 0.0
    assert occlusion(lay(("text", (0, 0, 1, 1))), [BBox(0.2, 0.2, 0.3, 0.3)], res) == pytest.approx(1.0, abs=2 / res)
    assert occlusion(layout, [BBox(0.25, 0, 0.5, 1)], res) == pytest.approx(expected["occ_half"], abs=2 / res)


@given(layouts())
def test_metric_ranges(layout):
    assert 0.0 <= overlay(layout) <= 1.0
    assert 0.0 <= underlay_effectiveness(layout) <= 1.0
    assert 0.0 <= occlusion(layout, [BBox(0.1, 0.1, 0.5, 0.5)], 64) <= 1.0


def test_batch_of_one_matches_single():
    layout = lay(("underlay", (0.1, 0.1, 0.4, 0.2)), ("text", (0.15, 0.15, 0.2, 0.1)), ("logo", (0.2, 0.2, 0.1, 0.1)))
    sal = [BBox(0.1, 0.1, 0.3, 0.3)]
    rep = evaluate_batch([(layout, sal)])
    assert (rep.ove, rep.und, rep.occ) == (overlay(layout), underlay_effectiveness(layout), occlusion(layout, sal))
    assert rep.n_layouts == 1


def test_batch_und_ignores_vacuous_layouts():
    with_u = lay(("underlay", (0.1, 0.1, 0.4, 0.2)), ("text", (0.6, 0.6, 0.2, 0.1)))
    without = lay(("text", (0.1, 0.1, 0.2, 0.1)))
    rep = evaluate_batch([(with_u, []), (without, [])])
    assert rep.und == 0.0 and not rep.und_vacuous
    assert evaluate_batch([(without, [])]).und_vacuous


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        evaluate_batch([])


def test_csv_layout():
    rep = evaluate_batch([(lay(("text", (0.1, 0.1, 0.2, 0.1))), [])], ids=["a"])
    assert rep.to_csv() == "layout_id,ove,und,occ\na,0.000000,1.000000,0.000000\n"
