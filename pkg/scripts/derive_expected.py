"""Compute the worked-example values independently of laycrit and freeze them.

Nothing here imports laycrit. Box areas and overlaps come from shapely
polygons, arithmetic runs on exact fractions where possible, and variances
come from the statistics module. Output: tests/expected_values.json.

    python scripts/derive_expected.py            # rewrite the frozen file
    python scripts/derive_expected.py --check    # fail if it would change
"""

import argparse
import json
import math
import statistics
import sys
from fractions import Fraction as F
from pathlib import Path

from shapely.geometry import box as shp_box
from shapely.ops import unary_union

OUT = Path(__file__).resolve().parent.parent / "tests" / "expected_values.json"


def poly(x, y, w, h):
    return shp_box(x, y, x + w, y + h)


def shp_iou(a, b):
    pa, pb = poly(*a), poly(*b)
    return pa.intersection(pb).area / pa.union(pb).area


def centers_of(boxes):
    return [(F(x) + F(w) / 2, F(y) + F(h) / 2) for x, y, w, h in boxes]


def alignment(centers, alpha):
    n = len(centers)
    dist = sum(math.sqrt((cx - F(1, 2)) ** 2 + (cy - F(1, 2)) ** 2) for cx, cy in centers) / n
    a_ec = 1 - dist / math.sqrt(2)
    var = statistics.pvariance([c[0] for c in centers]) + statistics.pvariance([c[1] for c in centers])
    a_ee = 1 - var / 2
    return float(alpha * a_ec + (1 - alpha) * a_ee)


def distribution(centers):
    n = len(centers)
    mx = sum(c[0] for c in centers) / n
    my = sum(c[1] for c in centers) / n
    spread = sum((cx - mx) ** 2 + (cy - my) ** 2 for cx, cy in centers) / n / 2
    # brute force: test every cell of the 3x3 grid for a center inside it
    occupied = 0
    for i in range(3):
        for j in range(3):
            lo_x, hi_x, lo_y, hi_y = F(i, 3), F(i + 1, 3), F(j, 3), F(j + 1, 3)
            if any((lo_x <= cx < hi_x or (i == 2 and cx == 1)) and (lo_y <= cy < hi_y or (j == 2 and cy == 1))
                   for cx, cy in centers):
                occupied += 1
    return float((spread + F(occupied, 9)) / 2)


def spacing(ys):
    ys = sorted(F(y) for y in ys)
    gaps = [b - a for a, b in zip(ys, ys[1:])]
    mean = sum(gaps) / len(gaps)
    return float(1 - statistics.pvariance(gaps) / mean**2)


def derive():
    v = {}
    # geometry
    v["area_a"] = poly(0.1, 0.2, 0.5, 0.1).area
    v["area_b"] = poly(0, 0, 0.25, 0.25).area
    v["intersect_offset"] = poly(0, 0, 0.5, 0.5).intersection(poly(0.25, 0.25, 0.5, 0.5)).area
    v["iou_offset"] = shp_iou((0, 0, 0.5, 0.5), (0.25, 0.25, 0.5, 0.5))
    v["center_a"] = [float(c) for c in centers_of([(F(1, 10), F(2, 10), F(4, 10), F(2, 10))])[0]]
    v["center_b"] = [float(c) for c in centers_of([(0, 0, F(2, 10), F(6, 10))])[0]]
    a = unary_union([poly(0, 0, 0.5, 1)])
    b = unary_union([poly(0.25, 0, 0.5, 1)])
    v["union_overlap_half"] = a.intersection(b).area / b.area

    # critique
    v["icr_identical_texts"] = 1 - shp_iou((0.1, 0.1, 0.3, 0.2), (0.1, 0.1, 0.3, 0.2))
    v["align_corner_alpha1"] = alignment([(F(0), F(0))], 1)
    v["align_two_vertical_alpha0"] = alignment([(F(1, 2), F(1, 4)), (F(1, 2), F(3, 4))], 0)
    v["dist_single_centered"] = distribution([(F(1, 2), F(1, 2))])
    v["dist_two_horizontal"] = distribution([(F(1, 10), F(1, 2)), (F(9, 10), F(1, 2))])
    v["dist_nine_cells"] = distribution([(F(2 * i + 1, 6), F(2 * j + 1, 6)) for i in range(3) for j in range(3)])
    v["spacing_uneven"] = spacing([F(1, 10), F(2, 10), F(8, 10)])
    v["iou_reward_one_exact_one_offset"] = (1 + shp_iou((0, 0, 0.5, 0.5), (0.25, 0.25, 0.5, 0.5))) / 2
    v["quality_single_centered"] = float(F(1, 5) * (1 + 1 + F(1, 1) * F(str(distribution([(F(1, 2), F(1, 2))]))) + 1 + 1))
    v["hybrid_missing_balanced"] = float(F(1, 10) * F(1, 10))

    # metrics
    v["und_half"] = F(1, 2).__float__()
    v["occ_half"] = v["union_overlap_half"]

    # advantages: population standardization
    rs = [F(2, 10), F(4, 10), F(6, 10)]
    mean = sum(rs) / 3
    std = math.sqrt(statistics.pvariance(rs))
    v["advantages_020406"] = [float((r - mean)) / std for r in rs]

    # ingestion: pixel -> normalized
    v["normalize_513x750"] = [float(F(51, 513)), float(F(150, 750)), float(F(257, 513)), float(F(75, 750))]
    return v


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    text = json.dumps(derive(), indent=2, sort_keys=True) + "\n"
    if args.check:
        if OUT.read_text() != text:
            sys.exit("frozen expected values differ from a fresh derivation")
        print("expected values match")
        return
    OUT.write_text(text)
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
