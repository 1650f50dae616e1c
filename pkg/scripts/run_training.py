"""Train on the bundled suite for several seeds and summarize the learning curves.

    python scripts/run_training.py --seeds 0,1,2,3,4 --out runs/training

Writes one ``curve_seed<k>.csv`` per seed (iteration, mean reward and the
component means) and ``summary.json`` with per-seed gains measured on
256 policy draws per canvas before and after training.
"""

import argparse
import csv
import json
import time
from pathlib import Path

import numpy as np

from laycrit.critique import PRESETS, hybrid_reward_batch
from laycrit.data import bundled_suite
from laycrit.grpo import COMPONENTS, GrpoConfig, sample_group, train


def expected_reward(params, specs, rw, seed=1, n=256):
    rng = np.random.default_rng(seed)
    rows = [hybrid_reward_batch(sample_group(params, s, n, rng).boxes, s, None, rw) for s in specs]
    return {k: float(np.mean([r[k].mean() for r in rows])) for k in ("total", "align", "quality")}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--weights", default="quality_focused", choices=sorted(PRESETS))
    ap.add_argument("--out", default="runs/training")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = [s for s, _ in bundled_suite()]
    rw = PRESETS[args.weights]
    summary = []
    for seed in (int(s) for s in args.seeds.split(",")):
        start = time.perf_counter()
        res = train(specs, GrpoConfig(iterations=args.iters, seed=seed), rw)
        before, after = expected_reward(res.initial, specs, rw), expected_reward(res.params, specs, rw)
        with open(out / f"curve_seed{seed}.csv", "w", newline="") as fh:
            cols = ["iteration", "mean_reward"] + [c for c in COMPONENTS if c in res.log[0]] + ["kl"]
            writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(res.log)
        row = {
            "seed": seed,
            "seconds": round(time.perf_counter() - start, 1),
            "reward_before": before["total"],
            "reward_after": after["total"],
            "relative_gain": after["total"] / before["total"] - 1,
            "align_before": before["align"],
            "align_after": after["align"],
        }
        summary.append(row)
        print(f"seed {seed}: reward {before['total']:.4f} -> {after['total']:.4f} "
              f"({row['relative_gain']:+.1%}), align {before['align']:.4f} -> {after['align']:.4f}")
    gains = [r["relative_gain"] for r in summary]
    print(f"median relative gain {np.median(gains):+.1%}")
    (out / "summary.json").write_text(json.dumps({"seeds": summary, "median_gain": float(np.median(gains))}, indent=2))


if __name__ == "__main__":
    main()
