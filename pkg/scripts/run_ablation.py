"""Compare the four reward presets on the bundled suite (medians over seeds).

    python scripts/run_ablation.py --seeds 0,1,2,3,4 --iters 500 --out runs/ablation.tsv
"""

import argparse
from pathlib import Path

from laycrit.ablation import format_table, run_ablation
from laycrit.data import bundled_suite
from laycrit.grpo import GrpoConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0,1,2,3,4")
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--out", help="write the TSV table here as well")
    args = ap.parse_args()

    suite = bundled_suite()
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = run_ablation([s for s, _ in suite], [r for _, r in suite], GrpoConfig(iterations=args.iters), seeds)
    table = format_table(rows)
    print(table, end="")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table)


if __name__ == "__main__":
    main()
