"""Regenerate the byte-for-byte golden files under tests/golden.

Only run this after an intentional output format change, then review the diff.
"""

from pathlib import Path

from laycrit.data import (
    SynthConfig,
    bundled_suite,
    generate_synthetic,
    load_annotations,
    samples_to_records,
    to_canvas_spec,
    write_annotations,
)
from laycrit.layout import serialize_spec
from laycrit.metrics import evaluate_batch
from laycrit.render import render_svg

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
GOLDEN_CANVAS = 2  # bundled canvas with three elements and two saliency boxes
EVAL_INPUT = SynthConfig(count=6, mode="random", seed=5, underlay_prob=0.5)


def write_eval_input(path: Path) -> None:
    write_annotations(samples_to_records(generate_synthetic(EVAL_INPUT), prefix="mixed"), path)


def golden_outputs(eval_input: Path) -> dict[str, str]:
    spec, layout = bundled_suite()[GOLDEN_CANVAS]
    records = load_annotations(eval_input)
    pairs = [to_canvas_spec(r) for r in records]
    report = evaluate_batch([(ref, s.saliency) for s, ref in pairs], ids=[r.id for r in records])
    return {
        "spec.json": serialize_spec(spec, indent=2) + "\n",
        "layout.svg": render_svg(layout, spec.saliency),
        "evaluate.csv": report.to_csv(),
    }


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    write_eval_input(GOLDEN / "mixed.jsonl")
    for name, text in golden_outputs(GOLDEN / "mixed.jsonl").items():
        (GOLDEN / name).write_text(text, encoding="utf-8")
        print(f"wrote {GOLDEN / name}")


if __name__ == "__main__":
    main()
