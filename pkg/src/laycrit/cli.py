"""Command-line interface: ``laycrit <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from laycrit.ablation import format_table, run_ablation
from laycrit.critique import QualityWeights, RewardWeights, hybrid_reward
from laycrit.data import (
    AnnotationError,
    SynthConfig,
    bundled_suite,
    generate_synthetic,
    load_annotations,
    samples_to_records,
    to_canvas_spec,
    write_annotations,
)
from laycrit.grpo import GrpoConfig, PolicyParams, TrainingDiverged, mode_layout, train
from laycrit.layout import DualLevelOutput, parse_dual_output, parse_spec
from laycrit.llm import EndpointConfig, EndpointUnavailable, best_of_n, winner_layout_json
from laycrit.metrics import evaluate_batch
from laycrit.render import RenderStyle, render_svg

log = logging.getLogger("laycrit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _weights(text: str) -> RewardWeights:
    try:
        return RewardWeights.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _read_layout_text(text: str, spec) -> DualLevelOutput:
    # accept either a full dual-level response or a bare layout JSON body
    if "<layout>" not in text:
        text = f"<design></design><layout>{text}</layout>"
    return parse_dual_output(text, spec)


def _load_suite(path: Optional[str]):
    if path is None:
        return bundled_suite()
    return [to_canvas_spec(r) for r in load_annotations(path)]


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_score(args) -> int:
    spec = parse_spec(Path(args.spec).read_text(encoding="utf-8"))
    out = _read_layout_text(Path(args.layout).read_text(encoding="utf-8"), spec)
    reference = None
    if args.reference:
        ref_out = _read_layout_text(Path(args.reference).read_text(encoding="utf-8"), spec)
        if ref_out.layout is None:
            raise ValueError(f"reference layout is not valid for this canvas ({ref_out.parse_status.value})")
        reference = ref_out.layout
    bd = hybrid_reward(out, spec, reference, args.weights, QualityWeights(alpha=args.alpha))
    print(json.dumps({**bd.to_dict(), "parse_status": out.parse_status.value}, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    records = load_annotations(args.data, strict=args.strict)
    pairs = [to_canvas_spec(r) for r in records]
    if args.params:
        params = PolicyParams.from_json(Path(args.params).read_text(encoding="utf-8"))
        layouts = [(mode_layout(params, spec), spec.saliency) for spec, _ in pairs]
    else:
        layouts = [(ref, spec.saliency) for spec, ref in pairs]
    report = evaluate_batch(layouts, ids=[r.id for r in records], resolution=args.resolution)
    if args.csv:
        _write(args.csv, report.to_csv())
    if args.json:
        _write(args.json, report.to_json() + "\n")
    if not args.csv and not args.json:
        sys.stdout.write(report.to_csv())
        sys.stdout.write(report.to_json() + "\n")
    return 0


def _grpo_config(args) -> GrpoConfig:
    return GrpoConfig(
        group_size=args.group_size,
        clip_eps=args.clip_eps,
        kl_beta=args.kl_beta,
        learning_rate=args.lr,
        iterations=args.iters,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    suite = _load_suite(args.suite)
    specs = [s for s, _ in suite]
    refs = [r for _, r in suite] if not args.no_reference else None
    cfg = _grpo_config(args)
    init = PolicyParams.from_json(Path(args.init).read_text(encoding="utf-8")) if args.init else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "log.jsonl", "w", encoding="utf-8") as fh:

        def record(it, row):
            fh.write(json.dumps(row) + "\n")
            if args.verbose and it % 100 == 0:
                log.info("iter %d mean reward %.4f", it, row["mean_reward"])

        result = train(specs, cfg, args.weights, QualityWeights(), refs, init=init, callback=record)
    (out / "params.json").write_text(result.params.to_json(), encoding="utf-8")
    (out / "init_params.json").write_text(result.initial.to_json(), encoding="utf-8")
    summary = {"iterations": cfg.iterations, "canvases": len(specs)}
    if result.log:
        summary.update(first_mean_reward=result.log[0]["mean_reward"], last_mean_reward=result.log[-1]["mean_reward"])
    print(json.dumps(summary, indent=2))
    return 0


def cmd_rerank(args) -> int:
    spec = parse_spec(Path(args.spec).read_text(encoding="utf-8"))
    cfg = EndpointConfig(
        base_url=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        timeout=args.timeout,
        retries=args.retries,
        max_parallel=args.jobs,
    )
    result = best_of_n(cfg, spec, args.n, rw=args.weights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rerank.json").write_text(json.dumps(result.to_dict(), indent=2), encoding="utf-8")
    winner = winner_layout_json(result)
    if winner is not None:
        (out / "winner_layout.json").write_text(winner, encoding="utf-8")
    print(json.dumps({"winner": result.winner, "total": result.best.reward.r_total}, indent=2))
    return 0


def cmd_render(args) -> int:
    style = RenderStyle(width=args.width, height=args.height)
    if args.data:
        records = load_annotations(args.data)
        if not 0 <= args.index < len(records):
            raise ValueError(f"index {args.index} out of range for {len(records)} records")
        spec, layout = to_canvas_spec(records[args.index])
    else:
        if not (args.spec and args.layout):
            raise UsageError("render needs --data, or both --spec and --layout")
        spec = parse_spec(Path(args.spec).read_text(encoding="utf-8"))
        parsed = _read_layout_text(Path(args.layout).read_text(encoding="utf-8"), spec)
        if parsed.layout is None:
            raise ValueError(f"layout does not parse for this canvas ({parsed.parse_status.value}: {parsed.detail})")
        layout = parsed.layout
    _write(args.out, render_svg(layout, spec.saliency, style))
    return 0


def cmd_gen(args) -> int:
    cfg = SynthConfig(count=args.count, mode=args.mode, seed=args.seed, underlay_prob=args.underlay_prob)
    records = samples_to_records(generate_synthetic(cfg), prefix=f"{args.mode}-{args.seed}")
    write_annotations(records, args.out)
    return 0


def cmd_ablate(args) -> int:
    suite = _load_suite(args.suite)
    specs = [s for s, _ in suite]
    refs = [r for _, r in suite]
    cfg = _grpo_config(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = run_ablation(specs, refs, cfg, seeds)
    table = format_table(rows)
    sys.stdout.write(table)
    if args.out:
        Path(args.out).write_text(json.dumps([r.to_dict() for r in rows], indent=2), encoding="utf-8")
    return 0


def _add_grpo_flags(p, iters: int) -> None:
    p.add_argument("--suite", help="annotation JSONL (default: bundled 10-canvas suite)")
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--group-size", type=int, default=8)
    p.add_argument("--clip-eps", type=float, default=0.2)
    p.add_argument("--kl-beta", type=float, default=0.01)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="laycrit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("score", help="score one layout against a canvas")
    p.add_argument("--spec", required=True, help="canvas environment JSON")
    p.add_argument("--layout", required=True, help="layout JSON or a full <design>/<layout> response")
    p.add_argument("--reference", help="reference layout JSON for the IoU term")
    p.add_argument("--weights", type=_weights, default="balanced_hybrid", help="preset name or f,q,u")
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="Ove/Und/Occ over an annotation file")
    p.add_argument("--data", required=True, help="annotation JSONL")
    p.add_argument("--params", help="evaluate this policy's mean layouts instead of the annotated ones")
    p.add_argument("--csv", help="per-layout CSV output path ('-' for stdout)")
    p.add_argument("--json", help="aggregate JSON output path ('-' for stdout)")
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--strict", action="store_true", help="fail on malformed lines instead of skipping")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", help="GRPO training of the placement policy")
    _add_grpo_flags(p, 2000)
    p.add_argument("--weights", type=_weights, default="quality_focused")
    p.add_argument("--init", help="initial PolicyParams JSON")
    p.add_argument("--no-reference", action="store_true", help="ignore reference layouts (IoU weight folds into quality)")
    p.add_argument("--out", required=True, help="output directory for params.json and log.jsonl")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rerank", help="best-of-N reranking against a chat-completions endpoint")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--endpoint", required=True, help="base URL, e.g. http://localhost:8000/v1")
    p.add_argument("--model", default="default")
    p.add_argument("--weights", type=_weights, default="balanced_hybrid")
    p.add_argument("--temperature", type=float, default=0.9)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--jobs", type=int, default=4, help="concurrent requests")
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; sampling happens server-side")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("render", help="render a layout to SVG")
    p.add_argument("--spec")
    p.add_argument("--layout")
    p.add_argument("--data", help="annotation JSONL (renders record --index)")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--width", type=int, default=400)
    p.add_argument("--height", type=int, default=600)
    p.add_argument("--out", help="SVG path (default stdout)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("gen", help="generate synthetic annotation JSONL")
    p.add_argument("--mode", choices=("random", "designed"), default="designed")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--underlay-prob", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ablate", help="train under the four reward presets and compare")
    _add_grpo_flags(p, 500)
    p.add_argument("--seeds", default="0", help="comma-separated seeds; rows report medians")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (AnnotationError, EndpointUnavailable, TrainingDiverged, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"laycrit: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
