"""Reward-weight ablation: train once per preset and compare structural metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from laycrit.critique import PRESETS, QualityWeights, iou_reward, quality_reward
from laycrit.grpo import GrpoConfig, mode_layout, train
from laycrit.layout import CanvasSpec, Layout

STRUCTURAL = ("collision", "alignment", "spacing", "distribution")
COLUMNS = ("preset", "lambda_f", "lambda_q", "lambda_u") + STRUCTURAL + ("structural_mean", "iou", "reward")


@dataclass
class AblationRow:
    preset: str
    weights: tuple[float, float, float]
    collision: float
    alignment: float
    spacing: float
    distribution: float
    iou: Optional[float]
    reward: float

    @property
    def structural_mean(self) -> float:
        return float(np.mean([self.collision, self.alignment, self.spacing, self.distribution]))

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "lambda_f": self.weights[0],
            "lambda_q": self.weights[1],
            "lambda_u": self.weights[2],
            "collision": self.collision,
            "alignment": self.alignment,
            "spacing": self.spacing,
            "distribution": self.distribution,
            "structural_mean": self.structural_mean,
            "iou": self.iou,
            "reward": self.reward,
        }


def structural_metrics(
    layouts: Sequence[Layout],
    specs: Sequence[CanvasSpec],
    references: Sequence[Optional[Layout]],
    qw: QualityWeights = QualityWeights(),
) -> dict[str, float]:
    """Mean collision/alignment/spacing/distribution (and IoU when references exist)."""
    rows = []
    for lay, spec, ref in zip(layouts, specs, references):
        _, bd = quality_reward(lay, spec.saliency, qw)
        row = {"collision": bd.s_icr, "alignment": bd.s_align, "spacing": bd.s_spacing, "distribution": bd.s_dist}
        if ref is not None:
            row["iou"] = iou_reward(lay, ref)
        rows.append(row)
    return {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}


def run_ablation(
    specs: Sequence[CanvasSpec],
    references: Sequence[Optional[Layout]],
    cfg: GrpoConfig = GrpoConfig(),
    seeds: Sequence[int] = (0,),
    presets: Sequence[str] = tuple(PRESETS),
    qw: QualityWeights = QualityWeights(),
) -> list[AblationRow]:
    """Train under each preset for every seed; report per-preset medians over seeds.

    Metrics are measured on the trained policy's mean layouts.
    """
    rows = []
    for name in presets:
        rw = PRESETS[name]
        per_seed = []
        for seed in seeds:
            run_cfg = GrpoConfig(**{**cfg.__dict__, "seed": seed})
            result = train(specs, run_cfg, rw, qw, references)
            layouts = [mode_layout(result.params, s) for s in specs]
            m = structural_metrics(layouts, specs, references, qw)
            m["reward"] = float(result.log[-1]["mean_reward"]) if result.log else float("nan")
            per_seed.append(m)
        med = {k: float(np.median([m[k] for m in per_seed])) for k in per_seed[0]}
        rows.append(
            AblationRow(
                name,
                (rw.lambda_f, rw.lambda_q, rw.lambda_u),
                med["collision"],
                med["alignment"],
                med["spacing"],
                med["distribution"],
                med.get("iou"),
                med["reward"],
            )
        )
    return rows


def format_table(rows: Sequence[AblationRow]) -> str:
    lines = ["\t".join(COLUMNS)]
    for r in rows:
        d = r.to_dict()
        cells = [d["preset"]] + [
            "-" if d[c] is None else (f"{d[c]:.2f}" if c.startswith("lambda") else f"{d[c]:.4f}") for c in COLUMNS[1:]
        ]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
