"""Best-of-N layout reranking against a chat-completions endpoint."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import httpx

from laycrit.critique import PRESETS, QualityWeights, RewardBreakdown, RewardWeights, hybrid_reward
from laycrit.layout import CanvasSpec, DualLevelOutput, Layout, parse_dual_output, serialize_spec

log = logging.getLogger(__name__)

API_KEY_ENV = "LAYCRIT_API_KEY"


class EndpointUnavailable(RuntimeError):
    """Every request in a batch failed."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = "default"
    temperature: float = 0.9
    max_tokens: int = 1024
    timeout: float = 60.0
    retries: int = 2
    max_parallel: int = 4
    api_key_env: str = API_KEY_ENV

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be positive")

    @property
    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + "/chat/completions"


SYSTEM_PROMPT = "You are a graphic layout designer who reasons explicitly about geometry."

PROMPT_TEMPLATE = """\
Place every element of the poster canvas described below.

Canvas environment (JSON). Coordinates are normalized to [0, 1]: (x, y) is the
top-left corner, (w, h) the width and height, and the canvas spans 0..1 on both
axes. Every element whose geometry is the mask token is yours to predict.

{environment}

Legend:
{legend}

Design rules:
- Do not overlap text, logos or embellishments with each other.
- Keep text, logos and embellishments off the salient regions.
- Each underlay sits beneath exactly one text element and should fully contain it.
- Prefer aligned, evenly spaced, well distributed arrangements.

Answer in exactly two blocks, in this order:
<design>your spatial reasoning about the placement</design>
<layout>{{"elements": [{{"category": "<category>", "x": <x>, "y": <y>, "w": <w>, "h": <h>}}, ...]}}</layout>

The layout JSON must contain one entry per element above, with the same
categories and counts ({counts}).
"""


def build_prompt(spec: CanvasSpec) -> str:
    legend = [f"- element {e.id}: {e.category}" for e in sorted(spec.elements, key=lambda e: e.id)]
    if spec.saliency:
        for k, s in enumerate(spec.saliency):
            legend.append(f"- salient region {k}: x={s.x:.4f} y={s.y:.4f} w={s.w:.4f} h={s.h:.4f} (avoid)")
    else:
        legend.append("- no salient regions")
    counts = ", ".join(f"{n} {c}" for c, n in sorted(spec.category_counts().items()))
    return PROMPT_TEMPLATE.format(environment=serialize_spec(spec, indent=2), legend="\n".join(legend), counts=counts)


def _request_once(client: httpx.Client, cfg: EndpointConfig, prompt: str) -> str:
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    body = {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": prompt},
        ],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }
    resp = client.post(cfg.url, json=body, headers=headers, timeout=cfg.timeout)
    resp.raise_for_status()
    content = resp.json()["choices"][0]["message"]["content"]
    return content if isinstance(content, str) else ""


def _request(client: httpx.Client, cfg: EndpointConfig, prompt: str) -> tuple[Optional[str], float]:
    start = time.perf_counter()
    for attempt in range(cfg.retries + 1):
        try:
            return _request_once(client, cfg, prompt), time.perf_counter() - start
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            log.warning("request attempt %d/%d failed: %s", attempt + 1, cfg.retries + 1, exc)
    return None, time.perf_counter() - start


def sample_candidates_timed(cfg: EndpointConfig, prompt: str, n: int) -> tuple[list[str], list[float]]:
    """Like :func:`sample_candidates` but also returns per-request latencies."""
    if n < 1:
        raise ValueError("n must be at least 1")
    with httpx.Client() as client:
        if n == 1 or cfg.max_parallel == 1:
            results = [_request(client, cfg, prompt) for _ in range(n)]
        else:
            with ThreadPoolExecutor(max_workers=min(n, cfg.max_parallel)) as pool:
                results = list(pool.map(lambda _: _request(client, cfg, prompt), range(n)))
    if all(text is None for text, _ in results):
        raise EndpointUnavailable(f"all {n} requests to {cfg.url} failed")
    return [text or "" for text, _ in results], [lat for _, lat in results]


def sample_candidates(cfg: EndpointConfig, prompt: str, n: int) -> list[str]:
    """Issue ``n`` independent chat requests; failed ones come back as empty text."""
    return sample_candidates_timed(cfg, prompt, n)[0]


@dataclass
class Candidate:
    raw: str
    parsed: DualLevelOutput
    reward: RewardBreakdown


@dataclass
class RerankResult:
    candidates: list[Candidate]
    winner: int
    latencies: list[float] = field(default_factory=list)

    @property
    def best(self) -> Candidate:
        return self.candidates[self.winner]

    def to_dict(self) -> dict:
        return {
            "winner": self.winner,
            "candidates": [
                {
                    "raw": c.raw,
                    "parse_status": c.parsed.parse_status.value,
                    "design": c.parsed.design_trace,
                    "reward": c.reward.to_dict(),
                }
                for c in self.candidates
            ],
            "latencies": self.latencies,
        }


def rerank(
    spec: CanvasSpec,
    candidates: Sequence[str],
    reference: Optional[Layout] = None,
    rw: RewardWeights = PRESETS["balanced_hybrid"],
    qw: QualityWeights = QualityWeights(),
    latencies: Sequence[float] = (),
) -> RerankResult:
    """Parse and score every candidate; the highest total wins, earliest on ties."""
    if not candidates:
        raise ValueError("nothing to rerank")
    scored = []
    for raw in candidates:
        parsed = parse_dual_output(raw, spec)
        scored.append(Candidate(raw, parsed, hybrid_reward(parsed, spec, reference, rw, qw)))
    winner = max(range(len(scored)), key=lambda i: (scored[i].reward.r_total, -i))
    return RerankResult(scored, winner, list(latencies))


def best_of_n(
    cfg: EndpointConfig,
    spec: CanvasSpec,
    n: int,
    reference: Optional[Layout] = None,
    rw: RewardWeights = PRESETS["balanced_hybrid"],
    qw: QualityWeights = QualityWeights(),
) -> RerankResult:
    texts, latencies = sample_candidates_timed(cfg, build_prompt(spec), n)
    return rerank(spec, texts, reference, rw, qw, latencies)


def winner_layout_json(result: RerankResult) -> Optional[str]:
    layout = result.best.parsed.layout
    return json.dumps(layout.to_json_obj(), indent=2) if layout is not None else None
