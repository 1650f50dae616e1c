"""Group relative policy optimization on a per-slot Gaussian placement policy.

Each element slot, keyed by ``(element id, category)``, owns a diagonal
Gaussian over four raw values. A draw ``z`` is squashed through the logistic
sigmoid and mapped to a box that always lies inside the canvas::

    w = 0.01 + 0.98 * sigmoid(z_w)        x = sigmoid(z_x) * (1 - w)
    h = 0.01 + 0.98 * sigmoid(z_h)        y = sigmoid(z_y) * (1 - h)

Log-probabilities are taken on the raw draws, so the squashing Jacobian
cancels in every importance ratio.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence, Union

import numpy as np

from laycrit.critique import (
    PRESETS,
    QualityWeights,
    RewardWeights,
    hybrid_reward,
    hybrid_reward_batch,
)
from laycrit.geometry import BBox
from laycrit.layout import CanvasSpec, Layout, LayoutElement, as_valid_output

log = logging.getLogger(__name__)

LOG_STD_MIN = math.log(1e-3)
LOG_STD_MAX = math.log(0.5)
SIZE_MIN, SIZE_SPAN = 0.01, 0.98
LOG_2PI = math.log(2 * math.pi)

SlotKey = tuple[int, str]


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class PolicyParams:
    keys: tuple[SlotKey, ...]
    mean: np.ndarray  # (S, 4): x, y, w, h
    log_std: np.ndarray  # (S, 4)

    def __post_init__(self):
        self.keys = tuple((int(i), str(c)) for i, c in self.keys)
        self.mean = np.asarray(self.mean, dtype=float).reshape(len(self.keys), 4)
        self.log_std = np.clip(np.asarray(self.log_std, dtype=float).reshape(len(self.keys), 4), LOG_STD_MIN, LOG_STD_MAX)
        self._index = {k: i for i, k in enumerate(self.keys)}

    @classmethod
    def for_specs(
        cls,
        specs: Sequence[CanvasSpec],
        init_log_std: float = LOG_STD_MAX,
        position_scale: float = 0.0,
        size_logit: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> "PolicyParams":
        """One slot per distinct ``(id, category)`` across ``specs``.

        Position means are drawn from ``N(0, position_scale)``; size means all
        start at ``size_logit``.
        """
        keys = sorted({(e.id, e.category) for s in specs for e in s.elements})
        mean = np.zeros((len(keys), 4))
        if position_scale:
            rng = rng if rng is not None else np.random.default_rng(0)
            mean[:, :2] = rng.normal(0.0, position_scale, size=(len(keys), 2))
        mean[:, 2:] = size_logit
        return cls(tuple(keys), mean, np.full((len(keys), 4), init_log_std))

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.keys, self.mean.copy(), self.log_std.copy())

    def slots_for(self, spec: CanvasSpec) -> np.ndarray:
        try:
            return np.array([self._index[(e.id, e.category)] for e in sorted(spec.elements, key=lambda e: e.id)])
        except KeyError as exc:
            raise KeyError(f"policy has no slot for element {exc.args[0]}") from None

    def flat(self) -> np.ndarray:
        return np.concatenate([self.mean.ravel(), self.log_std.ravel()])

    def with_flat(self, v: np.ndarray) -> "PolicyParams":
        n = self.mean.size
        return PolicyParams(self.keys, v[:n], v[n:])

    def distance(self, other: "PolicyParams") -> float:
        return float(np.max(np.abs(self.flat() - other.flat())))

    def to_json(self) -> str:
        return json.dumps(
            {
                "slots": [
                    {"id": i, "category": c, "mean": self.mean[k].tolist(), "log_std": self.log_std[k].tolist()}
                    for k, (i, c) in enumerate(self.keys)
                ]
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "PolicyParams":
        slots = json.loads(text)["slots"]
        return cls(
            tuple((s["id"], s["category"]) for s in slots),
            np.array([s["mean"] for s in slots]),
            np.array([s["log_std"] for s in slots]),
        )


@dataclass
class ParamGrad:
    mean: np.ndarray
    log_std: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.mean.ravel(), self.log_std.ravel()])


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def squash(raw: np.ndarray) -> np.ndarray:
    """Map raw draws (..., 4) to boxes (..., 4) inside the unit canvas."""
    u = _sigmoid(raw)
    w = SIZE_MIN + SIZE_SPAN * u[..., 2]
    h = SIZE_MIN + SIZE_SPAN * u[..., 3]
    return np.stack([u[..., 0] * (1 - w), u[..., 1] * (1 - h), w, h], axis=-1)


def boxes_to_layout(boxes: np.ndarray, spec: CanvasSpec) -> Layout:
    return Layout(
        tuple(
            LayoutElement(e.id, e.category, BBox(*map(float, boxes[k])))
            for k, e in enumerate(sorted(spec.elements, key=lambda e: e.id))
        )
    )


def gaussian_log_prob(raw: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Sum of diagonal Gaussian log-densities over the trailing (element, dim) axes."""
    z = (raw - mean) / np.exp(log_std)
    per = -0.5 * z**2 - log_std - 0.5 * LOG_2PI
    return per.reshape(per.shape[0], -1).sum(axis=1)


@dataclass
class GroupSample:
    spec: CanvasSpec
    slots: np.ndarray  # (n,) slot index per element, ordered by element id
    raw: np.ndarray  # (G, n, 4) pre-squash draws
    boxes: np.ndarray  # (G, n, 4)
    log_prob_old: np.ndarray  # (G,)
    rewards: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None
    components: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.raw.shape[0]

    @property
    def layouts(self) -> list[Layout]:
        return [boxes_to_layout(b, self.spec) for b in self.boxes]


def sample_group(params: PolicyParams, spec: CanvasSpec, G: int, rng: np.random.Generator) -> GroupSample:
    if G < 2:
        raise ValueError("a group needs at least two candidates")
    slots = params.slots_for(spec)
    mean, log_std = params.mean[slots], params.log_std[slots]
    raw = mean + np.exp(log_std) * rng.standard_normal((G,) + mean.shape)
    return GroupSample(spec, slots, raw, squash(raw), gaussian_log_prob(raw, mean, log_std))


def normalize_advantages(rewards: Sequence[float], std_floor: float = 1e-8) -> np.ndarray:
    """Standardize rewards within a group; all zeros when the group is (near) constant."""
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("need at least two rewards")
    std = r.std()
    if not std >= std_floor:
        return np.zeros_like(r)
    return (r - r.mean()) / std


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.01
    learning_rate: float = 0.01
    iterations: int = 2000
    advantage_std_floor: float = 1e-8
    seed: int = 0
    init_log_std: float = LOG_STD_MAX
    # untrained policy: small boxes scattered over the canvas
    init_position_scale: float = 4.0
    init_size_logit: float = -2.0
    adam_betas: tuple[float, float] = (0.9, 0.999)

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be at least 2")
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be non-negative")
        if self.learning_rate < 0 or self.iterations < 0:
            raise ValueError("learning_rate and iterations must be non-negative")


def kl_divergence(
    params: PolicyParams, ref: PolicyParams, slot_weights: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Closed-form KL(params || ref) summed over slots and dims, with its gradient.

    ``slot_weights`` (one per slot, default all ones) scales each slot's share.
    """
    s2 = np.exp(2 * params.log_std)
    r2 = np.exp(2 * ref.log_std)
    d = params.mean - ref.mean
    w = np.ones((len(params.keys), 1)) if slot_weights is None else np.asarray(slot_weights, dtype=float)[:, None]
    kl = w * (ref.log_std - params.log_std + (s2 + d**2) / (2 * r2) - 0.5)
    return float(kl.sum()), w * d / r2, w * (s2 / r2 - 1.0)


def canvas_slot_weights(params: PolicyParams, specs: Sequence[CanvasSpec]) -> np.ndarray:
    """Fraction of ``specs`` that use each slot.

    The penalty sits inside the expectation over canvases, so a slot's KL
    counts once per canvas that places it, averaged over the canvases.
    """
    w = np.zeros(len(params.keys))
    for spec in specs:
        w[params.slots_for(spec)] += 1.0
    return w / max(len(specs), 1)


def _surrogate(params: PolicyParams, group: GroupSample, eps: float):
    mean, log_std = params.mean[group.slots], params.log_std[group.slots]
    lp = gaussian_log_prob(group.raw, mean, log_std)
    ratio = np.exp(lp - group.log_prob_old)
    adv = group.advantages
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1 - eps, 1 + eps) * adv
    value = np.minimum(unclipped, clipped).mean()

    # d/dtheta of the min is ratio * A * grad(log pi) where the unclipped branch is selected, else 0
    weight = np.where(unclipped <= clipped, ratio * adv, 0.0) / group.size  # (G,)
    z = (group.raw - mean) / np.exp(log_std)  # (G, n, 4)
    g_mean_el = np.einsum("g,gnd->nd", weight, z / np.exp(log_std))
    g_lstd_el = np.einsum("g,gnd->nd", weight, z**2 - 1.0)
    g_mean = np.zeros_like(params.mean)
    g_lstd = np.zeros_like(params.log_std)
    np.add.at(g_mean, group.slots, g_mean_el)
    np.add.at(g_lstd, group.slots, g_lstd_el)
    return float(value), g_mean, g_lstd, ratio


def grpo_objective(
    params: PolicyParams,
    old: PolicyParams,
    ref: PolicyParams,
    groups: Union[GroupSample, Sequence[GroupSample]],
    cfg: GrpoConfig,
) -> tuple[float, "ParamGrad"]:
    """Clipped surrogate minus ``beta * KL(params || ref)`` and its analytic gradient.

    Both terms are averaged over groups: each group contributes its surrogate
    and the KL of the slots its canvas uses. ``old`` is only used through the
    stored ``log_prob_old`` of each group and is accepted for symmetry with
    the update rule.
    """
    if isinstance(groups, GroupSample):
        groups = [groups]
    surr = 0.0
    g_mean = np.zeros_like(params.mean)
    g_lstd = np.zeros_like(params.log_std)
    for g in groups:
        if g.advantages is None:
            raise ValueError("group advantages are not filled")
        v, gm, gl, _ = _surrogate(params, g, cfg.clip_eps)
        surr += v / len(groups)
        g_mean += gm / len(groups)
        g_lstd += gl / len(groups)
    kl, k_mean, k_lstd = kl_divergence(params, ref, canvas_slot_weights(params, [g.spec for g in groups]))
    value = surr - cfg.kl_beta * kl
    return value, ParamGrad(g_mean - cfg.kl_beta * k_mean, g_lstd - cfg.kl_beta * k_lstd)


class Adam:
    def __init__(self, size: int, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def ascent_step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad**2
        m_hat = self.m / (1 - self.b1**self.t)
        v_hat = self.v / (1 - self.b2**self.t)
        return theta + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainingResult:
    params: PolicyParams
    initial: PolicyParams
    log: list[dict]

    def mean_rewards(self) -> np.ndarray:
        return np.array([row["mean_reward"] for row in self.log])


def score_group(
    group: GroupSample,
    reference: Optional[Layout],
    rw: RewardWeights,
    qw: QualityWeights,
    vectorized: bool = True,
) -> dict[str, np.ndarray]:
    """Hybrid reward for every candidate; the vectorized path equals per-layout scoring."""
    if vectorized:
        return hybrid_reward_batch(group.boxes, group.spec, reference, rw, qw)
    rows = [hybrid_reward(as_valid_output(lay), group.spec, reference, rw, qw).to_dict() for lay in group.layouts]
    keys = ("format", "icr", "align", "dist", "spacing", "underlay", "quality", "total")
    out = {k: np.array([r[k] for r in rows]) for k in keys}
    if reference is not None:
        out["iou"] = np.array([r["iou"] for r in rows])
    return out


COMPONENTS = ("format", "icr", "align", "dist", "spacing", "underlay", "quality", "iou")


def train(
    spec_suite: Sequence[CanvasSpec],
    cfg: GrpoConfig = GrpoConfig(),
    rw: RewardWeights = PRESETS["quality_focused"],
    qw: QualityWeights = QualityWeights(),
    references: Optional[Sequence[Optional[Layout]]] = None,
    init: Optional[PolicyParams] = None,
    vectorized: bool = True,
    callback: Optional[Callable[[int, dict], None]] = None,
) -> TrainingResult:
    """Run GRPO for ``cfg.iterations`` steps over ``spec_suite``.

    Each iteration snapshots the old policy, samples one group per canvas,
    scores and standardizes the group rewards, and takes one Adam ascent step
    on the clipped objective. The reference policy is the initial one.
    """
    if not spec_suite:
        raise ValueError("training needs at least one canvas")
    refs = list(references) if references is not None else [None] * len(spec_suite)
    if len(refs) != len(spec_suite):
        raise ValueError("references must align with spec_suite")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    if init is None:
        init = PolicyParams.for_specs(spec_suite, cfg.init_log_std, cfg.init_position_scale, cfg.init_size_logit, rng)
    params, ref = init.copy(), init.copy()
    opt = Adam(params.flat().size, cfg.learning_rate, cfg.adam_betas)
    kl_weights = canvas_slot_weights(params, spec_suite)
    history = []
    for it in range(cfg.iterations):
        old = params.copy()
        groups = []
        comp_sums = {k: [] for k in COMPONENTS}
        for spec, reference in zip(spec_suite, refs):
            g = sample_group(old, spec, cfg.group_size, rng)
            scores = score_group(g, reference, rw, qw, vectorized)
            g.rewards = scores["total"]
            g.components = scores
            g.advantages = normalize_advantages(g.rewards, cfg.advantage_std_floor)
            groups.append(g)
            for k in COMPONENTS:
                if k in scores:
                    comp_sums[k].append(scores[k].mean())
        mean_reward = float(np.mean([g.rewards.mean() for g in groups]))
        if not math.isfinite(mean_reward):
            raise TrainingDiverged(f"mean reward became {mean_reward} at iteration {it}")
        value, grad = grpo_objective(params, old, ref, groups, cfg)
        theta = opt.ascent_step(params.flat(), grad.flat())
        params = params.with_flat(theta)
        params.log_std = np.clip(params.log_std, LOG_STD_MIN, LOG_STD_MAX)
        row = {"iteration": it, "mean_reward": mean_reward, "objective": value}
        row.update({k: float(np.mean(v)) for k, v in comp_sums.items() if v})
        row["kl"] = kl_divergence(params, ref, kl_weights)[0]
        history.append(row)
        if callback is not None:
            callback(it, row)
    return TrainingResult(params, ref, history)


def mode_layout(params: PolicyParams, spec: CanvasSpec) -> Layout:
    """The layout at the policy's mean draw (no sampling noise)."""
    return boxes_to_layout(squash(params.mean[params.slots_for(spec)]), spec)


# --- brute-force oracle -------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Per-element placement grid.

    Positions are fractions of the free space (``x = u * (1 - w)``) with
    ``u`` in ``{0, 1/n, ..., (n-1)/n}`` so the exact center is reachable.
    """

    positions: int = 8
    sizes: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)

    @property
    def position_values(self) -> np.ndarray:
        return np.arange(self.positions) / self.positions

    def configs(self) -> np.ndarray:
        """All per-element boxes in lexicographic (ux, uy, w, h) order, shape (K, 4)."""
        us = self.position_values
        rows = []
        for ux, uy, w, h in product(us, us, self.sizes, self.sizes):
            rows.append((ux * (1 - w), uy * (1 - h), w, h))
        return np.array(rows)

    def snap(self, boxes: np.ndarray) -> np.ndarray:
        boxes = np.asarray(boxes, dtype=float)
        sizes = np.asarray(self.sizes)
        us = self.position_values
        w = sizes[np.abs(boxes[..., 2:3] - sizes).argmin(axis=-1)]
        h = sizes[np.abs(boxes[..., 3:4] - sizes).argmin(axis=-1)]
        ux = boxes[..., 0] / np.maximum(1 - boxes[..., 2], 1e-12)
        uy = boxes[..., 1] / np.maximum(1 - boxes[..., 3], 1e-12)
        ux = us[np.abs(ux[..., None] - us).argmin(axis=-1)]
        uy = us[np.abs(uy[..., None] - us).argmin(axis=-1)]
        return np.stack([ux * (1 - w), uy * (1 - h), w, h], axis=-1)


class OracleBudgetExceeded(ValueError):
    pass


def grid_oracle(
    spec: CanvasSpec,
    rw: RewardWeights = PRESETS["quality_focused"],
    qw: QualityWeights = QualityWeights(),
    grid: Grid = Grid(),
    reference: Optional[Layout] = None,
    budget: int = 10**7,
    chunk: int = 1 << 16,
) -> tuple[Layout, float]:
    """Exhaustive search over ``grid`` for the highest hybrid reward.

    Ties go to the first configuration in lexicographic order.
    """
    per = grid.configs()
    K, n = len(per), len(spec.elements)
    total = K**n
    if total > budget:
        raise OracleBudgetExceeded(f"{total} configurations exceed the budget of {budget}")
    best_val, best_idx = -np.inf, 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.stack([(idx // K ** (n - 1 - k)) % K for k in range(n)], axis=1)
        boxes = per[digits]
        vals = hybrid_reward_batch(boxes, spec, reference, rw, qw)["total"]
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_idx = float(vals[j]), int(idx[j])
    digits = [(best_idx // K ** (n - 1 - k)) % K for k in range(n)]
    layout = boxes_to_layout(per[digits], spec)
    exact = hybrid_reward(as_valid_output(layout), spec, reference, rw, qw).r_total
    return layout, exact
