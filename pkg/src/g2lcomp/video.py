"""Frame-wise adaptive selection for video token sequences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .budget import BudgetPlan, aggregate_richness, plan_budgets
from .errors import ShapeError
from .selector import ViewSelection, holistic_scores, topk_select
from .tensor_io import CompressionConfig


@dataclass(frozen=True, eq=False)
class VideoSelection:
    frames: list[ViewSelection]
    plan: BudgetPlan

    @property
    def total_retained(self) -> int:
        return sum(len(f.retained) for f in self.frames)

    def to_json(self) -> dict:
        return {"frames": [f.to_json() for f in self.frames]}


def _as_video(v) -> np.ndarray:
    x = np.asarray(v, dtype=np.float64)
    if x.ndim != 3 or 0 in x.shape:
        raise ShapeError(f"video must be a non-empty [T, N, D] array, got {x.shape}")
    return x


def global_pool(v) -> np.ndarray:
    x = _as_video(v)
    return x.reshape(-1, x.shape[2]).mean(axis=0)


def video_global_scores(v) -> np.ndarray:
    """``[T, N]`` negated cosine similarity of every token to the pooled video vector."""
    x = _as_video(v)
    T, N, D = x.shape
    return _kernels.neg_cosine(x.reshape(-1, D), global_pool(x)).reshape(T, N)


def video_local_scores(v) -> np.ndarray:
    """``[T, N]`` negated cosine similarity of every token to its frame's mean."""
    x = _as_video(v)
    return np.stack([_kernels.neg_cosine(f, f.mean(axis=0)) for f in x])


def compress_video(v, cfg: CompressionConfig) -> VideoSelection:
    x = _as_video(v)
    T, N, _ = x.shape
    g = video_global_scores(x)
    loc = video_local_scores(x)
    s = aggregate_richness(list(g), cfg.strategy, cfg.retention_ratio, N)
    plan = plan_budgets(s, N, cfg)
    frames = []
    for j in range(T):
        held = holistic_scores(g[j], loc[j], cfg.alpha)
        frames.append(ViewSelection(j, float(plan.ratios[j]), topk_select(held, int(plan.counts[j]))))
    return VideoSelection(frames, plan)
