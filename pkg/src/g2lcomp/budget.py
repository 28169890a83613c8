"""Adaptive per-view retention budgets.

Richness scores are turned into importance weights by a temperature
softmax, the weights shift each view's ratio away from the preset ratio by
their deviation from the mean weight, and the ratios become integer token
counts that always add up to the global target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllocationError, ShapeError
from .layout import CropLayout, crop_regions
from .tensor_io import CompressionConfig


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def target_count(ratio: float, n_tokens: int, n_views: int = 1) -> int:
    """Token count kept by ``ratio`` over ``n_views`` views of ``n_tokens`` each."""
    return round_half_up(ratio * n_tokens * n_views)


def topk_size(ratio: float, n_tokens: int) -> int:
    # absorb float noise such as 0.7 * 10 == 7.000000000000001
    return max(1, math.ceil(ratio * n_tokens - 1e-9))


@dataclass(frozen=True, eq=False)
class BudgetPlan:
    ratios: np.ndarray
    counts: np.ndarray
    total_target: int
    weights: np.ndarray

    def __post_init__(self):
        if int(self.counts.sum()) != self.total_target:
            raise AllocationError(
                f"counts sum to {int(self.counts.sum())}, target is {self.total_target}"
            )


def region_scores(thumb_scores, layout: CropLayout) -> list[np.ndarray]:
    grid = np.asarray(thumb_scores, dtype=np.float64)
    if grid.shape != (layout.patch_rows, layout.patch_cols):
        raise ShapeError(
            f"thumbnail grid {grid.shape} does not match layout "
            f"{layout.patch_rows}x{layout.patch_cols}"
        )
    return [grid[reg.slices()].ravel() for reg in crop_regions(layout)]


def crop_richness(thumb_scores, layout: CropLayout) -> np.ndarray:
    """Sum of thumbnail scores inside each crop's thumbnail region."""
    return np.array([r.sum() for r in region_scores(thumb_scores, layout)])


def aggregate_richness(regions: Sequence[np.ndarray], strategy: str,
                       ratio: float, n_tokens: int) -> np.ndarray:
    """Collapse each view's scores to one richness value per ``strategy``.

    ``topk_mean`` averages the ``ceil(ratio * n_tokens)`` best scores, capped
    at the number of scores available for the view.
    """
    if strategy in ("softmax_sum", "uniform"):
        return np.array([r.sum() for r in regions])
    if strategy == "softmax_max":
        return np.array([r.max() for r in regions])
    if strategy == "topk_mean":
        k = topk_size(ratio, n_tokens)
        out = []
        for r in regions:
            kk = min(k, r.size)
            out.append(np.sort(r)[::-1][:kk].mean())
        return np.array(out)
    raise ValueError(f"unknown strategy {strategy!r}")


def importance_weights(s, tau: float, epsilon: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    e = np.exp((s - s.max()) / tau)
    # fsum is exactly rounded, so the denominator ignores view order
    return e / (math.fsum(e) + epsilon)


def allocate_ratios(weights, ratio: float) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    # deviation first: equal weights then give exactly ``ratio``
    deviation = w - 1.0 / w.size
    return np.clip(ratio * (1.0 + deviation), 0.0, 1.0)


def apportion(quotas, total: int, cap: int, rounding: str = "largest_remainder") -> np.ndarray:
    """Integer counts in ``[0, cap]`` summing to ``total``, close to ``quotas``.

    Start from the floor (``largest_remainder``) or the nearest integer
    (``nearest``) of each quota, then hand out or take back single tokens
    in order of residual, lower index first on ties, repeating passes
    until the sum matches.
    """
    q = np.clip(np.asarray(quotas, dtype=np.float64), 0.0, cap)
    n = q.size
    if total < 0 or total > n * cap:
        raise AllocationError(f"target {total} unreachable with {n} views of {cap}")
    if rounding == "largest_remainder":
        k = np.floor(q)
    elif rounding == "nearest":
        k = np.floor(q + 0.5)
    else:
        raise ValueError(f"unknown rounding {rounding!r}")
    k = np.clip(k, 0, cap).astype(np.int64)
    idx = np.arange(n)
    diff = total - int(k.sum())
    while diff:
        resid = q - k
        if diff > 0:
            elig = idx[k < cap]
            order = elig[np.lexsort((elig, -resid[elig]))][:diff]
            k[order] += 1
            diff -= order.size
        else:
            elig = idx[k > 0]
            order = elig[np.lexsort((elig, resid[elig]))][:-diff]
            k[order] -= 1
            diff += order.size
        if order.size == 0:
            raise AllocationError("no view can absorb the remaining budget")
    return k


def plan_budgets(s, n_tokens: int, cfg: CompressionConfig) -> BudgetPlan:
    """Per-view ratios and integer counts for richness vector ``s``.

    ``s`` is taken as already aggregated for the configured strategy;
    ``uniform`` ignores it.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.size == 0:
        raise ShapeError("need at least one view")
    if not np.all(np.isfinite(s)):
        raise ValueError("richness scores must be finite")
    R = cfg.retention_ratio
    total = target_count(R, n_tokens, s.size)
    if cfg.strategy == "uniform":
        weights = np.full(s.size, 1.0 / s.size)
        ratios = np.full(s.size, R)
    else:
        weights = importance_weights(s, cfg.tau, cfg.epsilon)
        ratios = allocate_ratios(weights, R)
    counts = apportion(ratios * n_tokens, total, n_tokens, cfg.rounding)
    return BudgetPlan(ratios=ratios, counts=counts, total_target=total, weights=weights)


def plan_image_budgets(thumb_scores, layout: CropLayout, cfg: CompressionConfig) -> BudgetPlan:
    regions = region_scores(thumb_scores, layout)
    s = aggregate_richness(regions, cfg.strategy, cfg.retention_ratio, layout.tokens_per_view)
    return plan_budgets(s, layout.tokens_per_view, cfg)
