"""Global-to-local image token selection.

The thumbnail keeps its top tokens by its own scores.  Its score map also
decides how many tokens each crop keeps, and, upsampled to full
resolution, is blended with each crop's local scores to rank the crop's
tokens.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .budget import BudgetPlan, plan_image_budgets, target_count
from .errors import G2LError, RangeError, ShapeError
from .layout import CropLayout
from .tensor_io import CompressionConfig


@dataclass(frozen=True, eq=False)
class ViewSelection:
    view: str | int  # "thumbnail" or crop / frame index
    ratio: float
    retained: np.ndarray

    def to_json(self) -> dict:
        out = {} if self.view == "thumbnail" else {"index": int(self.view)}
        out["ratio"] = float(self.ratio)
        out["retained"] = [int(i) for i in self.retained]
        return out


@dataclass(frozen=True, eq=False)
class SelectionResult:
    thumbnail: ViewSelection
    crops: list[ViewSelection]
    plan: BudgetPlan | None = None

    @property
    def total_retained(self) -> int:
        return len(self.thumbnail.retained) + sum(len(c.retained) for c in self.crops)

    def to_json(self) -> dict:
        return {
            "thumbnail": self.thumbnail.to_json(),
            "crops": [c.to_json() for c in self.crops],
        }


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except G2LError as exc:
        if getattr(exc, "stage", None):
            raise
        err = type(exc)(f"[{name}] {exc}")
        err.stage = name
        raise err from exc


def bilinear_upsample(src, dst_h: int, dst_w: int) -> np.ndarray:
    """Align-corners bilinear resize of a score grid to a larger grid."""
    g = np.asarray(src, dtype=np.float64)
    if g.ndim != 2:
        raise ShapeError(f"expected a 2-D grid, got {g.shape}")
    h, w = g.shape
    if dst_h < h or dst_w < w:
        raise ShapeError(f"cannot downscale {h}x{w} to {dst_h}x{dst_w}")
    if (dst_h, dst_w) == (h, w):
        return g.copy()
    return _kernels.upsample(g, dst_h, dst_w)


def holistic_scores(global_sub, local, alpha: float) -> np.ndarray:
    g = np.asarray(global_sub, dtype=np.float64)
    loc = np.asarray(local, dtype=np.float64)
    if g.shape != loc.shape:
        raise ShapeError(f"global {g.shape} and local {loc.shape} grids differ")
    if not 0.0 <= alpha <= 1.0:
        raise RangeError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * g + (1.0 - alpha) * loc


def topk_select(scores, k: int) -> np.ndarray:
    """Indices of the ``k`` best scores, sorted ascending.

    Ranking is by descending score; equal scores favour the lower index.
    """
    flat = np.asarray(scores, dtype=np.float64).ravel()
    if not 0 <= k <= flat.size:
        raise RangeError(f"k={k} outside [0, {flat.size}]")
    order = np.argsort(-flat, kind="stable")
    return np.sort(order[:k])


def compress_thumbnail(thumb_scores, ratio: float) -> ViewSelection:
    grid = np.asarray(thumb_scores, dtype=np.float64)
    k = target_count(ratio, grid.size)
    return ViewSelection("thumbnail", ratio, topk_select(grid, k))


def split_submaps(full, layout: CropLayout) -> list[np.ndarray]:
    """Cut a ``(a*h) x (b*w)`` grid into the crops' ``h x w`` blocks."""
    h, w = layout.patch_rows, layout.patch_cols
    return [
        full[r * h:(r + 1) * h, c * w:(c + 1) * w]
        for r in range(layout.rows)
        for c in range(layout.cols)
    ]


def _minmax(g: np.ndarray) -> np.ndarray:
    lo, hi = g.min(), g.max()
    if hi - lo <= 0.0:
        return np.zeros_like(g)
    return (g - lo) / (hi - lo)


def compress_image(thumb_scores, crop_local_scores: Sequence, layout: CropLayout,
                   cfg: CompressionConfig, normalize: bool | None = None) -> SelectionResult:
    """Select thumbnail and crop tokens for one image.

    ``normalize`` min-max scales global and local grids per view before
    blending; by default it is on for every scorer except cls_attention,
    whose softmax maps are already on a common scale.
    """
    thumb = np.asarray(thumb_scores, dtype=np.float64)
    h, w = layout.patch_rows, layout.patch_cols
    with _stage("input"):
        if thumb.shape != (h, w):
            raise ShapeError(f"thumbnail grid {thumb.shape} does not match layout {h}x{w}")
        if len(crop_local_scores) != layout.n_crops:
            raise ShapeError(
                f"layout {layout.rows}x{layout.cols} needs {layout.n_crops} crop grids, "
                f"got {len(crop_local_scores)}"
            )
        locals_ = [np.asarray(c, dtype=np.float64) for c in crop_local_scores]
        for j, c in enumerate(locals_):
            if c.shape != (h, w):
                raise ShapeError(f"crop {j} grid {c.shape} does not match {h}x{w}")
    if normalize is None:
        normalize = cfg.scorer != "cls_attention"

    with _stage("thumbnail"):
        thumb_sel = compress_thumbnail(thumb, cfg.retention_ratio)
    with _stage("budget"):
        plan = plan_image_budgets(thumb, layout, cfg)
    with _stage("upsample"):
        subs = split_submaps(bilinear_upsample(thumb, layout.rows * h, layout.cols * w), layout)
    crops = []
    for j in range(layout.n_crops):
        with _stage(f"crop {j}"):
            g, loc = subs[j], locals_[j]
            if normalize:
                g, loc = _minmax(g), _minmax(loc)
            s = holistic_scores(g, loc, cfg.alpha)
            crops.append(ViewSelection(j, float(plan.ratios[j]), topk_select(s, int(plan.counts[j]))))
    return SelectionResult(thumb_sel, crops, plan)
