"""Per-token importance scorers.

Every scorer returns an ``(h, w)`` float64 grid in row-major token order.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ShapeError


def _check_grid(n: int, h: int, w: int) -> None:
    if h <= 0 or w <= 0 or n != h * w:
        raise ShapeError(f"{n} tokens do not fill a {h}x{w} grid")


def cls_attention_scores(q_cls, keys, h: int, w: int) -> np.ndarray:
    """Softmax of scaled [CLS]-query/key dot products over the N patch tokens."""
    q = np.asarray(q_cls, dtype=np.float64)
    k = np.asarray(keys, dtype=np.float64)
    if q.ndim != 1 or k.ndim != 2 or k.shape[1] != q.shape[0] or q.shape[0] < 1:
        raise ShapeError(f"query {q.shape} incompatible with keys {k.shape}")
    _check_grid(k.shape[0], h, w)
    logits = k @ q / np.sqrt(q.shape[0])
    e = np.exp(logits - logits.max())
    return (e / e.sum()).reshape(h, w)


def neg_patch_attention_scores(attn, h: int, w: int) -> np.ndarray:
    """Negated mean attention each token pays to the other tokens.

    Tokens that spread their attention over neighbours are treated as
    replaceable, so a low mean off-diagonal attention ranks high.
    """
    a = np.asarray(attn, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"attention map must be square, got {a.shape}")
    if a.shape[0] < 2:
        raise ShapeError("need at least two tokens")
    _check_grid(a.shape[0], h, w)
    return -_kernels.offdiag_row_mean(a).reshape(h, w)


def neg_global_mean_similarity_scores(tokens, h: int, w: int) -> np.ndarray:
    """Negated cosine similarity of each token to the mean token.

    A token whose norm product with the mean falls below 1e-12 scores 0.
    """
    x = np.asarray(tokens, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"tokens must be N x D, got {x.shape}")
    _check_grid(x.shape[0], h, w)
    return _kernels.neg_cosine(x, x.mean(axis=0)).reshape(h, w)


SCORER_FUNCS = {
    "cls_attention": cls_attention_scores,
    "neg_patch_attention": neg_patch_attention_scores,
    "neg_global_mean_sim": neg_global_mean_similarity_scores,
}
