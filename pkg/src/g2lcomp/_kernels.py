"""Inner-loop kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and ``G2L_DISABLE_NUMBA``
is unset (or set to ``0``).  Both paths are importable by name so tests and
the benchmark can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np

NORM_FLOOR = 1e-12


def _numba_requested() -> bool:
    return os.environ.get("G2L_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("disabled by G2L_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    HAVE_NUMBA = False
else:
    HAVE_NUMBA = True


def _src_coords(n_src: int, n_dst: int) -> np.ndarray:
    if n_src == 1 or n_dst == 1:
        return np.zeros(n_dst)
    # (i*(n_src-1)) is an exact integer, so one rounding per coordinate
    return np.arange(n_dst, dtype=np.float64) * (n_src - 1) / (n_dst - 1)


def upsample_numpy(src: np.ndarray, dst_h: int, dst_w: int) -> np.ndarray:
    h, w = src.shape
    sy = _src_coords(h, dst_h)
    sx = _src_coords(w, dst_w)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    a = src[y0][:, x0]
    b = src[y0][:, x1]
    c = src[y1][:, x0]
    d = src[y1][:, x1]
    # lerp form keeps constant inputs and corners exact
    top = a + fx * (b - a)
    bot = c + fx * (d - c)
    return top + fy * (bot - top)


def neg_cosine_numpy(x: np.ndarray, ref: np.ndarray) -> np.ndarray:
    dots = x @ ref
    norms = np.sqrt(np.einsum("ij,ij->i", x, x)) * np.sqrt(ref @ ref)
    out = np.zeros(x.shape[0])
    ok = norms >= NORM_FLOOR
    out[ok] = -np.clip(dots[ok] / norms[ok], -1.0, 1.0)
    return out


def offdiag_row_mean_numpy(attn: np.ndarray) -> np.ndarray:
    n = attn.shape[0]
    return (attn.sum(axis=1) - np.diagonal(attn)) / (n - 1)


if HAVE_NUMBA:

    @njit(cache=False)
    def _upsample_jit(src, dst_h, dst_w):
        h, w = src.shape
        out = np.empty((dst_h, dst_w))
        for y in range(dst_h):
            if h == 1 or dst_h == 1:
                sy = 0.0
            else:
                sy = (y * (h - 1)) / (dst_h - 1)
            y0 = int(np.floor(sy))
            y1 = min(y0 + 1, h - 1)
            fy = sy - y0
            for x in range(dst_w):
                if w == 1 or dst_w == 1:
                    sx = 0.0
                else:
                    sx = (x * (w - 1)) / (dst_w - 1)
                x0 = int(np.floor(sx))
                x1 = min(x0 + 1, w - 1)
                fx = sx - x0
                top = src[y0, x0] + fx * (src[y0, x1] - src[y0, x0])
                bot = src[y1, x0] + fx * (src[y1, x1] - src[y1, x0])
                out[y, x] = top + fy * (bot - top)
        return out

    @njit(cache=False)
    def _neg_cosine_jit(x, ref, floor):
        n, d = x.shape
        rn = 0.0
        for k in range(d):
            rn += ref[k] * ref[k]
        rn = np.sqrt(rn)
        out = np.zeros(n)
        for i in range(n):
            dot = 0.0
            xn = 0.0
            for k in range(d):
                dot += x[i, k] * ref[k]
                xn += x[i, k] * x[i, k]
            denom = np.sqrt(xn) * rn
            if denom >= floor:
                c = dot / denom
                if c > 1.0:
                    c = 1.0
                elif c < -1.0:
                    c = -1.0
                out[i] = -c
        return out

    @njit(cache=False)
    def _offdiag_row_mean_jit(attn):
        n = attn.shape[0]
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            for j in range(n):
                if j != i:
                    s += attn[i, j]
            out[i] = s / (n - 1)
        return out

    def upsample_numba(src, dst_h, dst_w):
        return _upsample_jit(np.ascontiguousarray(src, dtype=np.float64), int(dst_h), int(dst_w))

    def neg_cosine_numba(x, ref):
        return _neg_cosine_jit(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(ref, dtype=np.float64),
            NORM_FLOOR,
        )

    def offdiag_row_mean_numba(attn):
        return _offdiag_row_mean_jit(np.ascontiguousarray(attn, dtype=np.float64))

    upsample = upsample_numba
    neg_cosine = neg_cosine_numba
    offdiag_row_mean = offdiag_row_mean_numba
    BACKEND = "numba"
else:
    upsample = upsample_numpy
    neg_cosine = neg_cosine_numpy
    offdiag_row_mean = offdiag_row_mean_numpy
    BACKEND = "numpy"
