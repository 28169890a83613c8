"""Synthetic scenes, the positional-bias probe and retention-mask rendering."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .budget import aggregate_richness, plan_budgets, region_scores, target_count
from .errors import ConfigError, IoError, RangeError, ShapeError
from .layout import CropLayout
from .selector import split_submaps, topk_select
from .tensor_io import CompressionConfig

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream; vectorised so a block of draws equals the same number of scalar steps."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GOLDEN) & _MASK64
        return z

    def uniform(self, n: int) -> np.ndarray:
        """Floats in [0, 1) from the top 53 bits."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def splitmix64_scalar(state: int) -> tuple[int, int]:
    """One reference step: returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


@dataclass(frozen=True)
class SynthSpec:
    h: int = 8
    w: int = 8
    a: int = 2
    b: int = 2
    D: int = 16
    # (cy, cx, sigma, amplitude) in thumbnail cell units; None draws n_blobs from the seed
    centers: tuple[tuple[float, float, float, float], ...] | None = None
    n_blobs: int = 3
    noise_scale: float = 0.05
    seed: int = 7

    def __post_init__(self):
        for name in ("h", "w", "a", "b", "D"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be non-negative")
        if self.centers is not None:
            object.__setattr__(self, "centers", tuple(tuple(map(float, c)) for c in self.centers))
            for cy, cx, sigma, amp in self.centers:
                if sigma <= 0 or amp <= 0:
                    raise ConfigError("blob sigma and amplitude must be positive")

    @property
    def layout(self) -> CropLayout:
        return CropLayout(self.a, self.b, self.h, self.w)

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("synth spec must be a JSON object")
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**obj)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True, eq=False)
class Fixture:
    spec: SynthSpec
    thumb_scores: np.ndarray       # (h, w)
    crop_tokens: np.ndarray        # (n, h*w, D)
    crop_local_scores: np.ndarray  # (n, h, w)

    @property
    def layout(self) -> CropLayout:
        return self.spec.layout


def _blob_field(ys, xs, centers) -> np.ndarray:
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    out = np.zeros_like(yy)
    for cy, cx, sigma, amp in centers:
        out += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma * sigma))
    return out


def _normalize(g: np.ndarray) -> np.ndarray:
    total = g.sum()
    if total <= 0:
        return np.full_like(g, 1.0 / g.size)
    return g / total


def synthesize(spec: SynthSpec) -> Fixture:
    """Gaussian-saliency scene with thumbnail scores, crop scores and crop tokens.

    Crop cell ``(Y, X)`` of the full-resolution grid sits at thumbnail
    coordinate ``((Y + .5) / a - .5, (X + .5) / b - .5)``, so the same blobs
    drive both views.
    """
    rng = SplitMix64(spec.seed)
    h, w, a, b, D = spec.h, spec.w, spec.a, spec.b, spec.D
    if spec.centers is None:
        u = rng.uniform(4 * spec.n_blobs).reshape(-1, 4)
        centers = [
            (uy * (h - 1), ux * (w - 1), 0.5 + us * max(h, w) / 3.0, 0.5 + ua)
            for uy, ux, us, ua in u
        ]
    else:
        centers = list(spec.centers)

    thumb = _blob_field(np.arange(h, dtype=float), np.arange(w, dtype=float), centers)
    thumb = _normalize(thumb + spec.noise_scale * rng.uniform(h * w).reshape(h, w))

    ys = (np.arange(a * h) + 0.5) / a - 0.5
    xs = (np.arange(b * w) + 0.5) / b - 0.5
    full = _blob_field(ys, xs, centers)
    full = full + spec.noise_scale * rng.uniform(full.size).reshape(full.shape)
    local = np.stack([_normalize(blk) for blk in split_submaps(full, spec.layout)])

    n, N = a * b, h * w
    base = rng.uniform(n * N * D).reshape(n, N, D) * 2.0 - 1.0
    direction = rng.uniform(D) * 2.0 - 1.0
    direction /= max(np.linalg.norm(direction), 1e-12)
    peak = local.reshape(n, N)
    peak = peak / peak.max(axis=1, keepdims=True)
    tokens = base + 4.0 * peak[:, :, None] * direction[None, None, :]
    return Fixture(spec, thumb, tokens, local)


@dataclass(frozen=True, eq=False)
class BiasReport:
    budgets_forward: np.ndarray
    budgets_reversed: np.ndarray
    bias_score: float

    def to_json(self) -> dict:
        return {
            "budgets_forward": [int(x) for x in self.budgets_forward],
            "budgets_reversed": [int(x) for x in self.budgets_reversed],
            "bias_score": float(self.bias_score),
        }


def position_weighted_budgets(n: int, n_tokens: int, ratio: float) -> np.ndarray:
    """Per-crop counts when a flat top-k keeps tokens by sequence position alone."""
    pos = np.arange(n * n_tokens, dtype=np.float64)
    scores = (pos + 1.0) / (pos + 1.0).sum()
    keep = topk_select(scores, target_count(ratio, n_tokens, n))
    return np.bincount(keep // n_tokens, minlength=n)


def probe_bias(scorer_kind: str, fixture: Fixture, cfg: CompressionConfig) -> BiasReport:
    """Compare crop budgets for the crops in given order and in reverse order.

    ``budgets_reversed`` is indexed by input position, so content ``j`` of
    the reversed run sits at position ``n - 1 - j``.
    """
    layout = fixture.layout
    n, N = layout.n_crops, layout.tokens_per_view
    if scorer_kind == "globalcom2":
        s = aggregate_richness(region_scores(fixture.thumb_scores, layout),
                               cfg.strategy, cfg.retention_ratio, N)
        fwd = plan_budgets(s, N, cfg).counts
        rev = plan_budgets(s[::-1], N, cfg).counts
    elif scorer_kind == "position_weighted":
        fwd = position_weighted_budgets(n, N, cfg.retention_ratio)
        rev = position_weighted_budgets(n, N, cfg.retention_ratio)
    else:
        raise ValueError(f"unknown scorer kind {scorer_kind!r}")
    total = int(fwd.sum())
    bias = float(np.abs(fwd - rev[::-1]).sum()) / total if total else 0.0
    return BiasReport(np.asarray(fwd), np.asarray(rev), bias)


def encode_mask(scores, retained) -> bytes:
    grid = np.asarray(scores)
    if grid.ndim != 2:
        raise ShapeError(f"mask needs a 2-D grid, got {grid.shape}")
    h, w = grid.shape
    idx = np.asarray(retained, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= h * w):
        raise RangeError(f"retained index outside [0, {h * w})")
    payload = np.full(h * w, 64, dtype=np.uint8)
    payload[idx] = 255
    return f"P5\n{w} {h}\n255\n".encode("ascii") + payload.tobytes()


def render_mask(scores, retained, path: str | os.PathLike) -> None:
    """Write a binary PGM: kept tokens white (255), dropped tokens grey (64)."""
    buf = encode_mask(scores, retained)
    try:
        with open(path, "wb") as fh:
            fh.write(buf)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
