"""Analytic FLOPs of the LLM prefill and decode stages over visual tokens.

Text and system tokens are left out; visual tokens dominate the sequence.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelDims:
    hidden: int
    ffn: int
    layers: int
    tokens: int

    def __post_init__(self):
        if self.hidden <= 0 or self.ffn <= 0 or self.layers <= 0:
            raise ValueError("hidden, ffn and layers must be positive")
        if self.tokens < 0:
            raise ValueError("tokens must be non-negative")


def _prefill_layer(t: float, d: float, m: float) -> float:
    return 8 * t * d * d + 4 * t * t * d + 6 * t * d * m


def prefill_flops(dims: ModelDims, tokens: float | None = None) -> float:
    """Whole-model prefill cost; ``tokens`` overrides ``dims.tokens`` (may be fractional)."""
    t = dims.tokens if tokens is None else tokens
    return float(dims.layers) * _prefill_layer(float(t), float(dims.hidden), float(dims.ffn))


def decode_flops(dims: ModelDims) -> float:
    """Per generated token, with ``dims.tokens`` entries in the KV cache."""
    t, d, m = float(dims.tokens), float(dims.hidden), float(dims.ffn)
    return float(dims.layers) * (8 * d * d + 4 * t * d + 6 * t * d * m)


def reduction_ratio(dims: ModelDims, ratio: float) -> float:
    """Fraction of prefill FLOPs removed by keeping ``ratio`` of the visual tokens."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    t, d, m = float(dims.tokens), float(dims.hidden), float(dims.ffn)
    return 1.0 - ratio * (8 * d + 4 * ratio * t + 6 * m) / (8 * d + 4 * t + 6 * m)
