"""GCT1 tensor container, JSON configuration and selection manifests.

Container layout (all little-endian)::

    b"GCT1" | u32 ndim | ndim x u32 dims | prod(dims) x f32 payload
"""
from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .errors import ConfigError, DataError, FormatError, IoError

MAGIC = b"GCT1"
_U32 = struct.Struct("<I")

SCORERS = ("cls_attention", "neg_patch_attention", "neg_global_mean_sim")
STRATEGIES = ("uniform", "topk_mean", "softmax_max", "softmax_sum")
ROUNDINGS = ("largest_remainder", "nearest")


def encode_tensor(t) -> bytes:
    arr = np.asarray(t)
    if arr.ndim == 0:
        raise DataError("tensor must have at least one dimension")
    if any(d <= 0 for d in arr.shape):
        raise DataError(f"dims must be positive, got {list(arr.shape)}")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(arr)):
        raise DataError("tensor contains non-finite values")
    head = MAGIC + _U32.pack(arr.ndim) + b"".join(_U32.pack(d) for d in arr.shape)
    return head + arr.tobytes(order="C")


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise FormatError("bad magic, expected GCT1")
    (ndim,) = _U32.unpack_from(buf, 4)
    if ndim == 0:
        raise FormatError("ndim must be at least 1")
    off = 8 + 4 * ndim
    if len(buf) < off:
        raise FormatError("truncated header")
    dims = [_U32.unpack_from(buf, 8 + 4 * i)[0] for i in range(ndim)]
    if any(d == 0 for d in dims):
        raise FormatError(f"zero-sized dimension in {dims}")
    count = math.prod(dims)
    if len(buf) - off != 4 * count:
        raise FormatError(
            f"payload holds {(len(buf) - off) / 4:g} floats, dims {dims} need {count}"
        )
    arr = np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise DataError("tensor contains non-finite values")
    return arr.astype(np.float32)


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    """Load a GCT1 file as a float32 array of the stored shape."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_tensor(buf)


def write_tensor(t, path: str | os.PathLike) -> None:
    buf = encode_tensor(t)
    try:
        with open(path, "wb") as fh:
            fh.write(buf)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


@dataclass(frozen=True)
class CompressionConfig:
    retention_ratio: float
    tau: float = 10.0
    alpha: float = 0.5
    epsilon: float = 1e-8
    scorer: str = "cls_attention"
    strategy: str = "softmax_sum"
    rounding: str = "largest_remainder"
    seed: int = 0

    def __post_init__(self):
        r = self.retention_ratio
        if not (math.isfinite(r) and 0.0 < r <= 1.0):
            raise ConfigError(f"retention_ratio must be in (0, 1], got {r}")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not (math.isfinite(self.alpha) and 0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ConfigError(f"epsilon must be non-negative, got {self.epsilon}")
        for name, allowed in (
            ("scorer", SCORERS),
            ("strategy", STRATEGIES),
            ("rounding", ROUNDINGS),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(
                    f"{name} must be one of {', '.join(allowed)}, got {getattr(self, name)!r}"
                )
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def replace(self, **changes) -> "CompressionConfig":
        return CompressionConfig(**{**asdict(self), **changes})


_REAL_KEYS = ("retention_ratio", "tau", "alpha", "epsilon")
_ENUM_KEYS = ("scorer", "strategy", "rounding")


def config_from_mapping(obj: Any) -> CompressionConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(obj) - set(CompressionConfig.__dataclass_fields__))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "retention_ratio" not in obj:
        raise ConfigError("retention_ratio is required")
    for key in _REAL_KEYS:
        if key in obj and (isinstance(obj[key], bool) or not isinstance(obj[key], (int, float))):
            raise ConfigError(f"{key} must be a number")
    for key in _ENUM_KEYS:
        if key in obj and not isinstance(obj[key], str):
            raise ConfigError(f"{key} must be a string")
    if "seed" in obj and (isinstance(obj["seed"], bool) or not isinstance(obj["seed"], int)):
        raise ConfigError("seed must be an integer")
    kwargs = {k: (float(v) if k in _REAL_KEYS else v) for k, v in obj.items()}
    return CompressionConfig(**kwargs)


def parse_config(text: str | bytes) -> CompressionConfig:
    """Parse a JSON config; missing optional keys take their defaults."""
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return config_from_mapping(obj)


def dumps_manifest(obj: Any) -> str:
    # insertion-ordered keys and repr floats keep output byte-stable
    return json.dumps(obj, ensure_ascii=False, allow_nan=False) + "\n"


def write_manifest(obj: Any, path: str | os.PathLike) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps_manifest(obj))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
