"""Thumbnail + crops decomposition and the thumbnail-to-crop correspondence."""
from __future__ import annotations

from dataclasses import dataclass

# (rows, cols) grid templates for dynamic cropping
TEMPLATES: tuple[tuple[int, int], ...] = (
    (2, 2), (1, 2), (1, 3), (1, 4), (2, 1), (3, 1), (4, 1),
)


@dataclass(frozen=True)
class CropLayout:
    rows: int
    cols: int
    patch_rows: int
    patch_cols: int

    def __post_init__(self):
        for name in ("rows", "cols", "patch_rows", "patch_cols"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def n_crops(self) -> int:
        return self.rows * self.cols

    @property
    def tokens_per_view(self) -> int:
        return self.patch_rows * self.patch_cols


@dataclass(frozen=True)
class Region:
    """Half-open rectangle of patch indices."""

    row0: int
    col0: int
    row1: int
    col1: int

    def slices(self) -> tuple[slice, slice]:
        return slice(self.row0, self.row1), slice(self.col0, self.col1)

    @property
    def size(self) -> int:
        return (self.row1 - self.row0) * (self.col1 - self.col0)


def select_grid(width: float, height: float, base: int = 336,
                patch_rows: int = 24, patch_cols: int = 24) -> CropLayout:
    """Pick the crop template for an image of ``width`` x ``height`` pixels.

    Each template (a, b) offers a canvas of ``base*b`` x ``base*a`` pixels.
    The image is fitted with its aspect ratio preserved.  The winner keeps
    the most of the original resolution (scaled area capped at the original
    area); remaining ties go to less wasted canvas, then fewer crops, then
    fewer rows.
    """
    if width <= 0 or height <= 0 or base <= 0:
        raise ValueError("width, height and base must be positive")
    orig = width * height
    best_key, best = None, None
    for a, b in TEMPLATES:
        cw, ch = base * b, base * a
        scale = min(cw / width, ch / height)
        fitted = (width * scale) * (height * scale)
        effective = min(fitted, orig)
        key = (-effective, cw * ch - fitted, a * b, a)
        if best_key is None or key < best_key:
            best_key, best = key, (a, b)
    return CropLayout(best[0], best[1], patch_rows, patch_cols)


def crop_region_of(layout: CropLayout, j: int) -> Region:
    """Thumbnail sub-rectangle covered by crop ``j`` (row-major crop order)."""
    a, b = layout.rows, layout.cols
    if not 0 <= j < a * b:
        raise IndexError(f"crop index {j} out of range for {a}x{b} layout")
    h, w = layout.patch_rows, layout.patch_cols
    r, c = divmod(j, b)
    return Region(r * h // a, c * w // b, (r + 1) * h // a, (c + 1) * w // b)


def crop_regions(layout: CropLayout) -> list[Region]:
    return [crop_region_of(layout, j) for j in range(layout.n_crops)]


def parse_layout(text: str) -> tuple[int, int]:
    """Parse ``"<rows>x<cols>"``."""
    try:
        a, b = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"layout must look like 2x2, got {text!r}") from None
    if a <= 0 or b <= 0:
        raise ValueError(f"layout dimensions must be positive, got {text!r}")
    return a, b
