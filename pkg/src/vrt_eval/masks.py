"""Binary masks, the RLE codec, IoU / box geometry, and mask dedup.

A mask is an H x W set of foreground pixels. The serialization is
run-length encoding in column-major scan order where the first run
counts background pixels (a leading 0 means the scan starts on
foreground). The JSON form is ``{"size": [H, W], "counts": [int, ...]}``.

All functions here are pure and operate on immutable inputs, so they are
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, MalformedRleError, ShapeMismatchError


class BinaryMask:
    """An H x W binary mask backed by a read-only boolean array.

    The constructor accepts anything ``np.asarray`` does and avoids
    copying when the input is already a C-contiguous boolean array (the
    stored array is a read-only view in that case, so later writes to the
    original buffer are visible; callers on hot paths rely on this).
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.dtype != np.bool_:
            arr = arr.astype(bool)
        if arr.ndim != 2:
            raise ShapeMismatchError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeMismatchError(f"mask dimensions must be >= 1, got {arr.shape}")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        view = arr.view()
        view.setflags(write=False)
        self._pixels = view

    @classmethod
    def zeros(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_box(cls, box: "Box", height: int, width: int) -> "BinaryMask":
        """Mask with the (inclusive) box region filled."""
        if box.row_max >= height or box.col_max >= width:
            raise ShapeMismatchError(f"box {box} exceeds image {height}x{width}")
        arr = np.zeros((height, width), dtype=bool)
        arr[box.row_min : box.row_max + 1, box.col_min : box.col_max + 1] = True
        return cls(arr)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._pixels.shape

    @property
    def area(self) -> int:
        """Count of foreground pixels."""
        return int(self._pixels.sum())

    def is_empty(self) -> bool:
        return not self._pixels.any()

    def content_key(self) -> tuple[int, bytes]:
        """Order key that depends only on pixel content: (-area, raw bytes)."""
        return (-self.area, self._pixels.tobytes())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self):
        return hash((self.shape, self._pixels.tobytes()))

    def __repr__(self):
        return f"BinaryMask({self.height}x{self.width}, area={self.area})"


@dataclass(frozen=True)
class RleCounts:
    """Canonical column-major run-length counts for one mask.

    The first run counts background pixels; runs alternate from there. A
    leading zero is legal (mask starts on foreground); an interior zero
    run is not, and neither are negative runs or counts that do not sum
    to height * width.
    """

    height: int
    width: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise MalformedRleError(
                f"size must be >= 1x1, got {self.height}x{self.width}"
            )
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not self.counts:
            raise MalformedRleError("counts may not be empty")
        if any(c < 0 for c in self.counts):
            raise MalformedRleError(f"negative run length in {self.counts}")
        if any(c == 0 for c in self.counts[1:]):
            raise MalformedRleError(f"interior zero-length run in {self.counts}")
        total = sum(self.counts)
        if total != self.height * self.width:
            raise MalformedRleError(
                f"runs sum to {total}, expected {self.height * self.width} "
                f"for a {self.height}x{self.width} mask"
            )

    def to_json(self) -> dict:
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj: dict) -> "RleCounts":
        try:
            h, w = obj["size"]
            counts = obj["counts"]
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedRleError(f"bad RLE object: {obj!r}") from err
        return cls(int(h), int(w), tuple(counts))


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel box with inclusive bounds."""

    row_min: int
    col_min: int
    row_max: int
    col_max: int

    def __post_init__(self):
        if self.row_min < 0 or self.col_min < 0:
            raise ValueError(f"box indices must be non-negative: {self}")
        if self.row_min > self.row_max or self.col_min > self.col_max:
            raise ValueError(f"box min exceeds max: {self}")

    @property
    def area(self) -> int:
        return (self.row_max - self.row_min + 1) * (self.col_max - self.col_min + 1)


def decode_rle(rle: RleCounts) -> BinaryMask:
    """Expand run counts into a mask, column-major."""
    values = np.zeros(len(rle.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, rle.counts)
    return BinaryMask(flat.reshape((rle.height, rle.width), order="F"))


def encode_rle(mask: BinaryMask) -> RleCounts:
    """Encode a mask into canonical column-major run counts."""
    flat = mask.pixels.flatten(order="F")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return RleCounts(mask.height, mask.width, tuple(counts))


def _require_same_shape(a: BinaryMask, b: BinaryMask):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")


def iou_flagged(a: BinaryMask, b: BinaryMask) -> tuple[float, bool]:
    """IoU of two same-shape masks plus a degenerate-union flag.

    When both masks are empty the union is empty; the score is defined as
    0.0 and the flag is True so empty predictions never match anything.
    """
    _require_same_shape(a, b)
    inter = int(np.count_nonzero(a.pixels & b.pixels))
    union = int(np.count_nonzero(a.pixels | b.pixels))
    if union == 0:
        return 0.0, True
    return inter / union, False


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union in [0, 1]; 0.0 when both masks are empty."""
    return iou_flagged(a, b)[0]


def tight_box(mask: BinaryMask) -> Box:
    """Minimal box containing every foreground pixel."""
    if mask.is_empty():
        raise EmptyMaskError("tight_box needs at least one foreground pixel")
    rows = np.flatnonzero(mask.pixels.any(axis=1))
    cols = np.flatnonzero(mask.pixels.any(axis=0))
    return Box(int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1]))


def box_iou(a: Box, b: Box) -> float:
    """IoU of two boxes using inclusive pixel areas."""
    ih = min(a.row_max, b.row_max) - max(a.row_min, b.row_min) + 1
    iw = min(a.col_max, b.col_max) - max(a.col_min, b.col_min) + 1
    if ih <= 0 or iw <= 0:
        return 0.0
    inter = ih * iw
    return inter / (a.area + b.area - inter)


def dedup_masks(masks: list[BinaryMask], threshold: float = 0.5) -> list[int]:
    """Indices of masks kept after duplicate removal.

    Masks are visited largest-first (ties toward the lower index); a mask
    is dropped when it overlaps an already-kept mask with IoU above
    ``threshold``, so every removed mask has a kept mask at least as
    large. The returned indices are ascending; re-applying to the kept
    set is a no-op.
    """
    for m in masks[1:]:
        _require_same_shape(masks[0], m)
    order = sorted(range(len(masks)), key=lambda i: (-masks[i].area, i))
    kept: list[int] = []
    for i in order:
        if all(iou(masks[i], masks[j]) <= threshold for j in kept):
            kept.append(i)
    return sorted(kept)
