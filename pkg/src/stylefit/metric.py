"""Content-invariant style descriptors and distances.

The built-in descriptor is a 30-vector of global image statistics:

  block 1 (9): per-channel mean, per-channel std, per-channel skewness
  block 2 (16): luma histogram, 16 uniform bins over [0, 1], sum 1
  block 3 (2): mean and std of per-pixel chroma span (max - min channel)
  block 4 (3): mean |response| of luma under 3x3 Sobel-x, Sobel-y,
               and Laplacian kernels with replicate padding

Blocks 1-3 are bit-exactly invariant under any spatial permutation of
pixels, and the full vector is bit-exactly invariant under horizontal
and vertical flips. Two implementation choices make this literal rather
than approximate: every reduction sorts its operands before a pairwise
sum, and the filter responses are computed in flip-symmetric arithmetic
order (so a flip negates or permutes responses exactly, never reassociates
a sum). Constant inputs are detected with an exact min == max comparison,
so a constant channel (or chroma-span field) reports literal zero spread
and skew rather than rounding residue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import ImageBuf
from .transforms import LUMA_WEIGHTS, luma

BUILTIN_METRIC_ID = "builtin-stats30/1"
BUILTIN_LENGTH = 30
HIST_BINS = 16

# Block boundaries within the builtin descriptor (start, end).
BLOCK_MOMENTS = (0, 9)
BLOCK_HISTOGRAM = (9, 25)
BLOCK_SATURATION = (25, 27)
BLOCK_TEXTURE = (27, 30)


class MetricError(ValueError):
    """Descriptor mismatch or unusable input."""


@dataclass(frozen=True)
class StyleDescriptor:
    """Fixed-length style summary tagged with the metric that produced it."""

    values: tuple[float, ...]
    metric_id: str

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not all(np.isfinite(v) for v in vals):
            raise MetricError("descriptor entries must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)


def _ordered_sum(values: np.ndarray) -> float:
    # Sorting first makes the sum a function of the value multiset only,
    # hence bit-stable under any reordering of pixels.
    return float(np.sum(np.sort(values, axis=None)))


def _ordered_mean(values: np.ndarray) -> float:
    return _ordered_sum(values) / values.size


def _moments(channel: np.ndarray) -> tuple[float, float, float]:
    lo = float(np.min(channel))
    if lo == float(np.max(channel)):
        # Constant input: report literal zeros. Going through the mean
        # instead can launder a rounded mean into a spurious +-1 skew.
        return lo, 0.0, 0.0
    mean = _ordered_mean(channel)
    dev = channel - mean
    var = _ordered_mean(dev * dev)
    skew = _ordered_mean(dev * dev * dev) / var**1.5
    return mean, float(np.sqrt(var)), skew


def _luma_histogram(lum: np.ndarray) -> list[float]:
    scaled = np.clip(lum, 0.0, 1.0) * HIST_BINS
    idx = np.minimum(scaled.astype(np.int64), HIST_BINS - 1)  # last bin closed
    counts = np.bincount(idx.ravel(), minlength=HIST_BINS)
    total = lum.size
    return [int(c) / total for c in counts]


def _texture_energies(lum: np.ndarray) -> tuple[float, float, float]:
    p = np.pad(lum, 1, mode="edge")
    # Vertical 1-2-1 smoothing, written (top + bottom) + 2*mid so a vertical
    # flip reproduces the exact same float per column.
    colsum = (p[:-2, :] + p[2:, :]) + 2.0 * p[1:-1, :]
    sobel_x = colsum[:, 2:] - colsum[:, :-2]
    rowsum = (p[:, :-2] + p[:, 2:]) + 2.0 * p[:, 1:-1]
    sobel_y = rowsum[2:, :] - rowsum[:-2, :]
    up, down = p[:-2, 1:-1], p[2:, 1:-1]
    left, right = p[1:-1, :-2], p[1:-1, 2:]
    lap = ((up + down) + (left + right)) - 4.0 * p[1:-1, 1:-1]
    return (
        _ordered_mean(np.abs(sobel_x)),
        _ordered_mean(np.abs(sobel_y)),
        _ordered_mean(np.abs(lap)),
    )


def encode_builtin(img: ImageBuf) -> StyleDescriptor:
    """Compute the builtin 30-dim style descriptor of an image."""
    if img.height < 3 or img.width < 3:
        raise MetricError(
            f"image must be at least 3x3 for the builtin metric, got {img.width}x{img.height}"
        )
    p = img.pixels
    means, stds, skews = [], [], []
    for c in range(3):
        m, s, k = _moments(p[:, :, c])
        means.append(m)
        stds.append(s)
        skews.append(k)

    lum = luma(p)
    hist = _luma_histogram(lum)

    span = np.max(p, axis=2) - np.min(p, axis=2)
    span_mean, span_std, _ = _moments(span)

    values = (
        means + stds + skews + hist + [span_mean, span_std]
        + list(_texture_energies(lum))
    )
    return StyleDescriptor(tuple(values), BUILTIN_METRIC_ID)


def distance(
    e1: StyleDescriptor,
    e2: StyleDescriptor,
    norm: str = "l1",
    weights=None,
) -> float:
    """Weighted L1 (default) or L2 distance between two descriptors."""
    if e1.metric_id != e2.metric_id:
        raise MetricError(f"metric_id mismatch: {e1.metric_id!r} vs {e2.metric_id!r}")
    if len(e1) != len(e2):
        raise MetricError(f"descriptor length mismatch: {len(e1)} vs {len(e2)}")
    a, b = e1.as_array(), e2.as_array()
    if weights is None:
        w = np.ones(len(e1))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(e1),):
            raise MetricError(f"weights length {w.size} does not match descriptor length {len(e1)}")
        if (w < 0).any() or not np.isfinite(w).all():
            raise MetricError("weights must be finite and >= 0")
    diff = a - b
    if norm == "l1":
        return float(np.sum(w * np.abs(diff)))
    if norm == "l2":
        return float(np.sqrt(np.sum(w * diff * diff)))
    raise MetricError(f"unknown norm {norm!r}: expected 'l1' or 'l2'")


def descriptor_to_obj(desc: StyleDescriptor) -> dict:
    return {"metric_id": desc.metric_id, "values": list(desc.values)}


def descriptor_from_obj(obj: dict) -> StyleDescriptor:
    try:
        return StyleDescriptor(tuple(obj["values"]), obj["metric_id"])
    except (KeyError, TypeError) as exc:
        raise MetricError(f"malformed descriptor object: {exc}") from exc


# Luma convention shared with the transform chain; re-exported for docs/tests.
__all__ = [
    "BUILTIN_LENGTH",
    "BUILTIN_METRIC_ID",
    "LUMA_WEIGHTS",
    "MetricError",
    "StyleDescriptor",
    "descriptor_from_obj",
    "descriptor_to_obj",
    "distance",
    "encode_builtin",
]
