"""RGB image buffers and 8-bit PNG I/O.

Pixels live in a read-only float64 array of shape (height, width, 3) with
channel values in [0, 1]. Loading maps byte k to k/255 exactly; saving
quantizes with round-half-up, so save -> load -> save is byte-stable.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageError(ValueError):
    """Unreadable file, unsupported format, or malformed pixel data."""


class ImageBuf:
    """Immutable H x W RGB image with channels in [0, 1]."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ImageError(f"expected (H, W, 3) pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ImageError("image must be at least 1x1")
        if not np.isfinite(arr).all():
            raise ImageError("pixel values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ImageError("pixel values must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("ImageBuf is immutable")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, ImageBuf) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"ImageBuf({self.width}x{self.height})"


def quantize(img: ImageBuf) -> ImageBuf:
    """Snap channels to the 8-bit grid: round(v*255)/255, round half up.

    This is exactly the value an image takes after a save/load round trip.
    """
    return ImageBuf(to_bytes(img) / 255.0)


def to_bytes(img: ImageBuf) -> np.ndarray:
    """8-bit quantization as a uint8 array (round half up)."""
    return np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)


def from_bytes(data: np.ndarray) -> ImageBuf:
    """Build an ImageBuf from a uint8 (H, W, 3) array; value = byte/255."""
    arr = np.asarray(data)
    if arr.dtype != np.uint8:
        raise ImageError(f"expected uint8 data, got {arr.dtype}")
    return ImageBuf(arr.astype(np.float64) / 255.0)


def load_image(path) -> ImageBuf:
    """Load an 8-bit RGB or RGBA PNG; alpha is dropped."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("RGB", "RGBA"):
                raise ImageError(
                    f"unsupported image mode {im.mode!r} in {path!s}: need 8-bit RGB or RGBA"
                )
            data = np.asarray(im)
    except FileNotFoundError as exc:
        raise ImageError(f"cannot read image {path!s}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise ImageError(f"cannot read image {path!s}: not a decodable image") from exc
    except OSError as exc:
        raise ImageError(f"cannot read image {path!s}: {exc}") from exc
    return from_bytes(data[:, :, :3])


def save_image(img: ImageBuf, path) -> None:
    """Write an 8-bit RGB PNG."""
    Image.fromarray(to_bytes(img), mode="RGB").save(path, format="PNG")


def encode_png(img: ImageBuf) -> bytes:
    """The same 8-bit RGB PNG bytes :func:`save_image` would write."""
    buf = io.BytesIO()
    Image.fromarray(to_bytes(img), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
