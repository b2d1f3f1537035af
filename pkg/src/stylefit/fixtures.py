"""Deterministic synthetic images and planted-style fixtures.

Everything here is generated from seeded PCG64 streams so tests and the
acceptance suite never depend on binary assets. Two content families:
free-form scenes (gradients, blocks, rings, smooth cosine fields) for
general-purpose tests, and flat-patch "palette" cards for tests that
want large uniform regions.

The planted fixtures pair a content image with a reference produced by
running the builtin chain at a known assignment. Their seeds are frozen
(see ``RECOVERY_SEEDS``): each candidate seed pair was accepted only if
the fixture is well conditioned — the identity-trial distance is large
enough (>= 2.5) that a relative-error target is meaningful, and the
bundle mixes targets an initial coarse sweep nearly solves with targets
that require genuine local refinement. The selection procedure is
documented in the repo's design notes.
"""

from __future__ import annotations

import numpy as np

from .image import ImageBuf, quantize
from .optimize import make_rng
from .transforms import LUMA_WEIGHTS, apply_chain, builtin_space, presets

KINDS = ("waves", "sunset", "blocks", "rings", "meadow")


def _normalize(field: np.ndarray) -> np.ndarray:
    lo, hi = field.min(), field.max()
    if hi - lo < 1e-12:
        return np.zeros_like(field)
    return (field - lo) / (hi - lo)


def _cosine_field(rng: np.random.Generator, size: int, n_waves: int = 6) -> np.ndarray:
    yy, xx = np.meshgrid(
        np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij"
    )
    out = np.empty((size, size, 3))
    for c in range(3):
        acc = np.zeros((size, size))
        for _ in range(n_waves):
            fx, fy = rng.uniform(-3.0, 3.0, 2)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            acc += rng.uniform(0.5, 1.0) * np.cos(2.0 * np.pi * (fx * xx + fy * yy) + phase)
        out[..., c] = _normalize(acc)
    return out


def _gradient(size: int, top, bottom) -> np.ndarray:
    t = np.linspace(0.0, 1.0, size)[:, None, None]
    rows = (1.0 - t) * np.asarray(top) + t * np.asarray(bottom)
    return np.broadcast_to(rows, (size, size, 3)).copy()


def _disk_mask(size: int, cy: float, cx: float, radius: float) -> np.ndarray:
    yy, xx = np.meshgrid(
        np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij"
    )
    return ((yy - cy) ** 2 + (xx - cx) ** 2) < radius**2


def _scene(kind: str, rng: np.random.Generator, size: int) -> np.ndarray:
    if kind == "waves":
        return _cosine_field(rng, size)
    if kind == "sunset":
        img = _gradient(size, rng.uniform(0.4, 0.9, 3), rng.uniform(0.0, 0.4, 3))
        sun = _disk_mask(size, rng.uniform(0.2, 0.4), rng.uniform(0.3, 0.7), 0.12)
        img[sun] = (1.0, 0.85, 0.55)
        img[int(size * 0.62) :, :, :] *= 0.6
        return img
    if kind == "blocks":
        img = np.empty((size, size, 3))
        cells = 4
        step = size // cells
        for gy in range(cells):
            for gx in range(cells):
                color = rng.uniform(0.05, 0.95, 3)
                img[gy * step : (gy + 1) * step, gx * step : (gx + 1) * step] = color
        return img
    if kind == "rings":
        yy, xx = np.meshgrid(
            np.linspace(-1.0, 1.0, size), np.linspace(-1.0, 1.0, size), indexing="ij"
        )
        r = np.sqrt(yy**2 + xx**2)
        base = 0.5 + 0.5 * np.cos(2.0 * np.pi * r * rng.uniform(2.0, 4.0))
        tint = rng.uniform(0.3, 1.0, 3)
        return base[..., None] * tint
    if kind == "meadow":
        img = _cosine_field(rng, size, n_waves=4)
        img[..., 1] = np.clip(img[..., 1] * 0.6 + 0.35, 0.0, 1.0)  # green bias
        sky = _gradient(size, (0.45, 0.65, 0.9), (0.45, 0.65, 0.9))
        split = int(size * 0.35)
        img[:split] = 0.3 * img[:split] + 0.7 * sky[:split]
        return img
    raise KeyError(f"unknown scene kind {kind!r}")


def content_image(kind: str, seed: int, size: int = 128) -> ImageBuf:
    """A deterministic synthetic scene, already 8-bit quantized."""
    rng = make_rng(seed)
    img = _scene(kind, rng, size)
    img = img + rng.normal(0.0, 0.02, img.shape)  # mild grain for texture stats
    return quantize(ImageBuf(np.clip(img, 0.0, 1.0)))


def palette_image(seed: int, size: int = 128, cells: int = 4) -> ImageBuf:
    """Flat color patches whose luma values sit at histogram bin centers.

    Mid-bin placement means small tonal errors move no histogram mass,
    so the style distance stays smooth near an exact match instead of
    being dominated by bin-crossing noise.
    """
    rng = make_rng(seed)
    weights = np.array(LUMA_WEIGHTS)
    img = np.empty((size, size, 3))
    step = size // cells
    bins = rng.permutation(16)[: cells * cells]
    k = 0
    for gy in range(cells):
        for gx in range(cells):
            target = (bins[k] + 0.5) / 16.0
            k += 1
            color = rng.uniform(0.1, 0.9, 3)
            lum = float(weights @ color)
            color = np.clip(color * (target / max(lum, 1e-6)), 0.0, 1.0)
            color = np.clip(color + (target - float(weights @ color)), 0.0, 1.0)
            img[gy * step : (gy + 1) * step, gx * step : (gx + 1) * step] = color
    img += rng.normal(0.0, 0.003, img.shape)
    return quantize(ImageBuf(np.clip(img, 0.0, 1.0)))


# Frozen (content_seed, style_seed) pairs for the planted-recovery bundle.
# Pairs 0-5 are near-sweep targets; pairs 6-9 need refinement beyond the
# sweep (their best sweep probe still sits 5.5-7% above the identity gap).
RECOVERY_SEEDS = (
    (810, 48000),
    (211, 42001),
    (412, 44002),
    (113, 41003),
    (814, 48004),
    (715, 47005),
    (13116, 171006),
    (17, 40007),
    (2518, 65008),
    (6319, 103009),
)


def _filter_names() -> list[str]:
    return [p.name for p in presets() if p.name != "none"]


def planted_style(style_seed: int) -> dict:
    """A reproducible strong style: one filter near full strength plus vignetting."""
    rng = make_rng(style_seed)
    names = _filter_names()
    style = {s.name: s.identity for s in builtin_space()}
    style["filter"] = names[int(rng.integers(len(names)))]
    style["filter_strength"] = float(rng.uniform(0.85, 1.0))
    style["vignette"] = float(rng.uniform(0.5, 0.65))
    return style


def planted_flat_style(style_seed: int) -> dict:
    """Like :func:`planted_style` but without vignetting.

    Every active stage acts per-pixel, so the style commutes with any
    spatial rearrangement of the content — the right family for fixtures
    whose reference comes from a differently framed image.
    """
    rng = make_rng(style_seed)
    names = _filter_names()
    style = {s.name: s.identity for s in builtin_space()}
    style["filter"] = names[int(rng.integers(len(names)))]
    style["filter_strength"] = float(rng.uniform(0.85, 1.0))
    return style


def recovery_fixture(index: int, size: int = 128):
    """(content, reference, planted assignment) with reference = chain(content)."""
    content_seed, style_seed = RECOVERY_SEEDS[index]
    content = content_image("waves", seed=content_seed, size=size)
    style = planted_style(style_seed)
    reference = quantize(apply_chain(content, style))
    return content, reference, style


def cross_content_fixture(index: int, size: int = 128):
    """(content, reference, planted assignment) with the reference styled
    from a differently framed sibling of the content.

    The sibling is the same scene cyclically shifted by 32-96 pixels, so
    the two images share global statistics but no pixel alignment; the
    planted style is per-pixel only (no vignette), so the reference style
    is reachable from the shifted content.
    """
    content = content_image("waves", seed=10 + index, size=size)
    rng = make_rng(70_000 + index)
    dy = int(rng.integers(32, 96))
    dx = int(rng.integers(32, 96))
    sibling = quantize(ImageBuf(np.roll(content.pixels, (dy, dx), axis=(0, 1)).copy()))
    style = planted_flat_style(60_000 + index)
    reference = quantize(apply_chain(sibling, style))
    return content, reference, style


def _main():
    import pathlib
    import sys

    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures-out")
    out.mkdir(parents=True, exist_ok=True)
    from .image import save_image

    for i in range(len(RECOVERY_SEEDS)):
        content, reference, _ = recovery_fixture(i)
        save_image(content, out / f"content-{i}.png")
        save_image(reference, out / f"reference-{i}.png")
    print(f"wrote {len(RECOVERY_SEEDS)} fixture pairs to {out}")


if __name__ == "__main__":
    _main()


__all__ = [
    "KINDS",
    "RECOVERY_SEEDS",
    "content_image",
    "palette_image",
    "planted_style",
    "planted_flat_style",
    "recovery_fixture",
    "cross_content_fixture",
    "builtin_space",
]
