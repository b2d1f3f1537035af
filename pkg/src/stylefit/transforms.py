"""The built-in parametric photo transform chain.

Eight stages applied in one canonical order (filter, temperature, tint,
brightness, contrast, saturation, gamma, vignette), each clamped to
[0, 1]. Every stage has an identity parameter value under which it is
skipped outright, so the identity assignment is an exact pixel no-op.

Filter presets (tone curves + channel mix matrix) ship in a versioned
JSON data file; see docs/transforms.md for formulas and conventions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator

from .image import ImageBuf
from .params import ParamSpace, ParamSpec, require_valid

# Rec. 601 luma weights, also used by the style metric.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Identifier recorded in result provenance for the in-process chain.
BUILTIN_ENGINE_ID = "builtin-chain/1"

_PRESET_RESOURCE = "filter_presets.json"


class TransformError(ValueError):
    """Invalid assignment or malformed preset data."""


@dataclass(frozen=True)
class FilterPreset:
    """A named look: 3x3 channel mix followed by per-channel tone curves."""

    name: str
    matrix: tuple  # 3x3 nested tuples
    curves: tuple  # ((x, y) control points,) per channel in R, G, B order


def _validate_curve(name: str, channel: str, points) -> tuple:
    pts = tuple((float(x), float(y)) for x, y in points)
    if len(pts) < 2:
        raise TransformError(f"preset {name!r} curve {channel}: need >= 2 control points")
    xs = [x for x, _ in pts]
    ys = [y for _, y in pts]
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise TransformError(f"preset {name!r} curve {channel}: endpoints must be at x=0 and x=1")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise TransformError(f"preset {name!r} curve {channel}: x must be strictly increasing")
    if any(b < a for a, b in zip(ys, ys[1:])) or min(ys) < 0.0 or max(ys) > 1.0:
        raise TransformError(
            f"preset {name!r} curve {channel}: y must be nondecreasing within [0, 1]"
        )
    return pts


def _load_presets() -> tuple[list[FilterPreset], str]:
    raw = resources.files("stylefit.data").joinpath(_PRESET_RESOURCE).read_bytes()
    digest = "sha256:" + hashlib.sha256(raw).hexdigest()
    doc = json.loads(raw)
    if doc.get("format") != "stylefit-presets/1":
        raise TransformError(f"unsupported preset file format {doc.get('format')!r}")
    presets = []
    for entry in doc["presets"]:
        name = entry["name"]
        matrix = tuple(tuple(float(v) for v in row) for row in entry["matrix"])
        if len(matrix) != 3 or any(len(row) != 3 for row in matrix):
            raise TransformError(f"preset {name!r}: matrix must be 3x3")
        curves = tuple(_validate_curve(name, ch, entry["curves"][ch]) for ch in ("r", "g", "b"))
        presets.append(FilterPreset(name=name, matrix=matrix, curves=curves))
    names = [p.name for p in presets]
    if "none" not in names or len(set(names)) != len(names):
        raise TransformError("preset file must contain distinct names including 'none'")
    return presets, digest


_PRESETS: list[FilterPreset] | None = None
_PRESET_HASH: str | None = None
_CURVE_CACHE: dict[str, tuple] = {}


def presets() -> list[FilterPreset]:
    global _PRESETS, _PRESET_HASH
    if _PRESETS is None:
        _PRESETS, _PRESET_HASH = _load_presets()
    return _PRESETS


def preset_file_hash() -> str:
    presets()
    return _PRESET_HASH


def get_preset(name: str) -> FilterPreset:
    for p in presets():
        if p.name == name:
            return p
    raise TransformError(f"unknown filter preset {name!r}")


def _curve_fns(preset: FilterPreset):
    fns = _CURVE_CACHE.get(preset.name)
    if fns is None:
        fns = tuple(
            PchipInterpolator([x for x, _ in pts], [y for _, y in pts], extrapolate=False)
            for pts in preset.curves
        )
        _CURVE_CACHE[preset.name] = fns
    return fns


_SPACE: ParamSpace | None = None


def builtin_space() -> ParamSpace:
    """The parameter space the built-in chain is controlled by."""
    global _SPACE
    if _SPACE is None:
        names = tuple(p.name for p in presets())
        _SPACE = ParamSpace(
            (
                ParamSpec("filter", "categorical", choices=names, identity="none"),
                ParamSpec("filter_strength", "continuous", 0.0, 1.0, identity=0.0),
                ParamSpec("temperature", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("tint", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("brightness", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("contrast", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("saturation", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("gamma", "continuous", -1.0, 1.0, identity=0.0),
                ParamSpec("vignette", "continuous", 0.0, 1.0, identity=0.0),
            )
        )
    return _SPACE


def _clip(p: np.ndarray) -> np.ndarray:
    return np.clip(p, 0.0, 1.0)


def _apply_filter(p: np.ndarray, preset: FilterPreset, strength: float) -> np.ndarray:
    matrix = np.asarray(preset.matrix)
    mixed = _clip(p @ matrix.T)
    curved = np.empty_like(mixed)
    for c, fn in enumerate(_curve_fns(preset)):
        curved[:, :, c] = fn(mixed[:, :, c])
    return _clip((1.0 - strength) * p + strength * _clip(curved))


def luma(p: np.ndarray) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    return r * p[:, :, 0] + g * p[:, :, 1] + b * p[:, :, 2]


def _vignette_falloff(height: int, width: int) -> np.ndarray:
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    ys = (np.arange(height) - cy) ** 2
    xs = (np.arange(width) - cx) ** 2
    max_sq = cy * cy + cx * cx
    if max_sq == 0.0:  # single pixel: the center itself
        return np.zeros((height, width))
    d_sq = (ys[:, None] + xs[None, :]) / max_sq
    return np.minimum(1.0, d_sq)


def apply_chain(img: ImageBuf, assignment: dict) -> ImageBuf:
    """Run the canonical eight-stage chain; stages at identity are skipped."""
    violations = [v.message for v in _validate(assignment)]
    if violations:
        raise TransformError("invalid assignment: " + "; ".join(violations))

    p = img.pixels

    preset_name = assignment["filter"]
    strength = float(assignment["filter_strength"])
    if preset_name != "none" and strength != 0.0:
        p = _apply_filter(p, get_preset(preset_name), strength)

    t = float(assignment["temperature"])
    if t != 0.0:
        p = _clip(p * np.array([1.0 + 0.2 * t, 1.0, 1.0 - 0.2 * t]))

    g = float(assignment["tint"])
    if g != 0.0:
        p = _clip(p * np.array([1.0, 1.0 + 0.2 * g, 1.0]))

    b = float(assignment["brightness"])
    if b != 0.0:
        p = _clip(p + 0.5 * b)

    c = float(assignment["contrast"])
    if c != 0.0:
        p = _clip((p - 0.5) * (1.0 + c) + 0.5)

    s = float(assignment["saturation"])
    if s != 0.0:
        lum = luma(p)[:, :, None]
        p = _clip(lum + (p - lum) * (1.0 + s))

    ga = float(assignment["gamma"])
    if ga != 0.0:
        p = _clip(p ** (2.0**ga))

    v = float(assignment["vignette"])
    if v != 0.0:
        falloff = _vignette_falloff(img.height, img.width)
        p = _clip(p * (1.0 - v * falloff)[:, :, None])

    return ImageBuf(p)


def _validate(assignment: dict):
    from .params import validate

    return validate(builtin_space(), assignment)


def require_valid_assignment(assignment: dict) -> None:
    require_valid(builtin_space(), assignment)
