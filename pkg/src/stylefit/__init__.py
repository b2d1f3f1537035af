"""Transcribe a style reference into editable photo-filter parameters.

The package fits the parameters of a fixed image transform chain so the
transformed content image matches a reference's global style statistics,
using sequential black-box minimization (random search or TPE) over a
mixed continuous/integer/categorical parameter space.
"""

from .image import (
    ImageBuf,
    ImageError,
    encode_png,
    from_bytes,
    load_image,
    quantize,
    save_image,
    to_bytes,
)
from .metric import StyleDescriptor, distance, encode_builtin
from .optimize import StudyConfig, StudyResult, TrialFailure, TrialRecord, run_study, suggest
from .params import ParamError, ParamSpace, ParamSpec, ParseError, Violation, validate
from .transforms import apply_chain, builtin_space

__version__ = "0.1.0"

__all__ = [
    "ImageBuf",
    "ImageError",
    "ParamError",
    "ParamSpace",
    "ParamSpec",
    "ParseError",
    "StudyConfig",
    "StudyResult",
    "StyleDescriptor",
    "TrialFailure",
    "TrialRecord",
    "Violation",
    "apply_chain",
    "builtin_space",
    "distance",
    "encode_builtin",
    "encode_png",
    "from_bytes",
    "load_image",
    "quantize",
    "run_study",
    "save_image",
    "suggest",
    "to_bytes",
    "validate",
]
