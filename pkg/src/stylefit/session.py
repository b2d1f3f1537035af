"""Transcription sessions: wire inputs, engine, metric, and optimizer.

A session minimizes, over the engine's parameter space, the style
distance between the transformed content image and a fixed reference.
The reference descriptor is computed once; trial 0 is always the
identity assignment (so the result can never be worse than doing
nothing); a coarse preset sweep seeds the optimizer before model-based
sampling takes over. Everything a run produces lands in one output
directory: ``result.json`` (versioned schema), ``trials.jsonl``,
``best.png``, and ``reference_descriptor.json``.

Candidate-selection mode (:func:`transcribe_generative`) treats the
choice of content image as one more categorical parameter: the declared
space gains a leading ``candidate_index`` parameter and the winning
candidate is recorded in the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .adapters import (
    AdapterEncoderMetric,
    AdapterEndpoint,
    AdapterEngine,
    AdapterError,
    AdapterScorerMetric,
)
from .image import ImageBuf, ImageError, load_image, quantize, save_image
from .metric import (
    BUILTIN_METRIC_ID,
    MetricError,
    StyleDescriptor,
    descriptor_to_obj,
    distance,
    encode_builtin,
)
from .optimize import (
    StudyConfig,
    StudyError,
    TrialFailure,
    dump_trials,
    run_study,
)
from .params import (
    ParamError,
    ParamSpace,
    ParamSpec,
    Violation,
    identity_assignment,
    space_from_json,
    space_to_json,
    validate,
)
from .transforms import BUILTIN_ENGINE_ID, TransformError, apply_chain, builtin_space, preset_file_hash

ARTIFACT_VERSION = "stylefit-result/1"
CANDIDATE_PARAM = "candidate_index"

RESULT_NAME = "result.json"
TRIALS_NAME = "trials.jsonl"
BEST_IMAGE_NAME = "best.png"
REFERENCE_DESCRIPTOR_NAME = "reference_descriptor.json"

# Strong-application bracket the warm-start sweep probes for every filter
# choice: strengths near the top of the range, vignetting from none to
# strong. Transcription references are typically heavily stylized, so
# probing this bracket hands the optimizer a good elite set immediately.
SWEEP_STRENGTHS = (0.85, 0.925, 1.0)
SWEEP_VIGNETTES = (0.0, 0.45, 0.55, 0.65)

# Abort when this many trials have run and every one of them failed.
FAILURE_ABORT_WINDOW = 50


class SessionError(RuntimeError):
    """Unusable session spec or a run that could not produce a result."""


@dataclass(frozen=True)
class SessionSpec:
    """Everything one transcription run needs.

    Exactly one of ``original`` (single content image) or ``candidates``
    (non-empty list of content images for candidate-selection mode) must
    be given. ``engine`` and ``metric`` are ``"builtin"`` or an
    :class:`AdapterEndpoint` of the right role.
    """

    reference: str
    outdir: str
    original: str | None = None
    candidates: tuple[str, ...] | None = None
    engine: str | AdapterEndpoint = "builtin"
    metric: str | AdapterEndpoint = "builtin"
    norm: str = "l1"
    weights: tuple[float, ...] | None = None
    study: StudyConfig = field(default_factory=StudyConfig)

    def __post_init__(self):
        if (self.original is None) == (self.candidates is None):
            raise SessionError("give exactly one of original= or candidates=")
        if self.candidates is not None:
            object.__setattr__(self, "candidates", tuple(str(c) for c in self.candidates))
            if not self.candidates:
                raise SessionError("candidate list must be non-empty")
            if len(set(self.candidates)) != len(self.candidates):
                raise SessionError("candidate labels must be pairwise distinct")
        if self.original is not None:
            object.__setattr__(self, "original", str(self.original))
        object.__setattr__(self, "reference", str(self.reference))
        object.__setattr__(self, "outdir", str(self.outdir))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.norm not in ("l1", "l2"):
            raise SessionError(f"unknown norm {self.norm!r}: expected 'l1' or 'l2'")
        artifacts = {
            str(Path(self.outdir) / name)
            for name in (RESULT_NAME, TRIALS_NAME, BEST_IMAGE_NAME, REFERENCE_DESCRIPTOR_NAME)
        }
        inputs = set(self.candidates or ()) | {self.reference}
        if self.original is not None:
            inputs.add(self.original)
        clash = inputs & artifacts
        if clash:
            raise SessionError(f"input paths collide with output artifacts: {sorted(clash)}")


@dataclass(frozen=True)
class TranscriptionResult:
    """Outcome of one run plus everything needed to re-apply it."""

    best: dict
    best_objective: float
    trial_log: str
    provenance: dict
    candidate_index: int | None
    result_dir: str
    doc: dict

    @property
    def result_path(self) -> str:
        return str(Path(self.result_dir) / RESULT_NAME)


# --- engine / metric drivers ----------------------------------------------


class _BuiltinEngine:
    id = BUILTIN_ENGINE_ID

    def __init__(self):
        self.space = builtin_space()

    def transform(self, img: ImageBuf, assignment: dict) -> ImageBuf:
        return quantize(apply_chain(img, assignment))

    def close(self):
        pass


class _BuiltinMetric:
    mode = "encoder"
    id = BUILTIN_METRIC_ID

    def encode(self, img: ImageBuf) -> StyleDescriptor:
        return encode_builtin(img)

    def close(self):
        pass


def _resolve_engine(engine):
    if engine == "builtin":
        return _BuiltinEngine()
    if isinstance(engine, AdapterEndpoint):
        return AdapterEngine(engine)
    raise SessionError(f"engine must be 'builtin' or an AdapterEndpoint, got {engine!r}")


def _resolve_metric(metric):
    if metric == "builtin":
        return _BuiltinMetric()
    if isinstance(metric, AdapterEndpoint):
        if metric.role == "encoder":
            return AdapterEncoderMetric(metric)
        if metric.role == "scorer":
            return AdapterScorerMetric(metric)
        raise SessionError("metric adapter role must be 'encoder' or 'scorer'")
    raise SessionError(f"metric must be 'builtin' or an AdapterEndpoint, got {metric!r}")


# --- warm start -------------------------------------------------------------


def preset_sweep(space: ParamSpace) -> list[dict]:
    """Coarse probes over every filter choice at strong application levels.

    Each probe starts from the identity assignment and sets the
    ``filter``/``filter_strength``/``vignette`` trio; spaces without that
    trio (or without identities) get no probes, because the sweep has no
    way to know what foreign parameters mean. Probes that fall outside
    the declared bounds are dropped rather than clamped.
    """
    names = set(space.names)
    if not {"filter", "filter_strength", "vignette"} <= names:
        return []
    filter_spec = space.spec("filter")
    if filter_spec.kind != "categorical" or filter_spec.identity is None:
        return []
    try:
        base = identity_assignment(space)
    except ParamError:
        return []
    probes = []
    for choice in filter_spec.choices:
        if choice == filter_spec.identity:
            continue
        for strength in SWEEP_STRENGTHS:
            for vignette in SWEEP_VIGNETTES:
                probe = dict(base)
                probe["filter"] = choice
                probe["filter_strength"] = strength
                probe["vignette"] = vignette
                if not validate(space, probe):
                    probes.append(probe)
    return probes


def warm_start(engine_space: ParamSpace, labels: list[str] | None = None) -> list[dict]:
    """The evaluation-order list of warm-start assignments for a run.

    Identity first (trial 0), then the coarse preset sweep. In candidate
    mode every candidate gets its identity trial before any sweep probe,
    so the per-candidate baseline always lands in-budget.
    """
    engine_identity = identity_assignment(engine_space)
    sweep = preset_sweep(engine_space)
    if labels is None:
        initial = [dict(engine_identity)]
        initial.extend(dict(probe) for probe in sweep)
        return initial
    initial = [{CANDIDATE_PARAM: label, **engine_identity} for label in labels]
    for label in labels:
        initial.extend({CANDIDATE_PARAM: label, **probe} for probe in sweep)
    return initial


# --- the transcription loop --------------------------------------------------


def _load_input(path: str) -> ImageBuf:
    try:
        return load_image(path)
    except (ImageError, OSError) as exc:
        raise SessionError(f"cannot read input image {path}: {exc}") from exc


def _provenance(spec: SessionSpec, engine, metric) -> dict:
    return {
        "seed": spec.study.seed,
        "budget": spec.study.budget,
        "metric_id": metric.id,
        "engine_id": engine.id,
        "preset_file_hash": preset_file_hash(),
        "artifact_version": ARTIFACT_VERSION,
    }


def _engine_obj(spec: SessionSpec, engine) -> dict:
    if isinstance(spec.engine, AdapterEndpoint):
        return {
            "kind": "adapter",
            "id": engine.id,
            "command": list(spec.engine.command),
            "timeout": spec.engine.timeout,
        }
    return {"kind": "builtin", "id": engine.id}


def _metric_obj(spec: SessionSpec, metric) -> dict:
    obj: dict = {"kind": "builtin", "id": metric.id, "norm": spec.norm}
    if isinstance(spec.metric, AdapterEndpoint):
        obj["kind"] = f"adapter-{spec.metric.role}"
        obj["command"] = list(spec.metric.command)
        obj["timeout"] = spec.metric.timeout
    if spec.weights is not None:
        obj["weights"] = list(spec.weights)
    else:
        obj["weights"] = None
    return obj


def _study_obj(config: StudyConfig) -> dict:
    return {
        "seed": config.seed,
        "budget": config.budget,
        "sampler": config.sampler,
        "n_startup": config.n_startup,
        "gamma": config.gamma,
        "n_candidates": config.n_candidates,
        "prior_weight": config.prior_weight,
    }


def _run(spec: SessionSpec, generative: bool) -> TranscriptionResult:
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    engine = _resolve_engine(spec.engine)
    metric = _resolve_metric(spec.metric)
    try:
        reference = _load_input(spec.reference)

        if generative:
            labels = list(spec.candidates)
            images = {label: _load_input(label) for label in labels}
            space = ParamSpace(
                (
                    ParamSpec(
                        CANDIDATE_PARAM,
                        "categorical",
                        choices=tuple(labels),
                        identity=labels[0],
                    ),
                )
                + tuple(engine.space)
            )
        else:
            labels = None
            content = _load_input(spec.original)
            space = engine.space

        if metric.mode == "encoder":
            reference_descriptor = metric.encode(reference)
        else:
            reference_descriptor = None

        initial = warm_start(engine.space, labels)

        progress = {"evaluated": 0, "failed": 0}
        best_cache: dict = {"objective": None, "image": None}

        def objective(assignment: dict) -> float:
            progress["evaluated"] += 1
            try:
                if generative:
                    x = images[assignment[CANDIDATE_PARAM]]
                    engine_assignment = {
                        k: v for k, v in assignment.items() if k != CANDIDATE_PARAM
                    }
                else:
                    x = content
                    engine_assignment = assignment
                y = engine.transform(x, engine_assignment)
                if metric.mode == "encoder":
                    value = distance(
                        metric.encode(y), reference_descriptor, spec.norm, spec.weights
                    )
                else:
                    value = metric.score(y)
            except (AdapterError, ImageError, TransformError, MetricError) as exc:
                progress["failed"] += 1
                if (
                    progress["evaluated"] >= FAILURE_ABORT_WINDOW
                    and progress["failed"] == progress["evaluated"]
                ):
                    raise SessionError(
                        f"aborting: the first {progress['evaluated']} trials all failed "
                        f"(last error: {exc})"
                    ) from exc
                raise TrialFailure(str(exc)) from exc
            if best_cache["objective"] is None or value < best_cache["objective"]:
                best_cache["objective"] = value
                best_cache["image"] = y
            return value

        try:
            study = run_study(objective, space, spec.study, initial=initial)
        except StudyError as exc:
            raise SessionError(str(exc)) from exc

        best = study.best
        candidate_index = None
        if generative:
            candidate_index = labels.index(best.assignment[CANDIDATE_PARAM])
            selected_input = labels[candidate_index]
        else:
            selected_input = spec.original

        dump_trials(study.trials, outdir / TRIALS_NAME)
        save_image(best_cache["image"], outdir / BEST_IMAGE_NAME)
        reference_obj = {
            "metric_id": metric.id,
            "norm": spec.norm,
            "weights": list(spec.weights) if spec.weights is not None else None,
            "descriptor": descriptor_to_obj(reference_descriptor)
            if reference_descriptor is not None
            else None,
        }
        (outdir / REFERENCE_DESCRIPTOR_NAME).write_text(
            json.dumps(reference_obj, indent=2) + "\n", encoding="utf-8"
        )

        provenance = _provenance(spec, engine, metric)
        doc = {
            "version": ARTIFACT_VERSION,
            "best": best.assignment,
            "best_objective": best.objective,
            "candidate_index": candidate_index,
            "original": selected_input,
            "candidates": labels,
            "reference": spec.reference,
            "engine": _engine_obj(spec, engine),
            "metric": _metric_obj(spec, metric),
            "space": json.loads(space_to_json(space, indent=None)),
            "study": _study_obj(spec.study),
            "trials": TRIALS_NAME,
            "provenance": provenance,
        }
        (outdir / RESULT_NAME).write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )
        return TranscriptionResult(
            best=dict(best.assignment),
            best_objective=best.objective,
            trial_log=str(outdir / TRIALS_NAME),
            provenance=provenance,
            candidate_index=candidate_index,
            result_dir=str(outdir),
            doc=doc,
        )
    finally:
        engine.close()
        metric.close()


def transcribe(spec: SessionSpec) -> TranscriptionResult:
    """Fit the engine's parameters so the transformed content matches the
    reference's style; returns the result after writing all artifacts."""
    if spec.candidates is not None:
        return transcribe_generative(spec)
    return _run(spec, generative=False)


def transcribe_generative(spec: SessionSpec) -> TranscriptionResult:
    """Like :func:`transcribe`, but also optimizes which candidate image
    to start from. With a single candidate this is plain transcription
    (no extra parameter, identical trial history)."""
    if spec.candidates is None:
        raise SessionError("candidate-selection mode needs candidates=")
    if len(spec.candidates) == 1:
        single = replace(spec, original=spec.candidates[0], candidates=None)
        return _run(single, generative=False)
    return _run(spec, generative=True)


# --- re-applying a stored result ---------------------------------------------


def load_result(path) -> TranscriptionResult:
    """Load a ``result.json`` (or its directory) back into a result object."""
    p = Path(path)
    if p.is_dir():
        p = p / RESULT_NAME
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SessionError(f"cannot read result: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SessionError(f"malformed result document: {exc}") from exc
    if doc.get("version") != ARTIFACT_VERSION:
        raise SessionError(
            f"unsupported result version {doc.get('version')!r} (want {ARTIFACT_VERSION!r})"
        )
    return TranscriptionResult(
        best=dict(doc["best"]),
        best_objective=doc["best_objective"],
        trial_log=str(p.parent / doc["trials"]),
        provenance=dict(doc["provenance"]),
        candidate_index=doc.get("candidate_index"),
        result_dir=str(p.parent),
        doc=doc,
    )


def result_space(result: TranscriptionResult) -> ParamSpace:
    """The parameter space the result was optimized over (including the
    candidate parameter in candidate-selection results)."""
    return space_from_json(json.dumps(result.doc["space"]))


def engine_from_doc(doc: dict):
    """Rebuild the engine a stored result ran with (relaunching adapters)."""
    engine_obj = doc.get("engine", {})
    if engine_obj.get("kind") == "builtin":
        return _BuiltinEngine()
    if engine_obj.get("kind") == "adapter":
        endpoint = AdapterEndpoint(
            command=tuple(engine_obj["command"]),
            role="transform",
            timeout=engine_obj.get("timeout", 30.0),
        )
        return AdapterEngine(endpoint)
    raise SessionError(f"result declares unknown engine kind {engine_obj.get('kind')!r}")


def metric_from_doc(doc: dict):
    """Rebuild the metric a stored result ran with (relaunching adapters)."""
    metric_obj = doc.get("metric", {})
    kind = metric_obj.get("kind")
    if kind == "builtin":
        return _BuiltinMetric()
    if kind in ("adapter-encoder", "adapter-scorer"):
        endpoint = AdapterEndpoint(
            command=tuple(metric_obj["command"]),
            role=kind.removeprefix("adapter-"),
            timeout=metric_obj.get("timeout", 30.0),
        )
        return _resolve_metric(endpoint)
    raise SessionError(f"result declares unknown metric kind {kind!r}")


def merge_edits(
    space: ParamSpace,
    base: dict,
    overrides: dict | None = None,
    disable: tuple[str, ...] = (),
) -> tuple[dict, list]:
    """Merge edits onto a base assignment; returns (merged, violations).

    Disables first (each named parameter goes to its identity value), then
    explicit overrides. All problems — unknown names, missing identities,
    out-of-bounds values — come back as validation records, so the CLI
    and the HTTP service report identical violation lists.
    """
    merged = dict(base)
    early = []
    for name in disable:
        try:
            spec = space.spec(name)
        except KeyError:
            early.append(Violation(name, "extra", f"unknown parameter {name!r}"))
            continue
        if spec.identity is None:
            early.append(
                Violation(name, "wrong_type", f"parameter {name!r} declares no identity value")
            )
            continue
        merged[name] = spec.identity
    for name, value in (overrides or {}).items():
        merged[name] = value
    return merged, early + validate(space, merged)


def apply_result(
    result: TranscriptionResult | str | Path,
    overrides: dict | None = None,
    disable: tuple[str, ...] = (),
) -> ImageBuf:
    """Re-apply a stored result with optional parameter edits.

    Disables are applied first (each named parameter goes to its identity
    value), then explicit overrides. With no edits the output is
    bit-identical to the stored ``best.png``.
    """
    if not isinstance(result, TranscriptionResult):
        result = load_result(result)
    space = result_space(result)
    merged, violations = merge_edits(space, result.best, overrides, disable)
    if violations:
        raise ParamError("; ".join(v.message for v in violations))

    if result.doc.get("candidates") and CANDIDATE_PARAM in merged:
        selected = merged[CANDIDATE_PARAM]
        engine_assignment = {k: v for k, v in merged.items() if k != CANDIDATE_PARAM}
    else:
        selected = result.doc["original"]
        engine_assignment = merged
    content = _load_input(selected)

    engine = engine_from_doc(result.doc)
    try:
        return engine.transform(content, engine_assignment)
    finally:
        engine.close()


__all__ = [
    "ARTIFACT_VERSION",
    "BEST_IMAGE_NAME",
    "CANDIDATE_PARAM",
    "FAILURE_ABORT_WINDOW",
    "REFERENCE_DESCRIPTOR_NAME",
    "RESULT_NAME",
    "SWEEP_STRENGTHS",
    "SWEEP_VIGNETTES",
    "SessionError",
    "SessionSpec",
    "TRIALS_NAME",
    "TranscriptionResult",
    "apply_result",
    "engine_from_doc",
    "load_result",
    "merge_edits",
    "metric_from_doc",
    "preset_sweep",
    "result_space",
    "transcribe",
    "transcribe_generative",
    "warm_start",
]
