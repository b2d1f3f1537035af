"""Local HTTP service for exploring a completed transcription result.

The service loads one result directory and exposes the exploration loop
under ``/v1/``: read the space and current values, render any edited
assignment to PNG bytes (pure — never mutates state), set the current
assignment, and run more optimization in the background. Every response
carries ``X-Artifact-Version`` and ``X-Metric-Id`` headers so a client
can detect mismatched servers. Binds loopback by default: this is a
local design tool, not a deployment service.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse

from .adapters import AdapterError
from .image import ImageError, encode_png, load_image
from .metric import descriptor_from_obj, distance
from .optimize import StudyConfig, StudyError, TrialFailure, run_study
from .params import spec_to_obj, validate
from .session import (
    ARTIFACT_VERSION,
    BEST_IMAGE_NAME,
    CANDIDATE_PARAM,
    REFERENCE_DESCRIPTOR_NAME,
    engine_from_doc,
    load_result,
    merge_edits,
    metric_from_doc,
    result_space,
    warm_start,
)
from .transforms import TransformError


class ExplorerService:
    """All mutable state behind the HTTP routes, for one loaded result."""

    def __init__(self, result_dir):
        self.result = load_result(result_dir)
        self.doc = self.result.doc
        self.space = result_space(self.result)
        self.engine = engine_from_doc(self.doc)
        self.metric = metric_from_doc(self.doc)
        self.norm = self.doc["metric"].get("norm", "l1")
        weights = self.doc["metric"].get("weights")
        self.weights = tuple(weights) if weights else None

        self.labels = self.doc.get("candidates")
        if self.labels:
            self.images = {label: load_image(label) for label in self.labels}
        else:
            self.images = {self.doc["original"]: load_image(self.doc["original"])}

        self.reference_descriptor = None
        if self.metric.mode == "encoder":
            ref_file = Path(self.result.result_dir) / REFERENCE_DESCRIPTOR_NAME
            stored = None
            if ref_file.is_file():
                stored = json.loads(ref_file.read_text(encoding="utf-8")).get("descriptor")
            if stored is not None:
                self.reference_descriptor = descriptor_from_obj(stored)
            else:
                self.reference_descriptor = self.metric.encode(load_image(self.doc["reference"]))

        self.current = dict(self.result.best)
        self.best = dict(self.result.best)
        self.best_objective = float(self.result.best_objective)

        # One lock serializes engine/metric use (adapter channels are
        # strictly sequential); another guards optimization bookkeeping.
        self._engine_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._opt_thread: threading.Thread | None = None
        self._opt_runs = 0
        self.progress = {
            "running": False,
            "trials_done": 0,
            "budget": 0,
            "best_objective": self.best_objective,
            "error": None,
        }

    # --- pure helpers -----------------------------------------------------

    def _content_for(self, assignment: dict):
        if self.labels and CANDIDATE_PARAM in assignment:
            label = assignment[CANDIDATE_PARAM]
            engine_assignment = {k: v for k, v in assignment.items() if k != CANDIDATE_PARAM}
            return self.images[label], engine_assignment
        return self.images[self.doc["original"]], assignment

    def evaluate(self, assignment: dict):
        """Transform + measure one assignment; returns (image, objective)."""
        content, engine_assignment = self._content_for(assignment)
        with self._engine_lock:
            image = self.engine.transform(content, engine_assignment)
            if self.metric.mode == "encoder":
                value = distance(
                    self.metric.encode(image), self.reference_descriptor, self.norm, self.weights
                )
            else:
                value = self.metric.score(image)
        return image, value

    # --- optimization -----------------------------------------------------

    def start_optimize(self, iters: int) -> None:
        with self._state_lock:
            if self.progress["running"]:
                raise HTTPException(status_code=409, detail="an optimization is already running")
            self._opt_runs += 1
            run_seed = int(self.doc["study"]["seed"]) + self._opt_runs
            self.progress = {
                "running": True,
                "trials_done": 0,
                "budget": iters,
                "best_objective": self.best_objective,
                "error": None,
            }
            thread = threading.Thread(target=self._optimize, args=(iters, run_seed), daemon=True)
            self._opt_thread = thread
            thread.start()

    def _optimize(self, iters: int, run_seed: int) -> None:
        study_obj = self.doc["study"]
        config = StudyConfig(
            seed=run_seed,
            budget=iters,
            sampler=study_obj.get("sampler", "tpe"),
            n_startup=study_obj.get("n_startup", 20),
            gamma=study_obj.get("gamma", 0.25),
            n_candidates=study_obj.get("n_candidates", 24),
            prior_weight=study_obj.get("prior_weight", 1.0),
        )
        initial = warm_start(self.engine.space, self.labels)

        def objective(assignment: dict) -> float:
            try:
                _, value = self.evaluate(assignment)
            except (AdapterError, ImageError, TransformError) as exc:
                raise TrialFailure(str(exc)) from exc
            return value

        def on_trial(record):
            with self._state_lock:
                self.progress["trials_done"] = record.index + 1
                if record.state == "complete" and record.objective < self.progress["best_objective"]:
                    self.progress["best_objective"] = record.objective

        try:
            result = run_study(objective, self.space, config, initial=initial, on_trial=on_trial)
            with self._state_lock:
                if result.best.objective < self.best_objective:
                    self.best_objective = float(result.best.objective)
                    self.best = dict(result.best.assignment)
        except StudyError as exc:
            with self._state_lock:
                self.progress["error"] = str(exc)
        finally:
            with self._state_lock:
                self.progress["running"] = False
                self.progress["best_objective"] = self.best_objective

    def close(self):
        self.engine.close()
        self.metric.close()


def build_app(result_dir) -> FastAPI:
    """FastAPI application bound to one result directory."""
    service = ExplorerService(result_dir)
    app = FastAPI(title="stylefit explorer service", version=ARTIFACT_VERSION)
    app.state.service = service

    @app.middleware("http")
    async def tag_responses(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Artifact-Version"] = ARTIFACT_VERSION
        response.headers["X-Metric-Id"] = service.metric.id
        return response

    def violation_response(violations):
        return JSONResponse(
            status_code=422,
            content={
                "violations": [
                    {"name": v.name, "code": v.code, "message": v.message} for v in violations
                ]
            },
        )

    @app.get("/v1/state")
    def get_state():
        try:
            _, current_distance = service.evaluate(service.current)
        except (AdapterError, ImageError, TransformError) as exc:
            raise HTTPException(status_code=502, detail=_categorize(exc))
        with service._state_lock:
            return {
                "artifact_version": ARTIFACT_VERSION,
                "metric_id": service.metric.id,
                "norm": service.norm,
                "space": [spec_to_obj(s) for s in service.space],
                "current": dict(service.current),
                "best": dict(service.best),
                "best_objective": service.best_objective,
                "current_distance": current_distance,
                "original": service.doc["original"],
                "reference": service.doc["reference"],
                "candidates": service.labels,
                "candidate_index": service.doc.get("candidate_index"),
            }

    @app.post("/v1/render")
    def post_render(body: dict):
        overrides = body.get("overrides") or {}
        disable = tuple(body.get("disable") or ())
        if not isinstance(overrides, dict):
            raise HTTPException(status_code=422, detail="overrides must be an object")
        merged, violations = merge_edits(service.space, service.best, overrides, disable)
        if violations:
            return violation_response(violations)
        try:
            image, value = service.evaluate(merged)
        except (AdapterError, ImageError, TransformError) as exc:
            raise HTTPException(status_code=502, detail=_categorize(exc))
        return Response(
            content=encode_png(image),
            media_type="image/png",
            headers={"X-Style-Distance": repr(value)},
        )

    @app.post("/v1/params")
    def post_params(body: dict):
        assignment = body.get("assignment")
        if not isinstance(assignment, dict):
            raise HTTPException(status_code=422, detail="body needs an 'assignment' object")
        violations = validate(service.space, assignment)
        if violations:
            return violation_response(violations)
        with service._state_lock:
            service.current = dict(assignment)
        return {"ok": True}

    @app.post("/v1/optimize")
    def post_optimize(body: dict):
        iters = body.get("iters")
        if not isinstance(iters, int) or isinstance(iters, bool) or iters < 1:
            raise HTTPException(status_code=422, detail="iters must be an integer >= 1")
        service.start_optimize(iters)
        return {"ok": True, "iters": iters}

    @app.get("/v1/progress")
    def get_progress():
        with service._state_lock:
            return dict(service.progress)

    @app.get("/v1/image/best")
    def get_best_image():
        stored = Path(service.result.result_dir) / BEST_IMAGE_NAME
        with service._state_lock:
            unchanged = service.best == service.result.best
        if unchanged and stored.is_file():
            return Response(content=stored.read_bytes(), media_type="image/png")
        try:
            image, _ = service.evaluate(service.best)
        except (AdapterError, ImageError, TransformError) as exc:
            raise HTTPException(status_code=502, detail=_categorize(exc))
        return Response(content=encode_png(image), media_type="image/png")

    @app.get("/v1/image/reference")
    def get_reference_image():
        try:
            data = Path(service.doc["reference"]).read_bytes()
        except OSError as exc:
            raise HTTPException(status_code=502, detail=f"input: cannot read reference: {exc}")
        return Response(content=data, media_type="image/png")

    return app


def _categorize(exc) -> str:
    if isinstance(exc, AdapterError):
        return f"adapter/{exc.category}: {exc}"
    return f"engine: {exc}"


def serve(result_dir, host: str = "127.0.0.1", port: int = 8631) -> None:
    """Run the service under uvicorn until interrupted."""
    import uvicorn

    uvicorn.run(build_app(result_dir), host=host, port=port, log_level="warning")


__all__ = ["ExplorerService", "build_app", "serve"]
