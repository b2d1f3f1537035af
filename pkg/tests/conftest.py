"""Shared fixtures and suite-wide configuration."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stylefit.fixtures import recovery_fixture
from stylefit.image import ImageBuf, save_image
from stylefit.optimize import StudyConfig
from stylefit.session import SessionSpec, transcribe

# Keep property tests fast and byte-reproducible run to run.
settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def constant_image(r: float, g: float, b: float, size: int = 8) -> ImageBuf:
    return ImageBuf(np.broadcast_to(np.array([r, g, b]), (size, size, 3)).copy())


def gray(value: float, size: int = 8) -> ImageBuf:
    return constant_image(value, value, value, size)


@pytest.fixture(scope="session")
def small_result(tmp_path_factory):
    """One completed small-budget transcription shared by read-only tests.

    Returns (result_dir, content_path, reference_path, spec).
    """
    root = tmp_path_factory.mktemp("shared-result")
    content, reference, _ = recovery_fixture(0)
    content_path = root / "content.png"
    reference_path = root / "reference.png"
    save_image(content, content_path)
    save_image(reference, reference_path)
    outdir = root / "run"
    spec = SessionSpec(
        original=str(content_path),
        reference=str(reference_path),
        outdir=str(outdir),
        study=StudyConfig(seed=11, budget=120),
    )
    transcribe(spec)
    return str(outdir), str(content_path), str(reference_path), spec


# --- acceptance reporting ---------------------------------------------------
#
# Emit one PASS/FAIL line per acceptance criterion at the end of the run,
# keyed off the tests in test_acceptance.py.

_CRITERIA = (
    ("test_planted_recovery", "planted-parameter recovery"),
    ("test_cross_content_transfer", "cross-content transfer"),
    ("test_optimizer_quality", "optimizer quality"),
    ("test_metric_invariance", "metric invariance suite"),
    ("test_determinism", "determinism/reproducibility"),
    ("test_pseudo_generative_selection", "pseudo-generative selection"),
    ("test_adapter_conformance", "adapter conformance"),
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, str] = {}
    for reports in terminalreporter.stats.values():
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            outcome = getattr(report, "outcome", "")
            when = getattr(report, "when", "")
            if outcome == "failed" or (when == "call" and name not in outcomes):
                outcomes[name] = outcome
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for test_name, label in _CRITERIA:
        outcome = outcomes.get(test_name)
        if outcome is None:
            verdict = "NOT RUN"
        else:
            verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict:7s} {label}")
