"""Command-line interface: exit codes, error lines, artifact handling."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from stylefit.fixtures import content_image
from stylefit.image import save_image
from stylefit.metric import BUILTIN_METRIC_ID

ECHO_TRANSFORM = f"{sys.executable} -m stylefit.echo_adapter --role transform"


def run_cli(*args, timeout=300):
    return subprocess.run(
        [sys.executable, "-m", "stylefit.cli", *args],
        capture_output=True,
        text=True,
        timeout=timeout,
    )


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    for name, kind, seed in (("content.png", "meadow", 41), ("reference.png", "sunset", 42)):
        save_image(content_image(kind, seed=seed, size=64), root / name)
    return root


@pytest.fixture(scope="module")
def finished_run(workspace):
    outdir = workspace / "run"
    proc = run_cli(
        "transcribe",
        "--original", str(workspace / "content.png"),
        "--reference", str(workspace / "reference.png"),
        "--iters", "25",
        "--seed", "0",
        "--out", str(outdir),
    )
    assert proc.returncode == 0, proc.stderr
    return outdir, json.loads(proc.stdout)


# --- transcribe ---------------------------------------------------------------


def test_transcribe_prints_a_summary_and_writes_artifacts(finished_run):
    outdir, summary = finished_run
    assert summary["result"] == str(outdir / "result.json")
    assert summary["candidate_index"] is None
    assert isinstance(summary["best_objective"], float)
    for name in ("result.json", "trials.jsonl", "best.png", "reference_descriptor.json"):
        assert (outdir / name).is_file()


def test_usage_errors_exit_2_with_one_line(workspace):
    proc = run_cli("transcribe", "--out", str(workspace / "x"))
    assert proc.returncode == 2
    assert proc.stdout == ""
    lines = proc.stderr.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("error: usage:")


def test_both_content_flags_is_a_usage_error(workspace):
    proc = run_cli(
        "transcribe",
        "--original", "a.png",
        "--candidates", "b.png,c.png",
        "--reference", str(workspace / "reference.png"),
        "--out", str(workspace / "x"),
    )
    assert proc.returncode == 2
    assert "error: usage:" in proc.stderr


def test_unknown_subcommand_is_a_usage_error():
    proc = run_cli("summon")
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: usage:")


def test_missing_input_image_exits_3(workspace):
    proc = run_cli(
        "transcribe",
        "--original", str(workspace / "nope.png"),
        "--reference", str(workspace / "reference.png"),
        "--iters", "5",
        "--out", str(workspace / "x"),
    )
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: input:")


def test_unlaunchable_adapter_exits_4(workspace):
    proc = run_cli(
        "transcribe",
        "--original", str(workspace / "content.png"),
        "--reference", str(workspace / "reference.png"),
        "--engine", "/nonexistent/adapter-binary",
        "--iters", "5",
        "--out", str(workspace / "x"),
    )
    assert proc.returncode == 4
    assert proc.stderr.startswith("error: adapter/launch:")


def test_bad_metric_flag_is_a_usage_error(workspace):
    proc = run_cli(
        "transcribe",
        "--original", str(workspace / "content.png"),
        "--reference", str(workspace / "reference.png"),
        "--metric", "oracle:whatever",
        "--out", str(workspace / "x"),
    )
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: usage:")


# --- apply -----------------------------------------------------------------------


def test_apply_without_edits_matches_best_png(finished_run, tmp_path):
    outdir, _ = finished_run
    out = tmp_path / "replay.png"
    proc = run_cli("apply", "--result", str(outdir), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout) == {"written": str(out)}
    assert out.read_bytes() == (outdir / "best.png").read_bytes()


def test_apply_with_edits(finished_run, tmp_path):
    outdir, _ = finished_run
    out = tmp_path / "edited.png"
    proc = run_cli(
        "apply",
        "--result", str(outdir / "result.json"),
        "--set", "brightness=0.4",
        "--set", "filter=sepia",
        "--disable", "vignette",
        "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes() != (outdir / "best.png").read_bytes()


def test_apply_rejects_bad_overrides(finished_run, tmp_path):
    outdir, _ = finished_run
    proc = run_cli(
        "apply",
        "--result", str(outdir),
        "--set", "brightness=bogus",
        "--out", str(tmp_path / "x.png"),
    )
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: input:")

    proc = run_cli(
        "apply",
        "--result", str(outdir),
        "--set", "brightness",
        "--out", str(tmp_path / "x.png"),
    )
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: usage:")


def test_apply_missing_result_exits_3(tmp_path):
    proc = run_cli(
        "apply", "--result", str(tmp_path / "none"), "--out", str(tmp_path / "x.png")
    )
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: input:")


# --- serve (validation only; the server loop is exercised via TestClient) ----------


def test_serve_rejects_a_missing_result_quickly(tmp_path):
    proc = run_cli("serve", "--result", str(tmp_path / "none"), timeout=60)
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: input:")


# --- encode ------------------------------------------------------------------------


def test_encode_prints_the_descriptor(workspace):
    proc = run_cli("encode", "--image", str(workspace / "content.png"))
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["metric_id"] == BUILTIN_METRIC_ID
    assert len(payload["vector"]) == 30
    assert all(isinstance(v, (int, float)) for v in payload["vector"])


def test_encode_missing_file_exits_3(workspace):
    proc = run_cli("encode", "--image", str(workspace / "ghost.png"))
    assert proc.returncode == 3
    assert proc.stderr.startswith("error: input:")


# --- bench --------------------------------------------------------------------------


def test_bench_prints_one_row_per_benchmark():
    proc = run_cli("bench", "--budget", "20", "--seeds", "2", timeout=600)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.strip().splitlines()
    assert len(lines) == 5  # header + four benchmarks
    assert "tpe median" in lines[0]
    for line in lines[1:]:
        assert line.endswith(("tpe<=random", "RANDOM WINS"))
    names = [line.split()[0] for line in lines[1:]]
    assert names == ["sphere-2d", "sphere-6d", "quadratic-categorical", "branin-unit"]


def test_bench_unknown_suite_is_a_usage_error():
    proc = run_cli("bench", "--suite", "exotic")
    assert proc.returncode == 2
    assert proc.stderr.startswith("error: usage:")


# --- adapter-check --------------------------------------------------------------------


def test_adapter_check_passes_the_bundled_echo_adapter():
    proc = run_cli("adapter-check", "--cmd", ECHO_TRANSFORM, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "ok: all" in proc.stdout
    assert "FAIL" not in proc.stdout


def test_adapter_check_reports_failures_and_exits_4(tmp_path):
    bad = tmp_path / "bad.py"
    bad.write_text("import sys; sys.exit(1)\n")
    proc = run_cli(
        "adapter-check", "--cmd", f"{sys.executable} {bad}", "--timeout", "5", timeout=120
    )
    assert proc.returncode == 4
    assert "FAIL" in proc.stdout
    assert proc.stderr.startswith("error: adapter/conformance:")


# --- version ----------------------------------------------------------------------------


def test_version_flag():
    proc = run_cli("--version")
    assert proc.returncode == 0
    assert "stylefit" in proc.stdout
