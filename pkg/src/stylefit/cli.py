"""Command-line interface.

Subcommands: ``transcribe`` (fit parameters to a reference), ``apply``
(re-render a stored result with optional edits), ``serve`` (HTTP
explorer service), ``encode`` (print an image's style descriptor),
``bench`` (optimizer-vs-random table), ``adapter-check`` (protocol
conformance run against an external adapter).

Exit codes: 0 success, 2 usage, 3 input error, 4 adapter error,
5 internal error. Failures print one machine-parseable line to stderr:
``error: <category>: <message>`` with category usage|input|adapter|internal.
"""

from __future__ import annotations

import json
import shlex
import sys
from pathlib import Path

import click

from .adapters import AdapterEndpoint, AdapterError, run_adapter_check
from .benchmarks import all_benchmarks, run_benchmark
from .image import ImageError, load_image, save_image
from .metric import MetricError, encode_builtin
from .optimize import StudyConfig
from .params import ParamError
from .session import (
    SessionError,
    SessionSpec,
    apply_result,
    load_result,
    transcribe as run_transcribe,
)
from .transforms import TransformError

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_ADAPTER = 4
EXIT_INTERNAL = 5

_INPUT_ERRORS = (
    ImageError,
    MetricError,
    ParamError,
    TransformError,
    SessionError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)


def _fail(category: str, message: str, code: int):
    click.echo(f"error: {category}: {message}", err=True)
    sys.exit(code)


def _guard(fn, *args, **kwargs):
    """Run a command body, mapping exceptions to categorized exits."""
    try:
        return fn(*args, **kwargs)
    except AdapterError as exc:
        _fail(f"adapter/{exc.category}", str(exc), EXIT_ADAPTER)
    except _INPUT_ERRORS as exc:
        _fail("input", str(exc), EXIT_INPUT)
    except click.ClickException:
        raise
    except Exception as exc:  # pragma: no cover - defensive catch-all
        _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)


def _parse_engine(text: str):
    if text == "builtin":
        return "builtin"
    return AdapterEndpoint(tuple(shlex.split(text)), "transform")


def _parse_metric(text: str):
    if text == "builtin":
        return "builtin"
    for role in ("encoder", "scorer"):
        prefix = role + ":"
        if text.startswith(prefix):
            command = shlex.split(text[len(prefix) :])
            if not command:
                raise click.UsageError(f"--metric {role}: needs a command")
            return AdapterEndpoint(tuple(command), role)
    raise click.UsageError(
        "--metric must be 'builtin', 'encoder:<command>', or 'scorer:<command>'"
    )


def _parse_set(pairs):
    overrides = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or not name:
            raise click.UsageError(f"--set needs name=value, got {pair!r}")
        try:
            overrides[name] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[name] = raw  # bare string: a categorical choice label
    return overrides


@click.group()
@click.version_option(package_name="stylefit")
def cli():
    """Transcribe a reference's style into editable transform parameters."""


def main(argv=None):
    """Entry point that turns usage problems into one-line categorized errors."""
    try:
        cli(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        click.echo(f"error: usage: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(130)


@cli.command()
@click.option("--original", type=click.Path(), default=None, help="Content image path.")
@click.option(
    "--candidates",
    default=None,
    help="Comma-separated candidate image paths (candidate-selection mode).",
)
@click.option("--reference", type=click.Path(), required=True, help="Reference image path.")
@click.option("--engine", default="builtin", show_default=True, help="'builtin' or an adapter command.")
@click.option(
    "--metric",
    default="builtin",
    show_default=True,
    help="'builtin', 'encoder:<command>', or 'scorer:<command>'.",
)
@click.option("--norm", type=click.Choice(["l1", "l2"]), default="l1", show_default=True)
@click.option("--iters", type=int, default=1000, show_default=True, help="Total trial budget.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sampler", type=click.Choice(["tpe", "random"]), default="tpe", show_default=True)
@click.option("--gamma", type=float, default=0.25, show_default=True, help="Elite fraction.")
@click.option(
    "--n-candidates", type=int, default=24, show_default=True, help="Proposals per trial."
)
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
def transcribe(original, candidates, reference, engine, metric, norm, iters, seed, sampler, gamma, n_candidates, out):
    """Fit transform parameters so the content matches the reference style."""
    if (original is None) == (candidates is None):
        raise click.UsageError("give exactly one of --original or --candidates")

    def body():
        spec = SessionSpec(
            original=original,
            candidates=tuple(c.strip() for c in candidates.split(",")) if candidates else None,
            reference=reference,
            engine=_parse_engine(engine),
            metric=_parse_metric(metric),
            norm=norm,
            outdir=out,
            study=StudyConfig(
                seed=seed, budget=iters, sampler=sampler, gamma=gamma, n_candidates=n_candidates
            ),
        )
        result = run_transcribe(spec)
        summary = {
            "best_objective": result.best_objective,
            "result": str(Path(out) / "result.json"),
            "candidate_index": result.candidate_index,
        }
        click.echo(json.dumps(summary, indent=2))

    _guard(body)


@cli.command(name="apply")
@click.option("--result", "result_path", type=click.Path(), required=True, help="result.json or its directory.")
@click.option("--set", "set_pairs", multiple=True, help="Override name=value (repeatable).")
@click.option("--disable", "disables", multiple=True, help="Reset a parameter to identity (repeatable).")
@click.option("--out", type=click.Path(), required=True, help="Output PNG path.")
def apply_cmd(result_path, set_pairs, disables, out):
    """Re-render a stored result, optionally with parameter edits."""
    overrides = _parse_set(set_pairs)

    def body():
        image = apply_result(load_result(result_path), overrides, tuple(disables))
        save_image(image, out)
        click.echo(json.dumps({"written": out}))

    _guard(body)


@cli.command()
@click.option("--result", "result_dir", type=click.Path(), required=True, help="Result directory to serve.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8631, show_default=True)
def serve(result_dir, host, port):
    """Serve the exploration HTTP API over a completed result."""

    def body():
        from .service import serve as run_serve

        load_result(result_dir)  # fail fast on unusable results
        run_serve(result_dir, host=host, port=port)

    _guard(body)


@cli.command()
@click.option("--image", "image_path", type=click.Path(), required=True)
def encode(image_path):
    """Print the builtin style descriptor of an image as JSON."""

    def body():
        descriptor = encode_builtin(load_image(image_path))
        click.echo(
            json.dumps({"metric_id": descriptor.metric_id, "vector": list(descriptor.values)})
        )

    _guard(body)


@cli.command()
@click.option("--suite", default="default", show_default=True)
@click.option("--budget", type=int, default=200, show_default=True)
@click.option("--seeds", type=int, default=20, show_default=True)
def bench(suite, budget, seeds):
    """Print a TPE-vs-random median table over the benchmark suite."""
    if suite != "default":
        raise click.UsageError(f"unknown suite {suite!r}: only 'default' is bundled")

    def body():
        rows = []
        for benchmark in all_benchmarks():
            medians = {}
            for sampler in ("tpe", "random"):
                report = run_benchmark(benchmark.name, sampler, seeds=range(seeds), budget=budget)
                medians[sampler] = report["median_best"]
            rows.append((benchmark.name, medians["tpe"], medians["random"]))
        width = max(len(name) for name, *_ in rows)
        click.echo(f"{'function':<{width}}  {'tpe median':>12}  {'random median':>13}  verdict")
        for name, tpe_median, random_median in rows:
            verdict = "tpe<=random" if tpe_median <= random_median else "RANDOM WINS"
            click.echo(f"{name:<{width}}  {tpe_median:>12.6g}  {random_median:>13.6g}  {verdict}")

    _guard(body)


@cli.command(name="adapter-check")
@click.option("--cmd", "command", required=True, help="Adapter launch command (shell-quoted).")
@click.option("--timeout", type=float, default=30.0, show_default=True)
def adapter_check(command, timeout):
    """Run protocol conformance checks against an adapter command."""

    def body():
        checks = run_adapter_check(tuple(shlex.split(command)), timeout=timeout)
        failed = 0
        for check in checks:
            status = "PASS" if check.ok else "FAIL"
            failed += not check.ok
            click.echo(f"{status}  {check.name:<22} {check.detail}")
        if failed:
            _fail("adapter/conformance", f"{failed} of {len(checks)} checks failed", EXIT_ADAPTER)
        click.echo(f"ok: all {len(checks)} checks passed")

    _guard(body)


if __name__ == "__main__":
    main()
