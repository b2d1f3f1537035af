"""External-process adapters for the transform chain and the metric.

An adapter is a child process speaking line-delimited JSON over its
standard streams (protocol ``stylefit-adapter/1``; the normative message
grammar lives in ``docs/adapter-protocol.md``). Images travel by file
path inside an engine-owned scratch directory, never inline. One
adapter session serves strictly sequential request/reply traffic with
monotonically increasing integer ids; a watchdog turns silence, child
death, and malformed traffic into categorized :class:`AdapterError`
within one timeout interval.

Roles:

- ``transform``: declares a parameter space in its hello; turns an input
  PNG plus an assignment into an output PNG.
- ``encoder``: declares a descriptor length; maps a PNG to a style
  vector (tagged ``name/version`` from the hello).
- ``scorer``: maps a PNG directly to a scalar objective (lower is
  better) with no intermediate descriptor.
"""

from __future__ import annotations

import json
import math
import queue
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .image import ImageBuf, ImageError, load_image, save_image
from .metric import MetricError, StyleDescriptor
from .params import ParamError, ParamSpace, ParseError, identity_assignment, spec_from_obj

PROTOCOL = "stylefit-adapter/1"
ROLES = ("transform", "encoder", "scorer")
DEFAULT_TIMEOUT = 30.0

# Error-reply codes a child may use (anything else is a protocol breach).
REMOTE_CODES = ("bad_request", "unsupported", "internal")

_EOF = object()


class AdapterError(RuntimeError):
    """Adapter failure with a machine-readable category.

    Categories: ``launch`` (spawn/handshake problems), ``timeout`` (no
    reply within the deadline), ``crash`` (child died mid-session),
    ``protocol`` (malformed or inconsistent traffic, bad outputs),
    ``remote`` (well-formed error reply from the child).
    """

    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


@dataclass(frozen=True)
class AdapterEndpoint:
    """How to launch one adapter and which role it must declare."""

    command: tuple[str, ...]
    role: str
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        object.__setattr__(self, "command", tuple(str(c) for c in self.command))
        if not self.command:
            raise ValueError("adapter command must be non-empty")
        if self.role not in ROLES:
            raise ValueError(f"unknown adapter role {self.role!r}")
        if not self.timeout > 0:
            raise ValueError("adapter timeout must be > 0")


@dataclass(frozen=True)
class Capabilities:
    """What the child declared in its hello message."""

    name: str
    version: str
    role: str
    space: ParamSpace | None = None
    descriptor_length: int | None = None

    @property
    def id(self) -> str:
        return f"{self.name}/{self.version}"


def _parse_hello(obj: dict, expected_role: str | None, command) -> Capabilities:
    if obj.get("type") != "hello":
        raise AdapterError("launch", f"first message must be a hello, got {obj.get('type')!r}")
    if obj.get("protocol") != PROTOCOL:
        raise AdapterError(
            "launch", f"unsupported protocol {obj.get('protocol')!r} (want {PROTOCOL!r})"
        )
    name, version, role = obj.get("name"), obj.get("version"), obj.get("role")
    if not isinstance(name, str) or not name or not isinstance(version, str) or not version:
        raise AdapterError("launch", "hello must carry non-empty string name and version")
    if role not in ROLES:
        raise AdapterError("launch", f"hello declares unknown role {role!r}")
    if expected_role is not None and role != expected_role:
        raise AdapterError(
            "launch",
            f"role mismatch: configured {expected_role!r} but {' '.join(command)} "
            f"declared {role!r}",
        )
    space = None
    length = None
    if role == "transform":
        params = obj.get("params")
        if not isinstance(params, list) or not params:
            raise AdapterError("launch", "transform hello must declare a non-empty params list")
        try:
            space = ParamSpace(tuple(spec_from_obj(p) for p in params))
        except (ParamError, ParseError) as exc:
            raise AdapterError("launch", f"declared parameter space is invalid: {exc}") from exc
    elif role == "encoder":
        length = obj.get("descriptor_length")
        if not isinstance(length, int) or isinstance(length, bool) or length < 1:
            raise AdapterError("launch", "encoder hello must declare descriptor_length >= 1")
    return Capabilities(name=name, version=version, role=role, space=space, descriptor_length=length)


class AdapterSession:
    """One child process plus the sequential request/reply channel to it.

    ``expected_role`` defaults to the endpoint's role; pass ``None`` to
    accept whatever role the hello declares (conformance probing).
    """

    def __init__(self, endpoint: AdapterEndpoint, expected_role: str | None = "endpoint"):
        if expected_role == "endpoint":
            expected_role = endpoint.role
        self.endpoint = endpoint
        self._next_id = 0
        self._closed = False
        self._lock = threading.Lock()
        self._queue: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                endpoint.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterError("launch", f"cannot launch {' '.join(endpoint.command)}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self.capabilities = _parse_hello(
                self._read_message(), expected_role, endpoint.command
            )
        except AdapterError:
            self._shutdown_process()
            raise

    # --- wire plumbing --------------------------------------------------

    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._queue.put(line)
        except ValueError:
            pass  # stream closed during shutdown
        self._queue.put(_EOF)

    def _read_message(self) -> dict:
        cmd = " ".join(self.endpoint.command)
        try:
            line = self._queue.get(timeout=self.endpoint.timeout)
        except queue.Empty:
            if self._proc.poll() is not None:
                raise AdapterError("crash", f"adapter exited (status {self._proc.returncode}): {cmd}")
            raise AdapterError(
                "timeout", f"no message within {self.endpoint.timeout:g}s from {cmd}"
            )
        if line is _EOF:
            status = self._proc.poll()
            raise AdapterError("crash", f"adapter closed its output (status {status}): {cmd}")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError("protocol", f"undecodable message from {cmd}: {exc}")
        if not isinstance(obj, dict):
            raise AdapterError("protocol", f"message from {cmd} is not a JSON object")
        return obj

    def request(self, payload: dict) -> dict:
        """Send one request and wait for its matching reply.

        Any timeout, crash, or protocol breach poisons the session (the
        reply stream is no longer trustworthy); a well-formed error reply
        does not.
        """
        with self._lock:
            if self._closed:
                raise AdapterError("protocol", "adapter session is closed")
            self._next_id += 1
            rid = self._next_id
            message = dict(payload)
            message["id"] = rid
            try:
                self._proc.stdin.write(json.dumps(message) + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError) as exc:
                self._abort()
                raise AdapterError(
                    "crash", f"cannot write to adapter {' '.join(self.endpoint.command)}: {exc}"
                ) from exc
            try:
                reply = self._read_message()
            except AdapterError:
                self._abort()
                raise
            if reply.get("id") != rid:
                self._abort()
                raise AdapterError(
                    "protocol", f"reply id {reply.get('id')!r} does not match request {rid}"
                )
            if reply.get("type") == "error":
                code = reply.get("code")
                if code not in REMOTE_CODES:
                    self._abort()
                    raise AdapterError("protocol", f"error reply with unknown code {code!r}")
                raise AdapterError("remote", f"{code}: {reply.get('message', '')}")
            if reply.get("type") != "result":
                self._abort()
                raise AdapterError("protocol", f"unexpected reply type {reply.get('type')!r}")
            return reply

    # --- role operations -------------------------------------------------

    def transform(self, input_path, assignment: dict, output_path) -> ImageBuf:
        """Run one remote transform and return the decoded output image."""
        self._require_role("transform")
        self.request(
            {
                "type": "transform",
                "input": str(input_path),
                "output": str(output_path),
                "assignment": assignment,
            }
        )
        if not Path(output_path).is_file():
            raise AdapterError("protocol", f"adapter did not write {output_path}")
        try:
            return load_image(output_path)
        except (ImageError, OSError) as exc:
            raise AdapterError("protocol", f"adapter output is unreadable: {exc}") from exc

    def encode(self, input_path) -> StyleDescriptor:
        """Run one remote encode and return the tagged descriptor."""
        self._require_role("encoder")
        reply = self.request({"type": "encode", "input": str(input_path)})
        vector = reply.get("vector")
        if not isinstance(vector, list):
            raise AdapterError("protocol", "encode reply carries no vector list")
        declared = self.capabilities.descriptor_length
        if len(vector) != declared:
            raise AdapterError(
                "protocol", f"descriptor length {len(vector)} != declared {declared}"
            )
        try:
            return StyleDescriptor(tuple(vector), self.capabilities.id)
        except (MetricError, TypeError, ValueError) as exc:
            raise AdapterError("protocol", f"bad descriptor vector: {exc}") from exc

    def score(self, input_path) -> float:
        """Run one remote score and return the scalar objective."""
        self._require_role("scorer")
        reply = self.request({"type": "score", "input": str(input_path)})
        score = reply.get("score")
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise AdapterError("protocol", "score reply carries no numeric score")
        if not math.isfinite(score):
            raise AdapterError("protocol", f"non-finite score {score!r}")
        return float(score)

    def _require_role(self, role: str):
        if self.capabilities.role != role:
            raise AdapterError(
                "protocol", f"operation needs role {role!r}, session is {self.capabilities.role!r}"
            )

    # --- lifecycle --------------------------------------------------------

    def close(self):
        """Ask the child to exit, then make sure it does."""
        if self._closed:
            return
        self._closed = True
        try:
            self._next_id += 1
            self._proc.stdin.write(json.dumps({"type": "shutdown", "id": self._next_id}) + "\n")
            self._proc.stdin.flush()
            self._proc.stdin.close()
        except (OSError, ValueError):
            pass
        self._shutdown_process()

    def _abort(self):
        """Poison the session and terminate the child without ceremony.

        Used when the child already breached the protocol: waiting for a
        graceful exit would delay the error past the caller's deadline.
        """
        self._closed = True
        self._proc.terminate()
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def _shutdown_process(self):
        self._closed = True
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def handshake(endpoint: AdapterEndpoint) -> Capabilities:
    """Launch, read the hello, shut down; returns what the child declared."""
    with AdapterSession(endpoint) as session:
        return session.capabilities


# --- drivers used by transcription sessions ------------------------------


class AdapterEngine:
    """Transform-role adapter behind the engine interface sessions use."""

    def __init__(self, endpoint: AdapterEndpoint):
        if endpoint.role != "transform":
            raise AdapterError("launch", "engine adapter must have role 'transform'")
        self.session = AdapterSession(endpoint)
        self.space = self.session.capabilities.space
        self.id = self.session.capabilities.id
        self._scratch = Path(tempfile.mkdtemp(prefix="stylefit-engine-"))
        self._in = self._scratch / "in.png"
        self._out = self._scratch / "out.png"

    def transform(self, img: ImageBuf, assignment: dict) -> ImageBuf:
        save_image(img, self._in)
        self._out.unlink(missing_ok=True)
        return self.session.transform(self._in, assignment, self._out)

    def close(self):
        self.session.close()
        shutil.rmtree(self._scratch, ignore_errors=True)


class AdapterEncoderMetric:
    """Encoder-role adapter behind the metric interface sessions use."""

    mode = "encoder"

    def __init__(self, endpoint: AdapterEndpoint):
        if endpoint.role != "encoder":
            raise AdapterError("launch", "encoder metric adapter must have role 'encoder'")
        self.session = AdapterSession(endpoint)
        self.id = self.session.capabilities.id
        self._scratch = Path(tempfile.mkdtemp(prefix="stylefit-encoder-"))
        self._in = self._scratch / "in.png"

    def encode(self, img: ImageBuf) -> StyleDescriptor:
        save_image(img, self._in)
        return self.session.encode(self._in)

    def close(self):
        self.session.close()
        shutil.rmtree(self._scratch, ignore_errors=True)


class AdapterScorerMetric:
    """Scorer-role adapter behind the metric interface sessions use."""

    mode = "scorer"

    def __init__(self, endpoint: AdapterEndpoint):
        if endpoint.role != "scorer":
            raise AdapterError("launch", "scorer metric adapter must have role 'scorer'")
        self.session = AdapterSession(endpoint)
        self.id = self.session.capabilities.id
        self._scratch = Path(tempfile.mkdtemp(prefix="stylefit-scorer-"))
        self._in = self._scratch / "in.png"

    def score(self, img: ImageBuf) -> float:
        save_image(img, self._in)
        return self.session.score(self._in)

    def close(self):
        self.session.close()
        shutil.rmtree(self._scratch, ignore_errors=True)


# --- conformance checking (the adapter-check subcommand) ------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _test_image() -> ImageBuf:
    from .fixtures import content_image

    return content_image("waves", seed=0, size=64)


def run_adapter_check(command, timeout: float = DEFAULT_TIMEOUT) -> list[CheckResult]:
    """Exercise one adapter against the protocol; one record per check.

    The adapter's role is taken from its own hello (a conformance run has
    no configured expectation), then every role-appropriate check runs.
    """
    results: list[CheckResult] = []

    def record(name: str, ok: bool, detail: str = ""):
        results.append(CheckResult(name, ok, detail))
        return ok

    # First launch: learn the declared role.
    try:
        with AdapterSession(
            AdapterEndpoint(tuple(command), "transform", timeout), expected_role=None
        ) as probe:
            declared = probe.capabilities.role
    except AdapterError as exc:
        record("hello", False, f"[{exc.category}] {exc}")
        return results

    # Second launch: a strict session in the declared role.
    endpoint = AdapterEndpoint(tuple(command), declared, timeout)
    try:
        session = AdapterSession(endpoint)
    except AdapterError as exc:
        record("hello", False, f"[{exc.category}] {exc}")
        return results
    caps = session.capabilities
    record("hello", True, f"{caps.id} role={caps.role}")

    scratch = Path(tempfile.mkdtemp(prefix="stylefit-check-"))
    try:
        img = _test_image()
        in_path = scratch / "in.png"
        save_image(img, in_path)

        if caps.role == "transform":
            try:
                identity = identity_assignment(caps.space)
                record("declares-identities", True, f"{len(caps.space)} parameters")
            except ParamError as exc:
                identity = None
                record("declares-identities", False, str(exc))
            if identity is not None:
                try:
                    out1 = session.transform(in_path, identity, scratch / "out1.png")
                    record("responds", True, "identity transform produced a decodable PNG")
                    out2 = session.transform(in_path, identity, scratch / "out2.png")
                    same = (scratch / "out1.png").read_bytes() == (scratch / "out2.png").read_bytes()
                    record(
                        "deterministic",
                        same,
                        "repeat produced identical bytes" if same else "outputs differ",
                    )
                    del out1, out2
                except AdapterError as exc:
                    record("responds", False, f"[{exc.category}] {exc}")
        elif caps.role == "encoder":
            try:
                d1 = session.encode(in_path)
                record("responds", True, f"vector of length {len(d1)}")
                d2 = session.encode(in_path)
                same = d1.values == d2.values
                record(
                    "deterministic",
                    same,
                    "repeat produced an identical vector" if same else "vectors differ",
                )
            except AdapterError as exc:
                record("responds", False, f"[{exc.category}] {exc}")
        else:
            try:
                s1 = session.score(in_path)
                record("responds", True, f"score {s1!r}")
                s2 = session.score(in_path)
                record(
                    "deterministic",
                    s1 == s2,
                    "repeat produced an identical score" if s1 == s2 else f"{s1!r} != {s2!r}",
                )
            except AdapterError as exc:
                record("responds", False, f"[{exc.category}] {exc}")

        # A request missing its required fields must earn an error reply,
        # not a crash or silence.
        request_type = {"transform": "transform", "encoder": "encode", "scorer": "score"}
        try:
            session.request({"type": request_type[caps.role]})
            record("rejects-bad-request", False, "malformed request was accepted")
        except AdapterError as exc:
            if exc.category == "remote":
                record("rejects-bad-request", True, str(exc))
            else:
                record("rejects-bad-request", False, f"[{exc.category}] {exc}")

        session.close()
        status = session._proc.returncode
        record("shutdown", status == 0, f"exit status {status}")
    finally:
        session.close()
        shutil.rmtree(scratch, ignore_errors=True)
    return results


__all__ = [
    "AdapterEncoderMetric",
    "AdapterEndpoint",
    "AdapterEngine",
    "AdapterError",
    "AdapterScorerMetric",
    "AdapterSession",
    "Capabilities",
    "CheckResult",
    "DEFAULT_TIMEOUT",
    "PROTOCOL",
    "REMOTE_CODES",
    "ROLES",
    "handshake",
    "run_adapter_check",
]
