"""Reference adapter child: the builtin chain/metric behind the wire protocol.

Run as ``python -m stylefit.echo_adapter --role transform|encoder``. It
implements the child side of the ``stylefit-adapter/1`` protocol using
the in-process builtin implementations, so any transcription driven
through it must reproduce the in-process results exactly. It doubles as
the working example for third-party adapter authors and as the
conformance fixture for ``stylefit adapter-check``.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .image import ImageError, load_image, quantize, save_image
from .metric import BUILTIN_LENGTH, encode_builtin
from .params import require_valid, spec_to_obj, ParamError
from .transforms import TransformError, apply_chain, builtin_space

NAME_BY_ROLE = {"transform": "echo-transform", "encoder": "echo-encoder"}


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def _error(rid, code: str, message: str) -> None:
    _emit({"type": "error", "id": rid, "code": code, "message": message})


def _handle_transform(request: dict, space) -> dict:
    for field in ("input", "output", "assignment"):
        if field not in request:
            raise _BadRequest(f"transform request needs {field!r}")
    if not isinstance(request["assignment"], dict):
        raise _BadRequest("assignment must be an object")
    try:
        require_valid(space, request["assignment"])
    except ParamError as exc:
        raise _BadRequest(str(exc))
    try:
        img = load_image(request["input"])
    except (ImageError, OSError) as exc:
        raise _BadRequest(f"cannot read input image: {exc}")
    try:
        out = quantize(apply_chain(img, request["assignment"]))
        save_image(out, request["output"])
    except (TransformError, OSError) as exc:
        raise _BadRequest(f"cannot produce output: {exc}")
    return {"ok": True}


def _handle_encode(request: dict) -> dict:
    if "input" not in request:
        raise _BadRequest("encode request needs 'input'")
    try:
        img = load_image(request["input"])
    except (ImageError, OSError) as exc:
        raise _BadRequest(f"cannot read input image: {exc}")
    descriptor = encode_builtin(img)
    return {"vector": list(descriptor.values)}


class _BadRequest(Exception):
    pass


def serve(role: str) -> int:
    hello = {
        "type": "hello",
        "protocol": "stylefit-adapter/1",
        "name": NAME_BY_ROLE[role],
        "version": __version__,
        "role": role,
    }
    space = builtin_space()
    if role == "transform":
        hello["params"] = [spec_to_obj(s) for s in space]
    else:
        hello["descriptor_length"] = BUILTIN_LENGTH
    _emit(hello)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            # No id to reply to; a malformed line is unanswerable.
            continue
        rid = request.get("id")
        rtype = request.get("type")
        if rtype == "shutdown":
            _emit({"type": "result", "id": rid})
            return 0
        try:
            if rtype == "transform" and role == "transform":
                body = _handle_transform(request, space)
            elif rtype == "encode" and role == "encoder":
                body = _handle_encode(request)
            else:
                _error(rid, "unsupported", f"request type {rtype!r} not supported by {role}")
                continue
        except _BadRequest as exc:
            _error(rid, "bad_request", str(exc))
            continue
        except Exception as exc:  # pragma: no cover - defensive catch-all
            _error(rid, "internal", f"{type(exc).__name__}: {exc}")
            continue
        reply = {"type": "result", "id": rid}
        reply.update(body)
        _emit(reply)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--role", choices=sorted(NAME_BY_ROLE), default="transform")
    args = parser.parse_args(argv)
    return serve(args.role)


if __name__ == "__main__":
    sys.exit(main())
