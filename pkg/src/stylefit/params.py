"""Parameter spaces and assignments.

A :class:`ParamSpace` is an ordered list of named parameter specs
(continuous, integer, or categorical). An assignment is a plain dict
mapping every parameter name to a value inside its spec's domain.
Spaces and assignments serialize to JSON with round-trip-exact reals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

Value = Union[float, int, str]

KINDS = ("continuous", "integer", "categorical")


class ParamError(ValueError):
    """Invalid spec, space, or serialized document."""


class ParseError(ParamError):
    """Malformed serialized space/assignment text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ParamSpec:
    """One named parameter: its kind, domain, and optional identity value.

    The identity value is the "transform off" setting; spaces whose specs
    all declare one support :func:`identity_assignment`.
    """

    name: str
    kind: str
    low: float | int | None = None
    high: float | int | None = None
    choices: tuple[str, ...] | None = None
    identity: Value | None = None

    def __post_init__(self):
        if not self.name:
            raise ParamError("parameter name must be non-empty")
        if self.kind not in KINDS:
            raise ParamError(f"unknown parameter kind {self.kind!r} for {self.name!r}")
        if self.kind == "continuous":
            if self.low is None or self.high is None:
                raise ParamError(f"continuous parameter {self.name!r} needs low/high bounds")
            object.__setattr__(self, "low", float(self.low))
            object.__setattr__(self, "high", float(self.high))
            if not self.low < self.high:
                raise ParamError(f"continuous parameter {self.name!r} needs low < high")
        elif self.kind == "integer":
            if self.low is None or self.high is None:
                raise ParamError(f"integer parameter {self.name!r} needs low/high bounds")
            if int(self.low) != self.low or int(self.high) != self.high:
                raise ParamError(f"integer parameter {self.name!r} has non-integer bounds")
            object.__setattr__(self, "low", int(self.low))
            object.__setattr__(self, "high", int(self.high))
            if not self.low <= self.high:
                raise ParamError(f"integer parameter {self.name!r} needs low <= high")
        else:
            if not self.choices:
                raise ParamError(f"categorical parameter {self.name!r} needs >= 1 choice")
            object.__setattr__(self, "choices", tuple(self.choices))
            if len(set(self.choices)) != len(self.choices):
                raise ParamError(f"categorical parameter {self.name!r} has duplicate choices")
        if self.identity is not None:
            problem = self._check_value(self.identity)
            if problem is not None:
                raise ParamError(f"identity for {self.name!r} is invalid: {problem}")
            if self.kind == "continuous":
                object.__setattr__(self, "identity", float(self.identity))
            elif self.kind == "integer":
                object.__setattr__(self, "identity", int(self.identity))

    def _check_value(self, value: Value) -> str | None:
        """Return a violation description, or None if the value is legal."""
        if self.kind == "categorical":
            if not isinstance(value, str):
                return f"expected a choice label, got {type(value).__name__}"
            if value not in self.choices:
                return f"unknown choice {value!r}"
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return f"expected a number, got {type(value).__name__}"
        if self.kind == "integer" and int(value) != value:
            return f"expected an integer, got {value!r}"
        if not self.low <= value <= self.high:
            return f"value {value!r} outside [{self.low}, {self.high}]"
        return None


@dataclass(frozen=True)
class ParamSpace:
    """Ordered collection of :class:`ParamSpec`; order is significant."""

    specs: tuple[ParamSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise ParamError("parameter names must be pairwise distinct")

    def __iter__(self):
        return iter(self.specs)

    def __len__(self):
        return len(self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def spec(self, name: str) -> ParamSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise KeyError(name)


@dataclass(frozen=True)
class Violation:
    """One validation failure for a single parameter name."""

    name: str
    code: str  # missing | extra | out_of_bounds | unknown_choice | wrong_type
    message: str


def validate(space: ParamSpace, assignment: dict) -> list[Violation]:
    """Check an assignment against a space; empty list means ok.

    Violations are data, not exceptions: one record per offending name.
    """
    violations = []
    seen = set()
    for spec in space:
        seen.add(spec.name)
        if spec.name not in assignment:
            violations.append(Violation(spec.name, "missing", f"missing parameter {spec.name!r}"))
            continue
        problem = spec._check_value(assignment[spec.name])
        if problem is None:
            continue
        if spec.kind == "categorical":
            code = "unknown_choice" if isinstance(assignment[spec.name], str) else "wrong_type"
        elif isinstance(assignment[spec.name], bool) or not isinstance(
            assignment[spec.name], (int, float)
        ):
            code = "wrong_type"
        else:
            code = "out_of_bounds"
        violations.append(Violation(spec.name, code, f"{spec.name!r}: {problem}"))
    for name in assignment:
        if name not in seen:
            violations.append(Violation(name, "extra", f"unknown parameter {name!r}"))
    return violations


def require_valid(space: ParamSpace, assignment: dict) -> None:
    """Raise :class:`ParamError` listing all violations, if any."""
    violations = validate(space, assignment)
    if violations:
        raise ParamError("; ".join(v.message for v in violations))


def identity_assignment(space: ParamSpace) -> dict:
    """The all-identities assignment (every transform at its "off" value)."""
    values = {}
    for spec in space:
        if spec.identity is None:
            raise ParamError(f"parameter {spec.name!r} declares no identity value")
        values[spec.name] = spec.identity
    return values


# --- JSON serialization ------------------------------------------------
#
# A space document is a JSON array of spec objects; an assignment document
# is a flat name -> value object. Reals rely on json's repr rendering,
# which round-trips doubles exactly.


def spec_to_obj(spec: ParamSpec) -> dict:
    obj: dict = {"name": spec.name, "kind": spec.kind}
    if spec.kind in ("continuous", "integer"):
        obj["low"] = spec.low
        obj["high"] = spec.high
    else:
        obj["choices"] = list(spec.choices)
    if spec.identity is not None:
        obj["identity"] = spec.identity
    return obj


def spec_from_obj(obj: dict) -> ParamSpec:
    if not isinstance(obj, dict):
        raise ParseError(f"expected a spec object, got {type(obj).__name__}")
    unknown = set(obj) - {"name", "kind", "low", "high", "choices", "identity"}
    if unknown:
        raise ParseError(f"unknown spec fields: {sorted(unknown)}")
    try:
        choices = obj.get("choices")
        return ParamSpec(
            name=obj.get("name", ""),
            kind=obj.get("kind", ""),
            low=obj.get("low"),
            high=obj.get("high"),
            choices=tuple(choices) if choices is not None else None,
            identity=obj.get("identity"),
        )
    except ParamError as exc:
        raise ParseError(str(exc)) from exc


def space_to_json(space: ParamSpace, indent: int | None = 2) -> str:
    return json.dumps([spec_to_obj(s) for s in space], indent=indent)


def space_from_json(text: str) -> ParamSpace:
    data = _loads(text)
    if not isinstance(data, list):
        raise ParseError("space document must be a JSON array of spec objects")
    try:
        return ParamSpace(tuple(spec_from_obj(o) for o in data))
    except ParamError as exc:
        raise ParseError(str(exc)) from exc


def assignment_to_json(assignment: dict, indent: int | None = None) -> str:
    return json.dumps(assignment, indent=indent)


def assignment_from_json(text: str) -> dict:
    data = _loads(text)
    if not isinstance(data, dict):
        raise ParseError("assignment document must be a JSON object")
    return data


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
