"""Runtime values and semantic types.

Values are plain Python where possible: ``None``, ``bool``, ``int``, ``float``,
``str``, ``dict`` (struct), ``list`` (ordered collection). Sets use
:class:`ValueSet` so that structurally equal members collapse, and object
references use :class:`Ref`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Union

from .errors import TypeMismatch


@dataclass(frozen=True, order=True)
class Ref:
    oid: str

    def __str__(self) -> str:
        return f"@{self.oid}"


class ValueSet:
    """Immutable set with structural member equality, kept in canonical order."""

    __slots__ = ("_items", "_keys")

    def __init__(self, items: Iterable[Any] = ()):
        seen = {}
        for it in items:
            seen.setdefault(canon(it), it)
        keys = sorted(seen)
        self._keys = tuple(keys)
        self._items = tuple(seen[k] for k in keys)

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, v) -> bool:
        return canon(v) in self._keys

    def __eq__(self, other) -> bool:
        return isinstance(other, ValueSet) and self._keys == other._keys

    def __hash__(self) -> int:
        return hash(self._keys)

    def __repr__(self) -> str:
        return "ValueSet(%r)" % (list(self._items),)


Value = Union[None, bool, int, float, str, dict, list, ValueSet, Ref]


def canon(v: Any) -> tuple:
    """Hashable, totally ordered key; equal keys iff structurally equal values."""
    if v is None:
        return (0,)
    if isinstance(v, bool):
        return (1, v)
    if isinstance(v, (int, float)):
        if isinstance(v, float) and math.isnan(v):
            return (2, float("inf"), 1)
        return (2, v, 0)
    if isinstance(v, str):
        return (3, v)
    if isinstance(v, dict):
        return (4, tuple(sorted((k, canon(x)) for k, x in v.items())))
    if isinstance(v, (list, tuple)):
        return (5, tuple(canon(x) for x in v))
    if isinstance(v, ValueSet):
        return (6, v._keys)
    if isinstance(v, Ref):
        return (7, v.oid)
    raise TypeMismatch(f"unsupported value {v!r}")


def is_numeric(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def is_collection(v: Any) -> bool:
    return isinstance(v, (list, ValueSet))


# ---------------------------------------------------------------------------
# JSON encoding (tagged for sets and references)
# ---------------------------------------------------------------------------


def to_json(v: Any) -> Any:
    if isinstance(v, Ref):
        return {"$ref": v.oid}
    if isinstance(v, ValueSet):
        return {"$set": [to_json(x) for x in v]}
    if isinstance(v, dict):
        return {k: to_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_json(x) for x in v]
    return v


def from_json(v: Any) -> Any:
    if isinstance(v, dict):
        if set(v) == {"$ref"}:
            return Ref(v["$ref"])
        if set(v) == {"$set"}:
            return ValueSet(from_json(x) for x in v["$set"])
        return {k: from_json(x) for k, x in v.items()}
    if isinstance(v, list):
        return [from_json(x) for x in v]
    return v


def canonical_json(v: Any) -> str:
    return json.dumps(to_json(v), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def format_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, Ref):
        return str(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {format_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, ValueSet):
        return "{|" + ", ".join(format_value(x) for x in v) + "|}"
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return repr(v)


# ---------------------------------------------------------------------------
# Semantic types
# ---------------------------------------------------------------------------

INTEGER_TYPES = {"Short", "Long", "Integer", "Unsigned Short", "Unsigned Long", "Octet", "integer"}
REAL_TYPES = {"Float", "Double", "Real", "real"}
SCALAR_TYPES = INTEGER_TYPES | REAL_TYPES | {"String", "Char", "Boolean", "Date", "Any", "string", "boolean"}


@dataclass(frozen=True)
class Scalar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class StructType:
    fields: tuple[tuple[str, "Type"], ...]
    name: str | None = None

    def field_map(self) -> dict[str, "Type"]:
        return dict(self.fields)

    def __str__(self) -> str:
        body = ", ".join(f"{t} {n}" for n, t in self.fields)
        return f"Struct {self.name}{{{body}}}" if self.name else f"Struct{{{body}}}"


@dataclass(frozen=True)
class Collection:
    kind: str  # Set | List | Bag | Array
    elem: "Type"

    def __str__(self) -> str:
        return f"{self.kind}<{self.elem}>"


@dataclass(frozen=True)
class RefType:
    target: str

    def __str__(self) -> str:
        return self.target


Type = Union[Scalar, StructType, Collection, RefType]

SHORT = Scalar("Short")
LONG = Scalar("Long")
DOUBLE = Scalar("Double")
STRING = Scalar("String")
BOOLEAN = Scalar("Boolean")
ANY = Scalar("Any")


def is_numeric_type(t: Type) -> bool:
    return isinstance(t, Scalar) and (t.name in INTEGER_TYPES or t.name in REAL_TYPES)


def is_ref_like(t: Type) -> bool:
    return isinstance(t, RefType) or (isinstance(t, Collection) and isinstance(t.elem, RefType))


def conforms(v: Any, t: Type) -> bool:
    """Shallow-but-recursive structural conformance; ``None`` conforms to anything."""
    if v is None:
        return True
    if isinstance(t, Scalar):
        n = t.name
        if n == "Any":
            return True
        if n in INTEGER_TYPES:
            return isinstance(v, int) and not isinstance(v, bool)
        if n in REAL_TYPES:
            return is_numeric(v)
        if n in ("Boolean", "boolean"):
            return isinstance(v, bool)
        return isinstance(v, str)
    if isinstance(t, RefType):
        return isinstance(v, Ref)
    if isinstance(t, Collection):
        if t.kind == "Set" and not isinstance(v, ValueSet):
            return False
        if t.kind != "Set" and not isinstance(v, list):
            return False
        return all(conforms(x, t.elem) for x in v)
    if isinstance(t, StructType):
        fm = t.field_map()
        return isinstance(v, dict) and set(v) == set(fm) and all(conforms(v[k], fm[k]) for k in fm)
    return False
