"""JSON snapshots, persisted stores and tick scripts."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .algebra import SourceObject, SourceSnapshot, resolve_schema
from .dsl import Document, parse_schema, print_schema
from .errors import DanglingRef, DslError, InverseMismatch, IoError, SchemaMismatch, UnknownClass, UnknownProperty
from .model import SourceSchema, State, WarehouseObject, WarehouseStore
from .refresh import RefreshTick
from .temporal import TemporalUnit, format_domain, format_instant, parse_domain, parse_instant
from .values import Collection, Ref, RefType, StructType, Type, ValueSet, from_json, to_json

STORE_FORMAT = 1


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise IoError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None


def _write_text(path: str | Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror}") from None


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def read_schema(path: str | Path) -> tuple[Document, str]:
    """Parse a schema file; returns the document and its canonical text."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror}") from None
    doc = parse_schema(text)
    return doc, print_schema(doc)


def schema_hash(canonical_text: str) -> str:
    return hashlib.sha256(canonical_text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------


def _decode(v: Any, t: Type, refs: list[str]) -> Any:
    if v is None:
        return None
    if isinstance(t, RefType):
        if isinstance(v, dict) and set(v) == {"$ref"}:
            v = v["$ref"]
        if not isinstance(v, str):
            raise IoError(f"relationship value {v!r} is not an oid")
        refs.append(v)
        return Ref(v)
    if isinstance(t, Collection):
        if isinstance(v, dict) and set(v) == {"$set"}:
            v = v["$set"]
        if isinstance(v, str) and isinstance(t.elem, RefType):
            v = [v]
        if not isinstance(v, list):
            raise IoError(f"expected a list for {t}, got {v!r}")
        items = [_decode(x, t.elem, refs) for x in v]
        return ValueSet(items) if t.kind == "Set" else items
    if isinstance(t, StructType):
        if not isinstance(v, dict):
            raise IoError(f"expected an object for {t}, got {v!r}")
        fields = t.field_map()
        unknown = set(v) - set(fields)
        if unknown:
            raise UnknownProperty(f"unknown struct field(s) {sorted(unknown)}")
        return {n: _decode(v.get(n), ft, refs) for n, ft in t.fields}
    return from_json(v)


def snapshot_from_json(doc: dict, schema: SourceSchema, check_inverses: bool = True) -> SourceSnapshot:
    """Decode a snapshot document against the source schema."""
    if not isinstance(doc, dict) or "classes" not in doc:
        raise IoError("snapshot needs a 'classes' object")
    at = parse_instant(doc["at"]) if doc.get("at") else None
    snap = SourceSnapshot(schema, at)
    owner: dict[str, str] = {}
    pending: list[tuple[str, str, str, list[str]]] = []
    for cname, rows in doc["classes"].items():
        if cname not in schema.classes:
            raise UnknownClass(f"snapshot class {cname!r} is not in the source schema")
        props = schema.all_properties(cname)
        objs = snap.objects.setdefault(cname, [])
        for row in rows:
            oid = row.get("oid")
            if not isinstance(oid, str):
                raise IoError(f"{cname} object without a string oid")
            if oid in owner:
                raise IoError(f"duplicate oid {oid!r}")
            owner[oid] = cname
            unknown = set(row) - set(props) - {"oid"}
            if unknown:
                raise UnknownProperty(f"{cname} has no propert{'y' if len(unknown) == 1 else 'ies'} {', '.join(sorted(unknown))}")
            value = {}
            for pname, (_, prop) in props.items():
                refs: list[str] = []
                value[pname] = _decode(row.get(pname), prop.type, refs)
                if refs:
                    pending.append((oid, cname, pname, refs))
            objs.append(SourceObject(oid, value))
    by_oid = {o.oid: o for objs in snap.objects.values() for o in objs}
    for oid, cname, pname, refs in pending:
        for r in refs:
            if r not in by_oid:
                raise DanglingRef(f"{cname} {oid}.{pname} refers to unknown oid {r!r}")
    if check_inverses:
        _check_inverses(snap, by_oid, owner)
    return snap


def _targets(v: Any) -> list[str]:
    if isinstance(v, Ref):
        return [v.oid]
    if isinstance(v, (list, ValueSet)):
        return [x.oid for x in v if isinstance(x, Ref)]
    return []


def _check_inverses(snap: SourceSnapshot, by_oid: dict[str, SourceObject], owner: dict[str, str]) -> None:
    schema = snap.schema
    for cname, objs in snap.objects.items():
        for pname, (_, prop) in schema.all_properties(cname).items():
            if prop.kind != "relationship" or not prop.inverse:
                continue
            inv_cls, inv_prop = prop.inverse
            for o in objs:
                for r in _targets(o.value.get(pname)):
                    tcls = owner[r]
                    if tcls != inv_cls and inv_cls not in schema.ancestors(tcls):
                        raise InverseMismatch(f"{o.oid}.{pname} refers to {r}, which is not a {inv_cls}")
                    if o.oid not in _targets(by_oid[r].value.get(inv_prop)):
                        raise InverseMismatch(f"{o.oid}.{pname} contains {r} but {r}.{inv_prop} lacks {o.oid}")


def load_snapshot(path: str | Path, schema: SourceSchema, check_inverses: bool = True) -> SourceSnapshot:
    return snapshot_from_json(_read_json(path), schema, check_inverses)


def _encode_source(v: Any) -> Any:
    if isinstance(v, Ref):
        return v.oid
    if isinstance(v, (list, ValueSet)):
        return [_encode_source(x) for x in v]
    if isinstance(v, dict):
        return {k: _encode_source(x) for k, x in v.items()}
    return v


def snapshot_to_json(snap: SourceSnapshot) -> dict:
    classes = {}
    for cname, objs in snap.objects.items():
        classes[cname] = [{"oid": o.oid, **{k: _encode_source(v) for k, v in o.value.items() if v is not None}} for o in objs]
    out: dict[str, Any] = {}
    if snap.at is not None:
        out["at"] = format_instant(snap.at)
    out["classes"] = classes
    return out


# ---------------------------------------------------------------------------
# Stores
# ---------------------------------------------------------------------------


def _state_json(s: State) -> dict:
    return {"domain": format_domain(s.domain), "value": to_json(s.value)}


def _state_from(d: dict) -> State:
    return State(from_json(d["value"]), parse_domain(d["domain"]))


def store_to_json(store: WarehouseStore) -> dict:
    text = store.schema_text or print_schema(Document(store.schema.source, store.schema))
    classes = {}
    for cname, ext in store.extents.items():
        rows = []
        for o in ext.values():
            rows.append(
                {
                    "oid": o.oid,
                    "lineage_key": o.lineage_key,
                    "current": _state_json(o.current) if o.current else None,
                    "past": [_state_json(s) for s in o.past],
                    "archived": [_state_json(s) for s in o.archived],
                    "members": list(o.members),
                }
            )
        classes[cname] = {"objects": rows}
    return {
        "format": STORE_FORMAT,
        "schema_hash": schema_hash(text),
        "schema": text,
        "unit": store.unit.value,
        "next_oid": store.next_oid,
        "last_tick": {c: format_instant(t) for c, t in store.last_tick.items()},
        "classes": classes,
    }


def store_from_json(doc: dict, expected_hash: str | None = None) -> WarehouseStore:
    try:
        text = doc["schema"]
        recorded = doc["schema_hash"]
    except (KeyError, TypeError):
        raise IoError("store document lacks schema or schema_hash") from None
    if doc.get("format") != STORE_FORMAT:
        raise IoError(f"unsupported store format {doc.get('format')!r}")
    if schema_hash(text) != recorded:
        raise SchemaMismatch("embedded schema does not match the recorded schema hash")
    if expected_hash is not None and expected_hash != recorded:
        raise SchemaMismatch("store was built from a different schema")
    try:
        parsed = parse_schema(text)
    except DslError as e:
        raise SchemaMismatch(f"embedded schema does not parse: {e}") from None
    schema = parsed.schema
    resolve_schema(schema)
    store = WarehouseStore(schema, text, TemporalUnit(doc["unit"]), next_oid=doc["next_oid"])
    store.last_tick = {c: parse_instant(t) for c, t in doc.get("last_tick", {}).items()}
    for cname, entry in doc["classes"].items():
        if cname not in schema.classes:
            raise SchemaMismatch(f"stored class {cname!r} is not in the schema")
        ext = store.extents.setdefault(cname, {})
        for r in entry["objects"]:
            ext[r["oid"]] = WarehouseObject(
                r["oid"],
                r["lineage_key"],
                _state_from(r["current"]) if r["current"] else None,
                [_state_from(s) for s in r["past"]],
                [_state_from(s) for s in r["archived"]],
                list(r["members"]),
            )
    return store


def save_store(store: WarehouseStore, path: str | Path) -> None:
    _write_text(path, dumps(store_to_json(store)))


def load_store(path: str | Path, expected_hash: str | None = None) -> WarehouseStore:
    return store_from_json(_read_json(path), expected_hash)


# ---------------------------------------------------------------------------
# Tick scripts
# ---------------------------------------------------------------------------


def load_tickscript(path: str | Path, schema: SourceSchema) -> list[RefreshTick]:
    """Ticks from ``[{at, snapshot_path, environment, archive}]``; snapshot paths are relative to the script."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("ticks", [])
    base = Path(path).parent
    ticks = []
    for entry in doc:
        try:
            at = parse_instant(entry["at"])
            snap_path = base / entry["snapshot_path"]
        except KeyError as e:
            raise IoError(f"tick entry lacks {e.args[0]!r}") from None
        ticks.append(RefreshTick(at, load_snapshot(snap_path, schema), entry.get("environment"), bool(entry.get("archive", False))))
    return ticks
