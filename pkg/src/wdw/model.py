"""Warehouse data model: source schema, warehouse classes, objects and states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import UnknownClass, UnknownMethodMeta, UnknownProperty
from .predicates import Pred
from .temporal import (
    NOW,
    Instant,
    MixedUnits,
    TemporalDomain,
    TemporalUnit,
    _same_unit,
)
from .values import StructType, Type

AGG_FUNCTIONS = ("avg", "sum", "count", "max", "min")


# ---------------------------------------------------------------------------
# Source schema (the integrated global source)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Property:
    name: str
    type: Type
    kind: str = "attribute"  # or "relationship"
    inverse: tuple[str, str] | None = None


@dataclass
class MethodSig:
    """A method signature plus the usage facts the behavior analyzer reads."""

    name: str
    owner: str
    return_type: Type | None = None
    params: str = ""
    uses_properties: frozenset[str] = frozenset()
    uses_object_predicates: Pred | None = None
    uses_methods: frozenset[str] = frozenset()
    has_usage: bool = False

    @property
    def qualified(self) -> str:
        return f"{self.owner}::{self.name}"


@dataclass
class SourceClass:
    name: str
    supers: tuple[str, ...] = ()
    properties: dict[str, Property] = field(default_factory=dict)
    methods: dict[str, MethodSig] = field(default_factory=dict)


@dataclass
class SourceSchema:
    name: str = "source"
    classes: dict[str, SourceClass] = field(default_factory=dict)

    def get(self, name: str) -> SourceClass:
        try:
            return self.classes[name]
        except KeyError:
            raise UnknownClass(f"unknown source class {name!r}") from None

    def ancestors(self, name: str) -> list[str]:
        """Transitive superclasses, nearest first, without ``name``."""
        out: list[str] = []
        stack = list(self.get(name).supers)
        while stack:
            s = stack.pop(0)
            if s not in out and s != name:
                out.append(s)
                stack.extend(self.get(s).supers)
        return out

    def descendants(self, name: str) -> list[str]:
        return [c for c in self.classes if c != name and name in self.ancestors(c)]

    def all_properties(self, name: str) -> dict[str, tuple[str, Property]]:
        """Flattened properties: inherited first, each tagged with its declaring class."""
        out: dict[str, tuple[str, Property]] = {}
        for anc in reversed(self.ancestors(name)):
            for p in self.get(anc).properties.values():
                out[p.name] = (anc, p)
        for p in self.get(name).properties.values():
            out[p.name] = (name, p)
        return out

    def all_methods(self, name: str) -> dict[str, MethodSig]:
        out: dict[str, MethodSig] = {}
        for anc in reversed(self.ancestors(name)):
            out.update(self.get(anc).methods)
        out.update(self.get(name).methods)
        return out

    def method(self, qualified: str) -> MethodSig:
        owner, _, name = qualified.partition("::")
        if not name:
            matches = [m for c in self.classes.values() for m in c.methods.values() if m.name == owner]
            if len(matches) != 1:
                raise UnknownMethodMeta(f"cannot resolve method {qualified!r}")
            return matches[0]
        meths = self.all_methods(owner)
        if name not in meths:
            raise UnknownMethodMeta(f"unknown method {qualified!r}")
        return meths[name]

    def property_paths(self, name: str) -> list[tuple[str, str]]:
        """Leaf property columns ``(declaring class, dotted path)``; structs are split."""
        out = []
        for pname, (decl, prop) in self.all_properties(name).items():
            out.extend((decl, p) for p in leaf_paths(pname, prop.type))
        return out


def leaf_paths(name: str, t: Type) -> list[str]:
    if isinstance(t, StructType):
        out = []
        for fname, ft in t.fields:
            out.extend(leaf_paths(f"{name}.{fname}", ft))
        return out
    return [name]


# ---------------------------------------------------------------------------
# Warehouse schema
# ---------------------------------------------------------------------------


@dataclass
class WarehouseClass:
    name: str
    mapping: Any = None  # algebra.Expr
    declared: dict[str, Type] = field(default_factory=dict)
    declared_props: dict[str, Property] = field(default_factory=dict)
    declared_methods: list[MethodSig] = field(default_factory=list)
    declared_supers: tuple[str, ...] = ()
    tempo_filter: tuple[str, ...] = ()
    archive_filter: dict[str, str] = field(default_factory=dict)
    # filled by resolve_schema()
    structure: dict[str, Type] = field(default_factory=dict)
    supers: tuple[str, ...] = ()


@dataclass
class Environment:
    name: str
    classes: tuple[str, ...] = ()
    refresh_period: tuple[int, TemporalUnit] | None = None
    archive_predicate: Any = None  # archive.ArchivePredicate
    archive_mode: str = "classical"
    archive_unit: TemporalUnit | None = None


@dataclass
class WarehouseSchema:
    name: str
    source: SourceSchema
    classes: dict[str, WarehouseClass] = field(default_factory=dict)
    environments: dict[str, Environment] = field(default_factory=dict)
    default_refresh: tuple[int, TemporalUnit] | None = None

    def get(self, name: str) -> WarehouseClass:
        try:
            return self.classes[name]
        except KeyError:
            raise UnknownClass(f"unknown warehouse class {name!r}") from None

    def environment_of(self, cls: str) -> Environment | None:
        for env in self.environments.values():
            if cls in env.classes:
                return env
        return None


# ---------------------------------------------------------------------------
# Objects and states
# ---------------------------------------------------------------------------


@dataclass
class State:
    value: dict[str, Any]
    domain: TemporalDomain


@dataclass
class WarehouseObject:
    oid: str
    lineage_key: Any
    current: State | None
    past: list[State] = field(default_factory=list)
    archived: list[State] = field(default_factory=list)
    members: list[str] = field(default_factory=list)

    @property
    def active(self) -> bool:
        return self.current is not None

    @property
    def unit(self) -> TemporalUnit | None:
        for s in ([self.current] if self.current else []) + self.past:
            if s.domain.unit is not None:
                return s.domain.unit
        return None


def state_at(o: WarehouseObject, t: Instant) -> State | None:
    """The current or past state valid at ``t``; archived states are not consulted."""
    unit = o.unit
    if unit is not None and unit != t.unit:
        raise MixedUnits(f"object unit {unit} vs instant unit {t.unit}")
    for s in ([o.current] if o.current else []) + o.past:
        if t.ticks in s.domain:
            return s
    return None


def history(o: WarehouseObject, p: str) -> list[tuple[TemporalDomain, Any]]:
    """Chronological ``(domain, value)`` pairs of ``p`` over past states then current."""
    out = [(s.domain, s.value[p]) for s in o.past if p in s.value]
    if o.current is not None:
        if p not in o.current.value:
            raise UnknownProperty(f"object {o.oid} has no property {p!r}")
        out.append((o.current.domain, o.current.value[p]))
    elif not out:
        raise UnknownProperty(f"object {o.oid} has no property {p!r}")
    out.sort(key=lambda pair: pair[0].start if pair[0].start is not None else 0)
    return out


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


@dataclass
class WarehouseStore:
    schema: WarehouseSchema
    schema_text: str
    unit: TemporalUnit
    extents: dict[str, dict[str, WarehouseObject]] = field(default_factory=dict)
    next_oid: int = 1
    last_tick: dict[str, Instant] = field(default_factory=dict)

    def objects(self, cls: str) -> list[WarehouseObject]:
        if cls not in self.extents:
            raise UnknownClass(f"unknown warehouse class {cls!r}")
        return list(self.extents[cls].values())

    def new_oid(self, cls: str) -> str:
        oid = f"{cls}#{self.next_oid}"
        self.next_oid += 1
        return oid

    def iter_objects(self) -> Iterator[tuple[str, WarehouseObject]]:
        for cls, ext in self.extents.items():
            for o in ext.values():
                yield cls, o


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


def inheritance_cycles(edges: dict[str, tuple[str, ...]]) -> list[list[str]]:
    """Cycles in a class -> supers graph (one representative per cycle)."""
    cycles: list[list[str]] = []
    color: dict[str, int] = {}
    stack: list[str] = []

    def dfs(n: str) -> None:
        color[n] = 1
        stack.append(n)
        for s in edges.get(n, ()):
            if color.get(s, 0) == 0:
                dfs(s)
            elif color.get(s) == 1:
                cycles.append(stack[stack.index(s):] + [s])
        stack.pop()
        color[n] = 2

    for n in sorted(edges):
        if color.get(n, 0) == 0:
            dfs(n)
    return cycles


def validate_schema(s: WarehouseSchema) -> list[Diagnostic]:
    """All invariant violations of the schema; empty when the schema is sound."""
    from .algebra import resolve_schema

    diags: list[Diagnostic] = []
    src = s.source

    for cyc in inheritance_cycles({n: c.supers for n, c in src.classes.items()}):
        diags.append(Diagnostic(f"source {cyc[0]}", "inheritance cycle " + " <= ".join(cyc)))
    for cname, c in sorted(src.classes.items()):
        for sup in c.supers:
            if sup not in src.classes:
                diags.append(Diagnostic(f"source {cname}", f"unknown superclass {sup!r}"))
        if any(sup not in src.classes for sup in c.supers):
            continue
        props = src.all_properties(cname) if not _has_cycle(src, cname) else {}
        for p in c.properties.values():
            if p.inverse:
                icls, iprop = p.inverse
                if icls not in src.classes:
                    diags.append(Diagnostic(f"source {cname}.{p.name}", f"inverse class {icls!r} unknown"))
                elif iprop not in src.all_properties(icls):
                    diags.append(Diagnostic(f"source {cname}.{p.name}", f"inverse {icls}::{iprop} unknown"))
        for m in c.methods.values():
            cols = {path for _, path in src.property_paths(cname)} if props else set()
            tops = set(props)
            for u in sorted(m.uses_properties):
                if u not in cols and u not in tops:
                    diags.append(Diagnostic(f"source {m.qualified}", f"uses unknown property {u!r}"))
            for um in sorted(m.uses_methods):
                try:
                    src.method(um)
                except Exception:
                    diags.append(Diagnostic(f"source {m.qualified}", f"uses unknown method {um!r}"))

    diags.extend(resolve_schema(s))

    for cname, wc in sorted(s.classes.items()):
        loc = f"class {cname}"
        names = set(wc.structure)
        for t in wc.tempo_filter:
            if names and t not in names:
                diags.append(Diagnostic(loc, f"temporal filter names unknown property {t!r}"))
        extra = set(wc.archive_filter) - set(wc.tempo_filter)
        for p in sorted(extra):
            diags.append(Diagnostic(loc, f"archive filter property {p!r} is not temporal (archive ⊄ tempo)"))
        for p, fn in sorted(wc.archive_filter.items()):
            if fn not in AGG_FUNCTIONS:
                diags.append(Diagnostic(loc, f"unknown aggregation {fn!r} for {p!r}"))
        for sup in wc.supers:
            if sup not in s.classes:
                diags.append(Diagnostic(loc, f"unknown superclass {sup!r}"))
                continue
            missing = set(s.classes[sup].structure) - names
            if names and missing:
                diags.append(Diagnostic(loc, f"structure lacks inherited properties {sorted(missing)} of {sup}"))

    for cyc in inheritance_cycles({n: c.supers for n, c in s.classes.items()}):
        diags.append(Diagnostic(f"class {cyc[0]}", "inheritance cycle " + " <= ".join(cyc)))

    owner: dict[str, str] = {}
    for ename, env in sorted(s.environments.items()):
        for c in env.classes:
            if c not in s.classes:
                diags.append(Diagnostic(f"environment {ename}", f"unknown class {c!r}"))
            elif c in owner:
                diags.append(Diagnostic(f"environment {ename}", f"class {c!r} already belongs to {owner[c]}"))
            else:
                owner[c] = ename
        if env.archive_mode == "temporal" and env.archive_unit is None:
            diags.append(Diagnostic(f"environment {ename}", "temporal archive mode needs a target unit"))
    return diags


def _has_cycle(src: SourceSchema, name: str) -> bool:
    seen = set()
    stack = [name]
    while stack:
        n = stack.pop()
        for s in src.classes[n].supers if n in src.classes else ():
            if s == name:
                return True
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return False


def check_store_invariants(store: WarehouseStore) -> list[Diagnostic]:
    """Per-object state invariants (disjointness, state structures, containment)."""
    diags = []
    schema = store.schema
    for cname, ext in store.extents.items():
        wc = schema.classes.get(cname)
        for o in ext.values():
            loc = f"{cname}/{o.oid}"
            doms = [s.domain for s in o.past] + ([o.current.domain] if o.current else [])
            seen: set[int] = set()
            for d in doms:
                _same_unit(store.unit, d.unit)
                horizon = max((iv.td for dd in doms for iv in dd), default=0) + 1
                g = d.grains(horizon)
                if seen & g:
                    diags.append(Diagnostic(loc, "overlapping state domains"))
                seen |= g
            if o.current is not None and o.current.domain.end is not NOW:
                diags.append(Diagnostic(loc, "current state does not end in NOW"))
            if wc is not None:
                for s in o.past:
                    if set(s.value) != set(wc.tempo_filter):
                        diags.append(Diagnostic(loc, "past state structure differs from temporal filter"))
                for s in o.archived:
                    if set(s.value) != set(wc.archive_filter):
                        diags.append(Diagnostic(loc, "archived state structure differs from archive filter"))
            arch_seen: dict[TemporalUnit | None, set[int]] = {}
            for s in o.archived:
                g = s.domain.grains()
                bucket = arch_seen.setdefault(s.domain.unit, set())
                if bucket & g:
                    diags.append(Diagnostic(loc, "overlapping archived domains"))
                bucket |= g
    for cname, wc in schema.classes.items():
        for sup in wc.supers:
            if sup not in store.extents or cname not in store.extents:
                continue
            sup_ids = set()
            for so in store.extents[sup].values():
                sup_ids.add(so.oid)
                sup_ids.update(so.members)
            for o in store.extents[cname].values():
                if o.oid not in sup_ids:
                    diags.append(Diagnostic(f"{cname}/{o.oid}", f"missing from superclass extension {sup}"))
    return diags
