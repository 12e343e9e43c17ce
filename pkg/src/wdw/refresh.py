"""Building and refreshing a store: current-to-past transitions driven by the temporal filter."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable

from .algebra import Generalize, Obj, SourceSnapshot, Specialize, _arg_class, evaluate_warehouse
from .archive import ArchiveReport, apply_archive
from .errors import NonMonotonicTick, ScheduleViolation, UnknownClass
from .model import State, WarehouseObject, WarehouseSchema, WarehouseStore
from .temporal import NOW, Instant, MixedUnits, TemporalDomain, TemporalUnit, Interval
from .values import canon, canonical_json, to_json

CATEGORIES = ("created", "changed", "updated", "unchanged", "retired", "reactivated")


@dataclass
class RefreshReport:
    at: Instant
    per_class: dict[str, Counter] = field(default_factory=dict)

    def total(self, category: str) -> int:
        return sum(c[category] for c in self.per_class.values())

    def lines(self) -> list[str]:
        out = []
        for cname, c in self.per_class.items():
            counts = ", ".join(f"{k} {c[k]}" for k in CATEGORIES)
            out.append(f"{cname}: {counts}")
        return out


@dataclass
class RefreshTick:
    at: Instant
    snapshot: SourceSnapshot
    environment: str | None = None
    archive: bool = False


def _lineage_index(store: WarehouseStore, cls: str) -> dict[str, WarehouseObject]:
    return {canonical_json(o.lineage_key): o for o in store.extents.get(cls, {}).values()}


def _unique_lineages(objs: list[Obj]) -> list[tuple[Any, Obj]]:
    """JSON lineage per object; repeated lineages are numbered so each stays distinct."""
    seen: Counter = Counter()
    out = []
    for o in objs:
        key = to_json(o.lineage)
        k = canonical_json(key)
        if seen[k]:
            key = ["dup", key, seen[k]]
        seen[k] += 1
        out.append((key, o))
    return out


def _inherited_oid(store: WarehouseStore, schema: WarehouseSchema, cls: str, lineage: Any) -> str | None:
    """Objects of hierarchy classes share the oid of the operand object they come from."""
    e = schema.classes[cls].mapping
    if not isinstance(e, (Generalize, Specialize)):
        return None
    k = canonical_json(lineage)
    for a in e.args:
        op = _arg_class(a)
        if op in store.extents:
            o = _lineage_index(store, op).get(k)
            if o is not None:
                return o.oid
    return None


def _member_oids(store: WarehouseStore, members) -> list[str]:
    out = []
    for cname, lineage in members:
        if cname in store.extents:
            o = _lineage_index(store, cname).get(canonical_json(to_json(lineage)))
            if o is not None:
                out.append(o.oid)
    return out


def _classes_for(schema: WarehouseSchema, environment: str | None) -> list[str]:
    if environment is None:
        return list(schema.classes)
    if environment not in schema.environments:
        raise UnknownClass(f"unknown environment {environment!r}")
    return list(schema.environments[environment].classes)


def refresh(store: WarehouseStore, snapshot: SourceSnapshot, t: Instant, environment: str | None = None) -> RefreshReport:
    """Re-evaluate mappings on ``snapshot`` and historize what changed at ``t``."""
    if t.unit != store.unit:
        raise MixedUnits(f"store unit is {store.unit}, tick unit is {t.unit}")
    schema = store.schema
    targets = _classes_for(schema, environment)
    for cname in targets:
        prev = store.last_tick.get(cname)
        if prev is not None and not prev < t:
            raise NonMonotonicTick(f"tick {t} does not follow {prev} for class {cname}")
    results = evaluate_warehouse(schema, snapshot)
    report = RefreshReport(t)
    order = [c for c in results if c in targets]
    for cname in order:
        report.per_class[cname] = _refresh_class(store, cname, results[cname].objects, t)
        store.last_tick[cname] = t
    return report


def _refresh_class(store: WarehouseStore, cname: str, objs: list[Obj], t: Instant) -> Counter:
    schema = store.schema
    wc = schema.classes[cname]
    tempo = tuple(wc.tempo_filter)
    ext = store.extents.setdefault(cname, {})
    index = _lineage_index(store, cname)
    counts: Counter = Counter({k: 0 for k in CATEGORIES})
    fresh = TemporalDomain(store.unit, (Interval(t.ticks, NOW),))
    seen: set[str] = set()
    for lineage, ob in _unique_lineages(objs):
        k = canonical_json(lineage)
        seen.add(k)
        value = dict(ob.value)
        o = index.get(k)
        if o is None:
            oid = _inherited_oid(store, schema, cname, lineage) or store.new_oid(cname)
            o = WarehouseObject(oid, lineage, State(value, fresh))
            ext[oid] = o
            index[k] = o
            counts["created"] += 1
        elif o.current is None:
            o.current = State(value, fresh)
            counts["reactivated"] += 1
        else:
            old = o.current.value
            if any(canon(old.get(p)) != canon(value.get(p)) for p in tempo):
                o.past.append(State({p: old.get(p) for p in tempo}, o.current.domain.close(t.ticks - 1)))
                o.current = State(value, fresh)
                counts["changed"] += 1
            elif canon(old) != canon(value):
                o.current.value = value
                counts["updated"] += 1
            else:
                counts["unchanged"] += 1
        if ob.members:
            o.members = [m for m in _member_oids(store, ob.members) if m != o.oid]
    for k, o in index.items():
        if k not in seen and o.current is not None:
            o.past.append(State({p: o.current.value.get(p) for p in tempo}, o.current.domain.close(t.ticks - 1)))
            o.current = None
            counts["retired"] += 1
    return counts


def initial_build(schema: WarehouseSchema, snapshot: SourceSnapshot, t0: Instant, schema_text: str = "") -> WarehouseStore:
    """A fresh store whose objects all start at ``t0``."""
    store = WarehouseStore(schema, schema_text, TemporalUnit(t0.unit))
    for cname in schema.classes:
        store.extents[cname] = {}
    refresh(store, snapshot, t0)
    return store


def _period_of(schema: WarehouseSchema, environment: str | None) -> tuple[int, TemporalUnit] | None:
    if environment is not None and environment in schema.environments:
        p = schema.environments[environment].refresh_period
        if p is not None:
            return p
    return schema.default_refresh


def grains_between(a: Instant, b: Instant, unit: TemporalUnit) -> int:
    """Number of ``unit`` boundaries from the grain start of ``a`` to that of ``b``."""
    return Instant.from_datetime(unit, b.start()).ticks - Instant.from_datetime(unit, a.start()).ticks


@dataclass
class ScheduleReport:
    steps: list[tuple[RefreshTick, RefreshReport, list[ArchiveReport]]] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = []
        for tick, rr, ars in self.steps:
            env = f" [{tick.environment}]" if tick.environment else ""
            out.append(f"tick {tick.at}{env}")
            out.extend("  " + s for s in rr.lines())
            for ar in ars:
                out.extend(f"  archive {ar.environment}: " + s for s in ar.lines())
        return out


def run_schedule(store: WarehouseStore, ticks: Iterable[RefreshTick]) -> ScheduleReport:
    """Apply ticks in order, checking each environment's refresh period."""
    schema = store.schema
    report = ScheduleReport()
    previous: dict[str | None, Instant] = {}
    for tick in ticks:
        key = tick.environment
        period = _period_of(schema, key)
        prev = previous.get(key)
        if prev is None and key is None:
            prev = max(store.last_tick.values(), default=None)
        elif prev is None:
            known = [store.last_tick[c] for c in _classes_for(schema, key) if c in store.last_tick]
            prev = max(known, default=None)
        if prev is not None and period is not None:
            n, unit = period
            if grains_between(prev, tick.at, unit) < n:
                raise ScheduleViolation(f"tick {tick.at} is closer than {n} {unit.value} to {prev}")
        rr = refresh(store, tick.snapshot, tick.at, key)
        archives = []
        if tick.archive:
            envs = [schema.environments[key]] if key else list(schema.environments.values())
            archives = [apply_archive(env, store) for env in envs]
        previous[key] = tick.at
        report.steps.append((tick, rr, archives))
    return report
