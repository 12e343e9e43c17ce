"""Archival: pick past states by a temporal predicate and fold them into archived states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .algebra import aggregate
from .errors import EmptyInput, UnknownClass, UnknownProperty
from .model import Environment, State, WarehouseObject, WarehouseStore
from .temporal import (
    Instant,
    MixedUnits,
    NotCoarser,
    TemporalDomain,
    TemporalUnit,
    domain_union,
    finer_than,
    format_instant,
    grain_span,
    group_by_grain,
    parse_instant,
)

CLAUSE_KINDS = ("within", "not within", "before")


@dataclass(frozen=True)
class ArchiveClause:
    kind: str
    at: Instant

    def __post_init__(self):
        if self.kind not in CLAUSE_KINDS:
            raise ValueError(f"unknown archive clause {self.kind!r}")

    def _span(self, unit: TemporalUnit) -> tuple[int, int]:
        if self.at.unit == unit:
            return self.at.ticks, self.at.ticks
        if not finer_than(unit, self.at.unit):
            raise MixedUnits(f"cannot compare {unit} states with a {self.at.unit} instant")
        return grain_span(self.at, unit)

    def holds(self, d: TemporalDomain) -> bool:
        """Whole-domain test: every grain of ``d`` must satisfy the clause."""
        if not d or d.is_open or d.unit is None:
            return False
        lo, hi = self._span(d.unit)
        if self.kind == "within":
            return all(lo <= iv.td and iv.tf <= hi for iv in d)
        if self.kind == "not within":
            return all(iv.tf < lo or iv.td > hi for iv in d)
        return d.end < lo

    def __str__(self) -> str:
        return f"{self.kind} {format_instant(self.at)}"


@dataclass(frozen=True)
class ArchivePredicate:
    """Conjunction of clauses over a state's temporal domain."""

    clauses: tuple[ArchiveClause, ...]

    @classmethod
    def parse(cls, text: str) -> "ArchivePredicate":
        clauses = []
        for part in text.split(" and "):
            words = part.split()
            if len(words) == 3 and words[:2] == ["not", "within"]:
                clauses.append(ArchiveClause("not within", parse_instant(words[2])))
            elif len(words) == 2 and words[0] in ("within", "before"):
                clauses.append(ArchiveClause(words[0], parse_instant(words[1])))
            else:
                raise ValueError(f"bad archive predicate {part.strip()!r}")
        return cls(tuple(clauses))

    def holds(self, d: TemporalDomain) -> bool:
        return all(c.holds(d) for c in self.clauses)

    def __str__(self) -> str:
        return " and ".join(str(c) for c in self.clauses)


def select_for_archive(o: WarehouseObject, predicate: ArchivePredicate) -> list[State]:
    """Past states whose whole domain satisfies ``predicate``; the current state never qualifies."""
    return [s for s in o.past if predicate.holds(s.domain)]


def _weights(states: Sequence[State]) -> list[int]:
    return [len(s.domain.grains()) for s in states]


def _fold(states: Sequence[State], archive_filter: dict[str, str], weight: str) -> dict[str, Any]:
    out = {}
    for p, fn in archive_filter.items():
        try:
            samples = [s.value[p] for s in states]
        except KeyError:
            raise UnknownProperty(f"archived property {p!r} missing from a past state") from None
        if fn == "avg" and weight == "duration":
            pairs = [(v, w) for v, w in zip(samples, _weights(states)) if v is not None]
            aggregate("sum", [v for v, _ in pairs])  # type check only
            total = sum(w for _, w in pairs)
            out[p] = sum(v * w for v, w in pairs) / total if total else None
        else:
            out[p] = aggregate(fn, samples)
    return out


def archive_classical(states: Sequence[State], archive_filter: dict[str, str], weight: str = "state") -> State:
    """One archived state summarizing every selected state."""
    if not states:
        raise EmptyInput("nothing to archive")
    dom = states[0].domain
    for s in states[1:]:
        dom = domain_union(dom, s.domain)
    return State(_fold(states, archive_filter, weight), dom)


def archive_temporal(
    states: Sequence[State],
    archive_filter: dict[str, str],
    target: TemporalUnit,
    weight: str = "state",
) -> list[State]:
    """One archived state per ``target`` grain touched by the selected states."""
    if not states:
        raise EmptyInput("nothing to archive")
    target = TemporalUnit(target)
    unit = states[0].domain.unit
    if unit is not None and not finer_than(unit, target):
        raise NotCoarser(f"{unit} is not finer than {target}")
    groups = group_by_grain(((s.domain, i) for i, s in enumerate(states)), target)
    out = []
    for grain, idx in groups.items():
        members = [states[i] for i in idx]
        out.append(State(_fold(members, archive_filter, weight), TemporalDomain.of(target, (grain.ticks, grain.ticks))))
    return out


@dataclass
class ArchiveReport:
    environment: str
    per_class: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def consumed(self) -> int:
        return sum(c for c, _ in self.per_class.values())

    @property
    def produced(self) -> int:
        return sum(p for _, p in self.per_class.values())

    def lines(self) -> list[str]:
        return [f"{c}: consumed {a}, produced {b}" for c, (a, b) in sorted(self.per_class.items())]


def archive_object(
    o: WarehouseObject,
    archive_filter: dict[str, str],
    predicate: ArchivePredicate,
    mode: str = "classical",
    target: TemporalUnit | None = None,
    weight: str = "state",
) -> tuple[int, int]:
    """Move qualifying past states of ``o`` into its archive; returns (consumed, produced)."""
    chosen = select_for_archive(o, predicate)
    if not chosen:
        return 0, 0
    if mode == "temporal":
        if target is None:
            raise ValueError("temporal archive mode needs a target unit")
        made = archive_temporal(chosen, archive_filter, target, weight)
    else:
        made = [archive_classical(chosen, archive_filter, weight)]
    ids = {id(s) for s in chosen}
    o.past = [s for s in o.past if id(s) not in ids]
    o.archived.extend(made)
    return len(chosen), len(made)


def apply_archive(env: Environment, store: WarehouseStore, weight: str = "state") -> ArchiveReport:
    """Archive every object of every class in ``env`` per its configuration."""
    report = ArchiveReport(env.name)
    if env.archive_predicate is None:
        for cname in env.classes:
            report.per_class[cname] = (0, 0)
        return report
    for cname in env.classes:
        if cname not in store.extents:
            raise UnknownClass(f"unknown warehouse class {cname!r}")
        wc = store.schema.classes[cname]
        consumed = produced = 0
        if wc.archive_filter:
            for o in store.extents[cname].values():
                c, p = archive_object(o, wc.archive_filter, env.archive_predicate, env.archive_mode, env.archive_unit, weight)
                consumed += c
                produced += p
        report.per_class[cname] = (consumed, produced)
    return report
