"""Discrete multi-unit time: units, instants, closed intervals, temporal domains.

Instants are integer grain counts since 1970-01-01 in the proleptic Gregorian
calendar. A temporal domain is a sorted list of disjoint, non-contiguous closed
intervals sharing one unit; its last interval may be open-ended (``NOW``).
"""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from typing import Iterable, Iterator, Sequence, TypeVar

from .errors import WdwError


class TemporalError(WdwError, ValueError):
    pass


class MixedUnits(TemporalError):
    pass


class EmptyInterval(TemporalError):
    pass


class NotCoarser(TemporalError):
    pass


class TemporalUnit(str, Enum):
    ANNEE = "annee"
    SEMESTRE = "semestre"
    TRIMESTRE = "trimestre"
    MOIS = "mois"
    SEMAINE = "semaine"
    JOUR = "jour"
    JOUR_SEMAINE = "jour_semaine"
    HEURE = "heure"
    MINUTE = "minute"
    SECONDE = "seconde"

    def __str__(self) -> str:
        return self.value


U = TemporalUnit

# Covering edges: fine -> coarse. Every coarse grain is a whole number of fine grains.
_EDGES = {
    U.SECONDE: {U.MINUTE},
    U.MINUTE: {U.HEURE},
    U.HEURE: {U.JOUR},
    U.JOUR: {U.SEMAINE, U.MOIS},
    U.MOIS: {U.TRIMESTRE},
    U.TRIMESTRE: {U.SEMESTRE},
    U.SEMESTRE: {U.ANNEE},
}


def _closure() -> dict[TemporalUnit, frozenset[TemporalUnit]]:
    out = {}
    for u in TemporalUnit:
        seen: set[TemporalUnit] = set()
        stack = list(_EDGES.get(u, ()))
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(_EDGES.get(v, ()))
        out[u] = frozenset(seen)
    return out


_COARSER = _closure()


def finer_than(u1: TemporalUnit, u2: TemporalUnit) -> bool:
    """True iff every ``u2`` grain is an exact concatenation of ``u1`` grains."""
    return TemporalUnit(u2) in _COARSER[TemporalUnit(u1)]


def finer_or_equal(u1: TemporalUnit, u2: TemporalUnit) -> bool:
    return u1 == u2 or finer_than(u1, u2)


@total_ordering
class _Now:
    """Open upper bound of the current state; greater than every tick."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NOW"

    def __eq__(self, other) -> bool:
        return other is self

    def __lt__(self, other) -> bool:
        return False

    def __gt__(self, other) -> bool:
        return other is not self

    def __hash__(self) -> int:
        return hash("NOW")

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        return self


NOW = _Now()

_EPOCH = _dt.datetime(1970, 1, 1)
_EPOCH_YEAR = 1970


def _to_datetime(unit: TemporalUnit, ticks: int) -> _dt.datetime:
    """Start of the grain ``ticks`` of ``unit``."""
    if unit is U.ANNEE:
        return _dt.datetime(_EPOCH_YEAR + ticks, 1, 1)
    if unit in (U.SEMESTRE, U.TRIMESTRE, U.MOIS):
        months = {U.SEMESTRE: 6, U.TRIMESTRE: 3, U.MOIS: 1}[unit] * ticks
        y, m = divmod(months, 12)
        return _dt.datetime(_EPOCH_YEAR + y, m + 1, 1)
    if unit is U.SEMAINE:
        # week 0 starts on Monday 1969-12-29 (ISO weeks)
        return _EPOCH + _dt.timedelta(days=7 * ticks - 3)
    if unit is U.JOUR:
        return _EPOCH + _dt.timedelta(days=ticks)
    if unit is U.HEURE:
        return _EPOCH + _dt.timedelta(hours=ticks)
    if unit is U.MINUTE:
        return _EPOCH + _dt.timedelta(minutes=ticks)
    if unit is U.SECONDE:
        return _EPOCH + _dt.timedelta(seconds=ticks)
    raise TemporalError(f"unit {unit} has no calendar position")


def _from_datetime(unit: TemporalUnit, d: _dt.datetime) -> int:
    if unit is U.ANNEE:
        return d.year - _EPOCH_YEAR
    if unit in (U.SEMESTRE, U.TRIMESTRE, U.MOIS):
        months = (d.year - _EPOCH_YEAR) * 12 + d.month - 1
        return months // {U.SEMESTRE: 6, U.TRIMESTRE: 3, U.MOIS: 1}[unit]
    delta = d - _EPOCH
    if unit is U.SEMAINE:
        return (delta.days + 3) // 7
    if unit is U.JOUR:
        return delta.days
    secs = delta.days * 86400 + delta.seconds
    if unit is U.HEURE:
        return secs // 3600
    if unit is U.MINUTE:
        return secs // 60
    if unit is U.SECONDE:
        return secs
    raise TemporalError(f"unit {unit} has no calendar position")


@total_ordering
@dataclass(frozen=True)
class Instant:
    unit: TemporalUnit
    ticks: int

    def __post_init__(self):
        object.__setattr__(self, "unit", TemporalUnit(self.unit))
        if self.unit is U.JOUR_SEMAINE and not 0 <= self.ticks <= 6:
            raise TemporalError("jour_semaine ticks must lie in 0..6 (Monday=0)")

    def __lt__(self, other):
        if not isinstance(other, Instant):
            return NotImplemented
        _same_unit(self.unit, other.unit)
        return self.ticks < other.ticks

    def __add__(self, n: int) -> Instant:
        return Instant(self.unit, self.ticks + n)

    def __sub__(self, n: int) -> Instant:
        return Instant(self.unit, self.ticks - n)

    def start(self) -> _dt.datetime:
        return _to_datetime(self.unit, self.ticks)

    @classmethod
    def from_datetime(cls, unit: TemporalUnit, d: _dt.datetime | _dt.date) -> Instant:
        if not isinstance(d, _dt.datetime):
            d = _dt.datetime(d.year, d.month, d.day)
        unit = TemporalUnit(unit)
        if unit is U.JOUR_SEMAINE:
            return cls(unit, d.weekday())
        return cls(unit, _from_datetime(unit, d))

    def __str__(self) -> str:
        return format_instant(self)


def _same_unit(a: TemporalUnit | None, b: TemporalUnit | None) -> None:
    if a is not None and b is not None and a != b:
        raise MixedUnits(f"units differ: {a} vs {b}")


def coarsen_instant(i: Instant, u: TemporalUnit) -> Instant:
    """The ``u`` grain containing ``i``."""
    u = TemporalUnit(u)
    if not finer_than(i.unit, u):
        raise NotCoarser(f"{i.unit} is not finer than {u}")
    return Instant(u, _from_datetime(u, i.start()))


def grain_span(coarse: Instant, fine: TemporalUnit) -> tuple[int, int]:
    """First and last ``fine`` ticks inside the grain ``coarse`` (inclusive)."""
    fine = TemporalUnit(fine)
    if coarse.unit == fine:
        return coarse.ticks, coarse.ticks
    if not finer_than(fine, coarse.unit):
        raise NotCoarser(f"{fine} is not finer than {coarse.unit}")
    lo = _from_datetime(fine, coarse.start())
    hi = _from_datetime(fine, (coarse + 1).start()) - 1
    return lo, hi


# ---------------------------------------------------------------------------
# Intervals and domains (tick-level; the unit lives on the domain)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[td, tf]`` of ticks; ``tf`` may be ``NOW``."""

    td: int
    tf: int | _Now

    def __post_init__(self):
        if self.td is NOW:
            raise EmptyInterval("NOW is only allowed as an upper bound")
        if self.tf is not NOW and self.td > self.tf:
            raise EmptyInterval(f"[{self.td}, {self.tf}] is empty")

    @property
    def is_open(self) -> bool:
        return self.tf is NOW

    def __contains__(self, t: int) -> bool:
        return self.td <= t and (self.tf is NOW or t <= self.tf)


@dataclass(frozen=True)
class TemporalDomain:
    """Normalized domain. Build through :func:`normalize_domain` or :meth:`of`."""

    unit: TemporalUnit | None
    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        if self.unit is not None:
            object.__setattr__(self, "unit", TemporalUnit(self.unit))
        ivs = self.intervals
        for a, b in zip(ivs, ivs[1:]):
            if a.tf is NOW or b.td <= a.tf + 1:
                raise TemporalError("domain intervals must be sorted, disjoint and non-contiguous")

    @classmethod
    def of(cls, unit: TemporalUnit, *pairs: tuple[int, int | _Now]) -> TemporalDomain:
        return normalize_domain([Interval(a, b) for a, b in pairs], unit)

    @classmethod
    def empty(cls, unit: TemporalUnit | None = None) -> TemporalDomain:
        return cls(unit, ())

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __contains__(self, t: Instant | int) -> bool:
        if isinstance(t, Instant):
            _same_unit(self.unit, t.unit)
            t = t.ticks
        return any(t in iv for iv in self.intervals)

    @property
    def is_open(self) -> bool:
        return bool(self.intervals) and self.intervals[-1].is_open

    @property
    def start(self) -> int | None:
        return self.intervals[0].td if self.intervals else None

    @property
    def end(self) -> int | _Now | None:
        return self.intervals[-1].tf if self.intervals else None

    def grains(self, horizon: int | None = None) -> set[int]:
        """Covered ticks; an open interval is cut at ``horizon``."""
        out: set[int] = set()
        for iv in self.intervals:
            hi = iv.tf
            if hi is NOW:
                if horizon is None:
                    raise TemporalError("open domain has infinitely many grains")
                hi = horizon
            out.update(range(iv.td, hi + 1))
        return out

    def close(self, t: int) -> TemporalDomain:
        """Cut the open end at ``t`` (inclusive)."""
        if not self.is_open:
            return self
        last = self.intervals[-1]
        head = self.intervals[:-1]
        if t < last.td:
            return TemporalDomain(self.unit, head)
        return TemporalDomain(self.unit, head + (Interval(last.td, t),))

    def __str__(self) -> str:
        return format_domain(self)


T = TypeVar("T")


def normalize_domain(intervals: Iterable[Interval], unit: TemporalUnit | None = None) -> TemporalDomain:
    """Sort and merge overlapping or adjacent intervals."""
    ivs = sorted(intervals, key=lambda iv: iv.td)
    merged: list[Interval] = []
    for iv in ivs:
        if merged:
            last = merged[-1]
            if last.tf is NOW or iv.td <= last.tf + 1:
                tf = NOW if (last.tf is NOW or iv.tf is NOW) else max(last.tf, iv.tf)
                merged[-1] = Interval(last.td, tf)
                continue
        merged.append(iv)
    return TemporalDomain(unit, tuple(merged))


def normalize_instants(pairs: Sequence[tuple[Instant, Instant | _Now]]) -> TemporalDomain:
    """Normalize ``(td, tf)`` instant pairs, checking that all share one unit."""
    unit = None
    ivs = []
    for td, tf in pairs:
        if unit is None:
            unit = td.unit
        _same_unit(unit, td.unit)
        if tf is NOW:
            ivs.append(Interval(td.ticks, NOW))
        else:
            _same_unit(unit, tf.unit)
            ivs.append(Interval(td.ticks, tf.ticks))
    return normalize_domain(ivs, unit)


def _unit_of(a: TemporalDomain, b: TemporalDomain) -> TemporalUnit | None:
    _same_unit(a.unit, b.unit)
    return a.unit if a.unit is not None else b.unit


def domain_union(a: TemporalDomain, b: TemporalDomain) -> TemporalDomain:
    return normalize_domain(a.intervals + b.intervals, _unit_of(a, b))


def domain_intersection(a: TemporalDomain, b: TemporalDomain) -> TemporalDomain:
    unit = _unit_of(a, b)
    out = []
    i = j = 0
    A, B = a.intervals, b.intervals
    while i < len(A) and j < len(B):
        lo = max(A[i].td, B[j].td)
        hi = min(A[i].tf, B[j].tf)
        if hi is NOW or lo <= hi:
            out.append(Interval(lo, hi))
        if A[i].tf is NOW and B[j].tf is NOW:
            break
        if B[j].tf is NOW or (A[i].tf is not NOW and A[i].tf < B[j].tf):
            i += 1
        else:
            j += 1
    return normalize_domain(out, unit)


def domain_difference(a: TemporalDomain, b: TemporalDomain) -> TemporalDomain:
    unit = _unit_of(a, b)
    out: list[Interval] = []
    for iv in a.intervals:
        pieces = [iv]
        for cut in b.intervals:
            nxt = []
            for p in pieces:
                # part before the cut
                if p.td < cut.td:
                    hi = cut.td - 1 if p.tf is NOW else min(p.tf, cut.td - 1)
                    nxt.append(Interval(p.td, hi))
                # part after the cut
                if cut.tf is not NOW and (p.tf is NOW or p.tf > cut.tf):
                    nxt.append(Interval(max(p.td, cut.tf + 1), p.tf))
            pieces = nxt
        out.extend(pieces)
    return normalize_domain(out, unit)


def group_by_grain(
    states: Iterable[tuple[TemporalDomain, T]], u: TemporalUnit
) -> dict[Instant, list[T]]:
    """Bucket payloads under every ``u`` grain their domain touches."""
    u = TemporalUnit(u)
    groups: dict[Instant, list[T]] = {}
    for dom, payload in states:
        if dom.unit is None:
            continue
        if not finer_than(dom.unit, u):
            raise NotCoarser(f"{dom.unit} is not finer than {u}")
        keys: list[int] = []
        for iv in dom.intervals:
            if iv.tf is NOW:
                raise TemporalError("cannot group an open domain")
            lo = coarsen_instant(Instant(dom.unit, iv.td), u).ticks
            hi = coarsen_instant(Instant(dom.unit, iv.tf), u).ticks
            keys.extend(k for k in range(lo, hi + 1) if k not in keys)
        for k in keys:
            groups.setdefault(Instant(u, k), []).append(payload)
    return dict(sorted(groups.items()))


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

_WEEKDAYS = ["lundi", "mardi", "mercredi", "jeudi", "vendredi", "samedi", "dimanche"]

_PATTERNS = {
    U.ANNEE: re.compile(r"^(-?\d+)$"),
    U.SEMESTRE: re.compile(r"^(-?\d+)-S([12])$"),
    U.TRIMESTRE: re.compile(r"^(-?\d+)-Q([1-4])$"),
    U.MOIS: re.compile(r"^(-?\d+)-(\d{1,2})$"),
    U.SEMAINE: re.compile(r"^(\d{4})-W(\d{1,2})$"),
    U.JOUR: re.compile(r"^(\d{4})-(\d{2})-(\d{2})$"),
    U.HEURE: re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2})$"),
    U.MINUTE: re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2})$"),
    U.SECONDE: re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})$"),
}


def parse_instant(text: str) -> Instant:
    """Parse ``unit:value``, e.g. ``mois:2000-03`` or ``trimestre:1998-Q1``."""
    try:
        unit_s, body = text.strip().split(":", 1)
        unit = TemporalUnit(unit_s.strip())
    except ValueError:
        raise TemporalError(f"bad instant {text!r}") from None
    body = body.strip()
    if unit is U.JOUR_SEMAINE:
        if body in _WEEKDAYS:
            return Instant(unit, _WEEKDAYS.index(body))
        if body.isdigit() and 1 <= int(body) <= 7:
            return Instant(unit, int(body) - 1)
        raise TemporalError(f"bad jour_semaine {body!r}")
    m = _PATTERNS[unit].match(body)
    if not m:
        raise TemporalError(f"bad {unit} instant {body!r}")
    g = [int(x) for x in m.groups()]
    try:
        if unit is U.ANNEE:
            return Instant(unit, g[0] - _EPOCH_YEAR)
        if unit is U.SEMESTRE:
            return Instant(unit, (g[0] - _EPOCH_YEAR) * 2 + g[1] - 1)
        if unit is U.TRIMESTRE:
            return Instant(unit, (g[0] - _EPOCH_YEAR) * 4 + g[1] - 1)
        if unit is U.MOIS:
            if not 1 <= g[1] <= 12:
                raise ValueError("month out of range")
            return Instant(unit, (g[0] - _EPOCH_YEAR) * 12 + g[1] - 1)
        if unit is U.SEMAINE:
            return Instant.from_datetime(unit, _dt.date.fromisocalendar(g[0], g[1], 1))
        d = _dt.datetime(*g)
    except ValueError as exc:
        raise TemporalError(f"bad {unit} instant {body!r}: {exc}") from None
    return Instant.from_datetime(unit, d)


def format_instant(i: Instant) -> str:
    u = i.unit
    if u is U.JOUR_SEMAINE:
        return f"{u}:{i.ticks + 1}"
    if u is U.ANNEE:
        return f"{u}:{i.ticks + _EPOCH_YEAR}"
    if u is U.SEMESTRE:
        y, s = divmod(i.ticks, 2)
        return f"{u}:{y + _EPOCH_YEAR}-S{s + 1}"
    if u is U.TRIMESTRE:
        y, q = divmod(i.ticks, 4)
        return f"{u}:{y + _EPOCH_YEAR}-Q{q + 1}"
    d = i.start()
    if u is U.MOIS:
        return f"{u}:{d.year:04d}-{d.month:02d}"
    if u is U.SEMAINE:
        y, w, _ = d.isocalendar()
        return f"{u}:{y:04d}-W{w:02d}"
    if u is U.JOUR:
        return f"{u}:{d:%Y-%m-%d}"
    if u is U.HEURE:
        return f"{u}:{d:%Y-%m-%dT%H}"
    if u is U.MINUTE:
        return f"{u}:{d:%Y-%m-%dT%H:%M}"
    return f"{u}:{d:%Y-%m-%dT%H:%M:%S}"


def format_domain(d: TemporalDomain) -> str:
    parts = []
    for iv in d.intervals:
        lo = format_instant(Instant(d.unit, iv.td))
        hi = "NOW" if iv.tf is NOW else format_instant(Instant(d.unit, iv.tf))
        parts.append(f"[{lo},{hi}]")
    return "<" + ";".join(parts) + ">"


_IV = re.compile(r"\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\]")


def parse_domain(text: str) -> TemporalDomain:
    """Parse ``<[a,b];[c,NOW]>``; ``<>`` is the empty domain."""
    s = text.strip()
    if not (s.startswith("<") and s.endswith(">")):
        raise TemporalError(f"bad domain {text!r}")
    body = s[1:-1].strip()
    if not body:
        return TemporalDomain.empty()
    pairs = []
    for chunk in body.split(";"):
        m = _IV.fullmatch(chunk.strip())
        if not m:
            raise TemporalError(f"bad interval {chunk!r}")
        td = parse_instant(m.group(1))
        tf = NOW if m.group(2) == "NOW" else parse_instant(m.group(2))
        pairs.append((td, tf))
    return normalize_instants(pairs)
