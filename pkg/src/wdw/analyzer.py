"""Method derivability: usage matrices over properties (MUP), object predicates (MUO) and methods (MUM).

A source method can be carried into the warehouse when every property it
reads is derived by some mapping, every object group it works on survives
that mapping's selections, and every method it calls is itself derivable.
Usage facts come from the schema's ``uses`` metadata; nothing here inspects
method bodies.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .algebra import EvalResult, is_derived, structural_results
from .errors import UnknownMethodMeta
from .model import MethodSig, SourceSchema, WarehouseSchema, leaf_paths
from .predicates import Atom, Path, Pred, conj_implies_pred, conj_str

UNSET = None


@dataclass
class UsageMatrix:
    kind: str  # MUP | MUO | MUM
    name: str
    rows: list[str]
    cols: list[str]
    cells: list[list[int]]
    derived_row: list[int]
    derivable_col: list[int | None] = field(default_factory=list)

    def __post_init__(self):
        if not self.derivable_col:
            self.derivable_col = [UNSET] * len(self.rows)

    def row(self, method: str) -> int:
        return self.rows.index(method)

    def col(self, label: str) -> int:
        return self.cols.index(label)

    def uses(self, i: int) -> list[int]:
        return [j for j, v in enumerate(self.cells[i]) if v]

    def copy(self) -> "UsageMatrix":
        return UsageMatrix(
            self.kind, self.name, list(self.rows), list(self.cols),
            [list(r) for r in self.cells], list(self.derived_row), list(self.derivable_col),
        )

    # -- CSV ----------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{self.kind}:{self.name}", *self.cols, "Derivable"])
        for r, cells, d in zip(self.rows, self.cells, self.derivable_col):
            w.writerow([r, *cells, "" if d is None else d])
        w.writerow(["Derive", *self.derived_row, ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "UsageMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2 or rows[-1][0] != "Derive" or rows[0][-1] != "Derivable":
            raise ValueError("not a usage matrix CSV")
        kind, _, name = rows[0][0].partition(":")
        cols = rows[0][1:-1]
        body = rows[1:-1]
        return cls(
            kind,
            name,
            [r[0] for r in body],
            cols,
            [[int(x) for x in r[1:-1]] for r in body],
            [int(x) for x in rows[-1][1:-1]],
            [None if r[-1] == "" else int(r[-1]) for r in body],
        )


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _source_classes(result: EvalResult, source: SourceSchema) -> list[str]:
    return sorted(c for c in result.involved if c in source.classes)


def _methods(classes: Iterable[str], source: SourceSchema) -> list[MethodSig]:
    """Methods declared by ``classes`` (inherited ones appear under their owner)."""
    out = [m for c in classes for m in source.get(c).methods.values()]
    for m in out:
        if not m.has_usage:
            raise UnknownMethodMeta(f"method {m.qualified} has no usage metadata")
    return sorted(out, key=lambda m: m.qualified)


def property_columns(classes: Iterable[str], source: SourceSchema) -> dict[str, tuple[str, str]]:
    """Column label -> (declaring class, dotted path); clashing names get a class prefix."""
    classes = list(classes)
    owners: dict[str, list[str]] = {}
    for c in classes:
        for p in source.get(c).properties:
            owners.setdefault(p, []).append(c)
    cols = {}
    for c in classes:
        for pname, prop in source.get(c).properties.items():
            for path in leaf_paths(pname, prop.type):
                label = c + path if len(owners[pname]) > 1 else path
                cols[label] = (c, path)
    return dict(sorted(cols.items()))


def _resolve_use(source: SourceSchema, m: MethodSig, used: str) -> tuple[str, str]:
    top = used.split(".")[0]
    props = source.all_properties(m.owner)
    if top not in props:
        raise UnknownMethodMeta(f"{m.qualified} uses unknown property {used!r}")
    return props[top][0], used


def build_mup(result: EvalResult, source: SourceSchema, name: str = "") -> UsageMatrix:
    """Property usage matrix of one mapping; the Derive row comes from its structural evaluation."""
    classes = _source_classes(result, source)
    methods = _methods(classes, source)
    cols = property_columns(classes, source)
    labels = list(cols)
    cells = []
    for m in methods:
        row = [0] * len(labels)
        for used in m.uses_properties:
            cls, path = _resolve_use(source, m, used)
            for j, lab in enumerate(labels):
                c, p = cols[lab]
                if c == cls and (p == path or p.startswith(path + ".")):
                    row[j] = 1
        cells.append(row)
    derived = result.derived_props
    drow = [int(is_derived(derived, *cols[lab])) for lab in labels]
    return UsageMatrix("MUP", name, [m.qualified for m in methods], labels, cells, drow)


def _qualify_conj(source: SourceSchema, m: MethodSig, conj: tuple[Atom, ...]) -> tuple[Atom, ...]:
    """Rewrite a method's predicate paths onto ``(declaring class, path...)``."""
    props = source.all_properties(m.owner)

    def q(o):
        if isinstance(o, Path) and o.parts[0] in props:
            return Path((props[o.parts[0]][0],) + o.parts)
        return o

    return tuple(Atom(q(a.left), a.op, q(a.right)) for a in conj)


def _relevant(sel_pred: Pred, classes: set[str]) -> Pred:
    """Selection restricted to atoms about ``classes``; other atoms are dropped."""
    out = []
    for conj in sel_pred.disjuncts:
        kept = tuple(
            a for a in conj
            if any(isinstance(o, Path) and o.parts[0] in classes for o in (a.left, a.right))
        )
        out.append(kept)
    return Pred(tuple(out))


def build_muo(result: EvalResult, source: SourceSchema, name: str = "") -> UsageMatrix:
    """Object usage matrix: one column per class-qualified conjunction used by some method."""
    classes = _source_classes(result, source)
    methods = _methods(classes, source)
    col_info: dict[str, tuple[MethodSig, tuple[Atom, ...]]] = {}
    uses: dict[str, set[str]] = {}
    for m in methods:
        uses[m.qualified] = set()
        if m.uses_object_predicates is None:
            continue
        for conj in m.uses_object_predicates.disjuncts:
            label = f"{m.owner}[{conj_str(conj)}]"
            col_info.setdefault(label, (m, conj))
            uses[m.qualified].add(label)
    labels = sorted(col_info)
    cells = [[int(lab in uses[m.qualified]) for lab in labels] for m in methods]
    drow = []
    for lab in labels:
        m, conj = col_info[lab]
        scope = {m.owner, *source.ancestors(m.owner)}
        premise = _qualify_conj(source, m, conj)
        ok = all(conj_implies_pred(premise, _relevant(s.pred, scope)) for s in result.selections)
        drow.append(int(ok))
    return UsageMatrix("MUO", name, [m.qualified for m in methods], labels, cells, drow)


def optimize(m: UsageMatrix) -> UsageMatrix:
    """Drop columns nobody uses and nothing derives."""
    keep = [
        j for j in range(len(m.cols))
        if m.derived_row[j] != 0 or any(row[j] for row in m.cells)
    ]
    return UsageMatrix(
        m.kind, m.name, list(m.rows), [m.cols[j] for j in keep],
        [[row[j] for j in keep] for row in m.cells], [m.derived_row[j] for j in keep],
        list(m.derivable_col),
    )


def analyse_locale(i: int, m: UsageMatrix) -> set[str]:
    """Missing criteria of row ``i``; also fills its Derivable cell."""
    missing = {m.cols[j] for j in range(len(m.cols)) if m.cells[i][j] == 1 and m.derived_row[j] == 0}
    m.derivable_col[i] = 0 if missing else 1
    return missing


def build_mum(source: SourceSchema, classes: Iterable[str], non_derivable: Iterable[str] = (), name: str = "") -> UsageMatrix:
    """Global method usage matrix over every method of ``classes``."""
    methods = _methods(sorted(set(classes)), source)
    ids = [m.qualified for m in methods]
    cells = []
    for m in methods:
        targets = {source.method(u).qualified for u in m.uses_methods}
        cells.append([int(t in targets) for t in ids])
    bad = set(non_derivable)
    drow = [0 if q in bad else -1 for q in ids]
    return UsageMatrix("MUM", name, ids, list(ids), cells, drow)


@dataclass
class GlobalState:
    """Cycle bookkeeping shared across one Analyse_Globale descent."""

    stack: list[int] = field(default_factory=list)
    cycles: dict[int, set[int]] = field(default_factory=dict)
    local_ok: Callable[[int], bool] | None = None


def analyse_globale(i: int, mum: UsageMatrix, visite: list[int], state: GlobalState | None = None) -> set[str]:
    """Missing methods of row ``i``, recursing into methods not analysed yet.

    A method met again while still on the descent path closes a cycle: every
    member is recorded in ``state.cycles`` and counts as missing. Direct
    self-calls are ignored.
    """
    state = state or GlobalState()
    ens: set[str] = set()
    visite[i] = 1
    state.stack.append(i)
    for j in mum.uses(i):
        if j == i:
            continue
        d = mum.derived_row[j]
        if d == 0:
            ens.add(mum.cols[j])
        elif d == -1:
            if visite[j]:
                ens.add(mum.cols[j])
                if j in state.stack:
                    members = state.stack[state.stack.index(j):]
                    for k in members:
                        state.cycles.setdefault(k, set()).update(x for x in members if x != k)
            else:
                ens |= analyse_globale(j, mum, visite, state)
                if mum.derived_row[j] != 1:
                    ens.add(mum.cols[j])
    state.stack.pop()
    ens.discard(mum.cols[i])
    ok = not ens and i not in state.cycles
    mum.derivable_col[i] = 1 if ok else 0
    local_ok = state.local_ok(i) if state.local_ok else True
    if mum.derived_row[i] == -1:
        mum.derived_row[i] = 1 if ok and local_ok else 0
    return ens


def call_cycles(mum: UsageMatrix) -> dict[int, set[int]]:
    """Rows on a call cycle, each mapped to the other rows of its cycle."""
    n = len(mum.rows)
    reach = []
    for i in range(n):
        seen: set[int] = set()
        todo = [j for j in mum.uses(i) if j != i]
        while todo:
            j = todo.pop()
            if j not in seen:
                seen.add(j)
                todo.extend(k for k in mum.uses(j) if k != j)
        reach.append(seen)
    return {i: {k for k in reach[i] if k != i and i in reach[k]} for i in range(n) if i in reach[i]}


# ---------------------------------------------------------------------------
# Whole-warehouse derivation
# ---------------------------------------------------------------------------


@dataclass
class Verdict:
    method: str
    derivable: bool
    missing: set[str] = field(default_factory=set)
    cycle_with: set[str] = field(default_factory=set)


@dataclass
class Analysis:
    mups: dict[str, UsageMatrix]
    muos: dict[str, UsageMatrix]
    mum: UsageMatrix
    verdicts: dict[str, Verdict]
    warnings: list[str] = field(default_factory=list)

    @property
    def derivable(self) -> set[str]:
        return {q for q, v in self.verdicts.items() if v.derivable}

    @property
    def cycles(self) -> dict[str, set[str]]:
        return {q: v.cycle_with for q, v in self.verdicts.items() if v.cycle_with}

    def short(self, qualified: str) -> str:
        name = qualified.split("::")[-1]
        same = [q for q in self.verdicts if q.split("::")[-1] == name]
        return name if len(same) <= 1 else qualified

    def report_lines(self) -> list[str]:
        out = []
        for q in sorted(self.verdicts):
            v = self.verdicts[q]
            if v.derivable:
                out.append(f"{self.short(q)}: DERIVABLE")
            elif v.cycle_with:
                out.append(f"{self.short(q)}: CYCLE with {{{', '.join(sorted(self.short(x) for x in v.cycle_with))}}}")
            else:
                out.append(f"{self.short(q)}: MISSING {{{', '.join(sorted(self._label(x) for x in v.missing))}}}")
        return out

    def _label(self, x: str) -> str:
        return self.short(x) if x in self.verdicts else x


def deriver_comportement(
    schema: WarehouseSchema,
    results: dict[str, EvalResult] | None = None,
    assume_derivable: Iterable[str] = (),
) -> Analysis:
    """Run every local analysis, then the global one, and decide each method."""
    source = schema.source
    if results is None:
        results = structural_results(schema)
    mups: dict[str, UsageMatrix] = {}
    muos: dict[str, UsageMatrix] = {}
    for cname, wc in schema.classes.items():
        if wc.mapping is None:
            continue
        r = results[cname]
        if not _source_classes(r, source):
            continue
        mups[cname] = build_mup(r, source, cname)
        muos[cname] = build_muo(r, source, cname)

    local_missing: dict[str, list[set[str]]] = {}
    local_good: dict[str, bool] = {}
    for cname in mups:
        mup, muo = mups[cname], muos[cname]
        for i, q in enumerate(mup.rows):
            miss = analyse_locale(i, mup) | analyse_locale(i, muo)
            local_missing.setdefault(q, []).append(miss)
            local_good[q] = local_good.get(q, False) or not miss

    assumed = {source.method(a).qualified for a in assume_derivable}
    involved = {q.split("::")[0] for q in local_good}
    bad = [q for q, ok in local_good.items() if not ok and q not in assumed]
    mum = build_mum(source, involved, bad)
    for q in assumed:
        if q in mum.rows:
            i = mum.row(q)
            mum.derived_row[i] = 1
            mum.derivable_col[i] = 1

    def best_missing(q: str) -> set[str]:
        if local_good.get(q) or q in assumed:
            return set()
        return min(local_missing.get(q, [set()]), key=lambda s: (len(s), sorted(s)))

    idx = {q: i for i, q in enumerate(mum.rows)}
    cycles: dict[int, set[int]] = {}
    global_missing: dict[str, set[str]] = {}
    for i, q in enumerate(mum.rows):
        if q in assumed:
            global_missing[q] = set()
            continue
        visite = [0] * len(mum.rows)
        st = GlobalState(
            local_ok=lambda j: local_good.get(mum.rows[j], False) or mum.rows[j] in assumed,
        )
        global_missing[q] = analyse_globale(i, mum, visite, st)
        for k, others in st.cycles.items():
            cycles.setdefault(k, set()).update(others)
    # The descent stops at callees already known to be non-derivable, so it
    # can miss cycles through them; report those from the call graph itself.
    for k, others in call_cycles(mum).items():
        cycles.setdefault(k, set()).update(others)
    for k in cycles:
        mum.derivable_col[k] = 0
        if mum.rows[k] not in assumed:
            mum.derived_row[k] = 0

    verdicts = {}
    for q in mum.rows:
        i = idx[q]
        if q in assumed:
            verdicts[q] = Verdict(q, True)
            continue
        lm = best_missing(q)
        cyc = {mum.rows[k] for k in cycles.get(i, ())}
        ok = not lm and mum.derivable_col[i] == 1 and not cyc
        verdicts[q] = Verdict(q, ok, set() if ok else lm | global_missing[q], cyc)

    warnings = []
    for cname, wc in schema.classes.items():
        for m in wc.declared_methods:
            matches = [q for q in verdicts if q.split("::")[-1] == m.name]
            if matches and not any(verdicts[q].derivable for q in matches):
                warnings.append(f"{cname} declares {m.name}(), which is not derivable")
            elif not matches:
                warnings.append(f"{cname} declares {m.name}(), which no involved source class provides")
    return Analysis(mups, muos, mum, verdicts, warnings)
