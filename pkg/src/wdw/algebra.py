"""Construction algebra: mapping expressions and their evaluation on a source snapshot.

Twelve functions build warehouse classes: structuring (project, mask,
augment), population (select, join, nest, unnest), set (union, intersect,
diff) and hierarchy (generalize, specialize). Evaluation tracks, for every
output field, which source properties it carries (``origins``); the behavior
analyzer reads those to decide which properties reached the warehouse.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

from .errors import (
    DependencyCycle,
    EmptyStructure,
    NameCollision,
    NonCollectionPath,
    NonNumericAgg,
    NotACollection,
    StructureMismatch,
    TypeMismatch,
    UnknownClass,
    UnknownMethodMeta,
    UnknownProperty,
    WdwError,
)
from .model import Diagnostic, SourceSchema, WarehouseSchema
from .predicates import Atom, Binding, Lit, Path, Pred, evaluate, evaluate_on, strip_var
from .temporal import Instant
from .values import (
    DOUBLE,
    SHORT,
    Collection,
    Ref,
    StructType,
    Type,
    ValueSet,
    canon,
    canonical_json,
    is_numeric,
    is_numeric_type,
    is_ref_like,
    to_json,
)

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Arg:
    """An operand, optionally bound to a variable used by paths and predicates."""

    expr: "Expr"
    var: str | None = None


@dataclass(frozen=True)
class ClassRef:
    name: str


@dataclass(frozen=True)
class Project:
    paths: tuple[Path, ...]
    arg: Arg


@dataclass(frozen=True)
class Mask:
    paths: tuple[Path, ...]
    arg: Arg


@dataclass(frozen=True)
class AggCall:
    fn: str
    path: Path


@dataclass(frozen=True)
class MethodCall:
    method: str


@dataclass(frozen=True)
class SpecificType:
    type: Type


@dataclass(frozen=True)
class AugmentBinding:
    name: str
    source: AggCall | MethodCall | SpecificType


@dataclass(frozen=True)
class Augment:
    bindings: tuple[AugmentBinding, ...]
    arg: Arg


@dataclass(frozen=True)
class Select:
    pred: Pred
    arg: Arg


@dataclass(frozen=True)
class Join:
    pred: Pred
    left: Arg
    right: Arg


@dataclass(frozen=True)
class Nest:
    group: tuple[Path, ...]
    attr: str
    arg: Arg


@dataclass(frozen=True)
class Unnest:
    paths: tuple[Path, ...]
    arg: Arg


@dataclass(frozen=True)
class Union:
    left: Arg
    right: Arg


@dataclass(frozen=True)
class Intersect:
    left: Arg
    right: Arg


@dataclass(frozen=True)
class Diff:
    left: Arg
    right: Arg


@dataclass(frozen=True)
class Generalize:
    paths: tuple[Path, ...]
    args: tuple[Arg, ...]


@dataclass(frozen=True)
class Specialize:
    pred: Pred
    args: tuple[Arg, ...]


Expr = (
    ClassRef | Project | Mask | Augment | Select | Join | Nest | Unnest
    | Union | Intersect | Diff | Generalize | Specialize
)
SET_OPS = (Union, Intersect, Diff)
HIERARCHY_OPS = (Generalize, Specialize)
AGGREGATES = ("count", "sum", "avg", "max", "min")


def children(e) -> tuple[Arg, ...]:
    if isinstance(e, ClassRef):
        return ()
    if isinstance(e, (Join, *SET_OPS)):
        return (e.left, e.right)
    if isinstance(e, HIERARCHY_OPS):
        return e.args
    return (e.arg,)


def class_refs(e) -> list[str]:
    if isinstance(e, ClassRef):
        return [e.name]
    out = []
    for a in children(e):
        out.extend(n for n in class_refs(a.expr) if n not in out)
    return out


# ---------------------------------------------------------------------------
# Snapshot and results
# ---------------------------------------------------------------------------


@dataclass
class SourceObject:
    oid: str
    value: dict[str, Any]


@dataclass
class SourceSnapshot:
    schema: SourceSchema
    at: Instant | None = None
    objects: dict[str, list[SourceObject]] = field(default_factory=dict)

    def extent(self, cls: str) -> list[SourceObject]:
        """Deep extent: objects of ``cls`` and of all its subclasses."""
        out = list(self.objects.get(cls, ()))
        for sub in self.schema.descendants(cls):
            out.extend(self.objects.get(sub, ()))
        return out


Origin = tuple[str, str]  # (declaring source class, dotted property path)


@dataclass(frozen=True)
class Field:
    type: Type
    origins: frozenset[Origin] = frozenset()
    computed: bool = False
    members: tuple[tuple[str, "Field"], ...] | None = None

    def sub(self, name: str, t: Type) -> "Field":
        if self.members is not None:
            for n, f in self.members:
                if n == name:
                    return f
        return Field(t, frozenset((c, f"{p}.{name}") for c, p in self.origins), self.computed)


@dataclass
class Obj:
    lineage: Any
    value: dict[str, Any]
    identity: Ref | None = None
    members: tuple[tuple[str | None, Any], ...] = ()


@dataclass(frozen=True)
class Link:
    """A relationship consumed by a join; derived when both sides survive."""

    rel: Origin
    left: frozenset[str]
    right: frozenset[str]


@dataclass(frozen=True)
class Selection:
    """A selection predicate rewritten over source origins, for object-usage analysis."""

    pred: Pred
    classes: frozenset[str]


@dataclass
class EvalResult:
    structure: dict[str, Field]
    objects: list[Obj]
    involved: frozenset[str] = frozenset()
    links: tuple[Link, ...] = ()
    selections: tuple[Selection, ...] = ()
    method_calls: dict[str, str] = field(default_factory=dict)

    @property
    def origin_classes(self) -> frozenset[str]:
        return frozenset(c for f in self.structure.values() for c, _ in f.origins)

    @property
    def derived_props(self) -> frozenset[tuple[str | None, str]]:
        """Source origins present in the result, computed field names (class None),
        and relationships fused by a join whose two sides both survive."""
        out: set[tuple[str | None, str]] = set()
        for name, f in self.structure.items():
            if f.computed:
                out.add((None, name))
            out.update(f.origins)
        present = self.origin_classes
        for link in self.links:
            if present & link.left and present & link.right:
                out.add(link.rel)
        return frozenset(out)

    def values(self) -> list[dict[str, Any]]:
        return [o.value for o in self.objects]


def is_derived(derived: Iterable[tuple[str | None, str]], cls: str, path: str) -> bool:
    """Whether source column ``cls.path`` is covered by a derived origin."""
    for c, p in derived:
        if c == cls and (path == p or path.startswith(p + ".")):
            return True
    return False


def _merge(*results: EvalResult, **kw) -> dict:
    out = dict(
        involved=frozenset().union(*(r.involved for r in results)),
        links=tuple(l for r in results for l in r.links),
        selections=tuple(s for r in results for s in r.selections),
        method_calls={k: v for r in results for k, v in r.method_calls.items()},
    )
    out.update(kw)
    return out


# ---------------------------------------------------------------------------
# Type navigation helpers
# ---------------------------------------------------------------------------


def _path_parts(p: Path, var: str | None) -> tuple[str, ...]:
    return strip_var(p, var).parts


def _field_at(structure: dict[str, Field], parts: Sequence[str]) -> tuple[str, Field]:
    """Leaf field reached by a dotted path through struct types."""
    if not parts or parts[0] not in structure:
        raise UnknownProperty(f"unknown property {'.'.join(parts)!r}; have {sorted(structure)}")
    f = structure[parts[0]]
    for i, step in enumerate(parts[1:], 1):
        t = f.type
        if not isinstance(t, StructType) or step not in t.field_map():
            raise UnknownProperty(f"unknown property {'.'.join(parts[: i + 1])!r}")
        f = f.sub(step, t.field_map()[step])
    return parts[-1], f


def _type_through(structure: dict[str, Field], parts: Sequence[str]) -> Type:
    """Type of a path that may cross collections (each crossing wraps the result)."""
    if not parts or parts[0] not in structure:
        raise UnknownProperty(f"unknown property {'.'.join(parts)!r}")
    t = structure[parts[0]].type
    wraps: list[str] = []
    for step in parts[1:]:
        while isinstance(t, Collection):
            wraps.append(t.kind)
            t = t.elem
        if not isinstance(t, StructType) or step not in t.field_map():
            raise UnknownProperty(f"unknown property {'.'.join(parts)!r}")
        t = t.field_map()[step]
    for k in reversed(wraps):
        t = Collection(k, t)
    return t


def _navigate(value: Any, parts: Sequence[str]) -> Any:
    from .predicates import navigate

    return navigate(value, tuple(parts))


def _check_pred(pred: Pred, scopes: dict[str, dict[str, Field]], defaults: Sequence[str]) -> None:
    """Structural check that every path of ``pred`` resolves."""
    for a in pred.atoms():
        for o in (a.left, a.right):
            if not isinstance(o, Path):
                continue
            parts = o.parts
            if parts[0] in scopes:
                if len(parts) > 1:
                    _type_through(scopes[parts[0]], parts[1:])
                continue
            if not any(parts[0] in scopes[d] for d in defaults if d in scopes):
                raise UnknownProperty(f"unbound path {o}")


def _pred_origin(pred: Pred, scopes: dict[str, dict[str, Field]], defaults: Sequence[str]) -> Selection:
    """Rewrite paths to ``(class, path)`` origins for implication checks."""
    classes: set[str] = set()
    disj = []
    for conj in pred.disjuncts:
        atoms = []
        for a in conj:
            sides = []
            for o in (a.left, a.right):
                if isinstance(o, Path):
                    parts = o.parts
                    scope = None
                    if parts[0] in scopes and len(parts) > 1:
                        scope, parts = scopes[parts[0]], parts[1:]
                    else:
                        for d in defaults:
                            if d in scopes and parts[0] in scopes[d]:
                                scope = scopes[d]
                                break
                    origin = None
                    if scope is not None:
                        try:
                            _, f = _field_at(scope, parts)
                            if len(f.origins) == 1:
                                origin = next(iter(f.origins))
                        except UnknownProperty:
                            pass
                    if origin is None:
                        sides.append(Path(("?",) + o.parts))
                    else:
                        classes.add(origin[0])
                        sides.append(Path((origin[0],) + tuple(origin[1].split("."))))
                else:
                    sides.append(o)
            atoms.append(Atom(sides[0], a.op, sides[1]))
        disj.append(tuple(atoms))
    return Selection(Pred(tuple(disj)), frozenset(classes))


# ---------------------------------------------------------------------------
# Evaluator
# ---------------------------------------------------------------------------


class Evaluator:
    """Evaluates mapping expressions against one snapshot.

    ``warehouse`` holds already-evaluated warehouse classes that mappings may
    reference by name (generalization and specialization operands).
    """

    def __init__(self, snapshot: SourceSnapshot, warehouse: dict[str, EvalResult] | None = None):
        self.snapshot = snapshot
        self.schema = snapshot.schema
        self.warehouse = warehouse or {}

    def eval(self, e) -> EvalResult:
        if isinstance(e, Arg):
            e = e.expr
        method = getattr(self, "eval_" + type(e).__name__.lower(), None)
        if method is None:
            raise TypeError(f"not a mapping expression: {e!r}")
        return method(e)

    # -- leaves -------------------------------------------------------------

    def eval_classref(self, e: ClassRef) -> EvalResult:
        if e.name in self.warehouse:
            return self.warehouse[e.name]
        if e.name not in self.schema.classes:
            raise UnknownClass(f"unknown class {e.name!r}")
        props = self.schema.all_properties(e.name)
        structure = {n: Field(p.type, frozenset({(decl, n)})) for n, (decl, p) in props.items()}
        objects = [
            Obj(so.oid, {n: so.value.get(n) for n in props}, Ref(so.oid))
            for so in self.snapshot.extent(e.name)
        ]
        involved = frozenset([e.name, *self.schema.ancestors(e.name)])
        return EvalResult(structure, objects, involved)

    # -- structuring --------------------------------------------------------

    def eval_project(self, e: Project, keep_computed: bool = True) -> EvalResult:
        inp = self.eval(e.arg)
        return project(inp, [_path_parts(p, e.arg.var) for p in e.paths], keep_computed)

    def eval_mask(self, e: Mask) -> EvalResult:
        inp = self.eval(e.arg)
        return mask(inp, [_path_parts(p, e.arg.var) for p in e.paths])

    def eval_augment(self, e: Augment) -> EvalResult:
        inp = self.eval(e.arg)
        return augment(inp, e.bindings, e.arg.var, self.schema)

    # -- population ---------------------------------------------------------

    def eval_select(self, e: Select) -> EvalResult:
        inp = self.eval(e.arg)
        return select(inp, e.pred, e.arg.var)

    def eval_join(self, e: Join) -> EvalResult:
        a, b = self.eval(e.left), self.eval(e.right)
        return join(e.pred, a, b, e.left.var, e.right.var)

    def eval_nest(self, e: Nest) -> EvalResult:
        inp = self.eval(e.arg)
        return nest(inp, [_path_parts(p, e.arg.var) for p in e.group], e.attr)

    def eval_unnest(self, e: Unnest) -> EvalResult:
        inp = self.eval(e.arg)
        return unnest(inp, [_path_parts(p, e.arg.var) for p in e.paths])

    # -- set ----------------------------------------------------------------

    def eval_union(self, e: Union) -> EvalResult:
        return set_op("union", self.eval(e.left), self.eval(e.right))

    def eval_intersect(self, e: Intersect) -> EvalResult:
        return set_op("intersect", self.eval(e.left), self.eval(e.right))

    def eval_diff(self, e: Diff) -> EvalResult:
        return set_op("diff", self.eval(e.left), self.eval(e.right))

    # -- hierarchy ----------------------------------------------------------

    def eval_generalize(self, e: Generalize) -> EvalResult:
        inputs = [self.eval(a) for a in e.args]
        names = [_arg_class(a) for a in e.args]
        props = [_path_parts(p, e.args[0].var)[-1] for p in e.paths]
        return generalize(props, inputs, names)

    def eval_specialize(self, e: Specialize) -> EvalResult:
        inputs = [self.eval(a) for a in e.args]
        return specialize(e.pred, inputs, [a.var for a in e.args])


def _arg_class(a: Arg) -> str | None:
    return a.expr.name if isinstance(a.expr, ClassRef) else None


def eval_expr(e, snapshot: SourceSnapshot, warehouse: dict[str, EvalResult] | None = None) -> EvalResult:
    return Evaluator(snapshot, warehouse).eval(e)


# ---------------------------------------------------------------------------
# Individual functions (usable directly on EvalResults)
# ---------------------------------------------------------------------------


def project(inp: EvalResult, paths: Sequence[Sequence[str]], keep_computed: bool = True) -> EvalResult:
    """Keep the given (possibly dotted) paths; every input object is kept.

    Computed attributes created by an inner augmentation stay in the result.
    """
    chosen: list[tuple[str, tuple[str, ...], Field]] = []
    for parts in paths:
        parts = tuple(parts)
        leaf, f = _field_at(inp.structure, parts)
        chosen.append((leaf, parts, f))
    leaves = [c[0] for c in chosen]
    out_names: list[str] = []
    for leaf, parts, f in chosen:
        name = leaf
        if leaves.count(leaf) > 1:
            owners = sorted({c for c, _ in f.origins}) or [parts[0]]
            name = owners[0] + leaf
        if name in out_names:
            raise NameCollision(f"projection produces {name!r} twice")
        out_names.append(name)
    structure = {n: f for n, (_, _, f) in zip(out_names, chosen)}
    extra = []
    if keep_computed:
        extra = [n for n, f in inp.structure.items() if f.computed and n not in structure]
        for n in extra:
            structure[n] = inp.structure[n]
    objects = []
    for o in inp.objects:
        v = {n: _navigate(o.value, parts) for n, (_, parts, _) in zip(out_names, chosen)}
        for n in extra:
            v[n] = o.value.get(n)
        objects.append(replace(o, value=v))
    calls = {k: m for k, m in inp.method_calls.items() if k in structure}
    return EvalResult(structure, objects, **_merge(inp, method_calls=calls))


def mask(inp: EvalResult, paths: Sequence[Sequence[str]]) -> EvalResult:
    hidden = set()
    for parts in paths:
        if len(parts) != 1 or parts[0] not in inp.structure:
            raise UnknownProperty(f"cannot mask {'.'.join(parts)!r}")
        hidden.add(parts[0])
    keep = [(n,) for n in inp.structure if n not in hidden]
    if not keep:
        raise EmptyStructure("masking every property leaves an empty structure")
    return project(inp, keep, keep_computed=False)


def aggregate(fn: str, items: Sequence[Any]) -> Any:
    """Apply one of count/sum/avg/max/min; ``None`` members are ignored except by count."""
    if fn not in AGGREGATES:
        raise WdwError(f"unknown aggregate {fn!r}")
    if fn == "count":
        return len(items)
    vals = [x for x in items if x is not None]
    for x in vals:
        if not is_numeric(x):
            raise NonNumericAgg(f"{fn} over non-numeric value {x!r}")
    if fn == "sum":
        return sum(vals)
    if not vals:
        return None
    if fn == "avg":
        return sum(vals) / len(vals)
    return max(vals) if fn == "max" else min(vals)


def augment(inp: EvalResult, bindings: Sequence[AugmentBinding], var: str | None, schema: SourceSchema) -> EvalResult:
    structure = dict(inp.structure)
    calls = dict(inp.method_calls)
    plans = []
    for b in bindings:
        if b.name in structure:
            raise NameCollision(f"augmented property {b.name!r} already exists")
        src = b.source
        if isinstance(src, AggCall):
            if src.fn not in AGGREGATES:
                raise WdwError(f"unknown aggregate {src.fn!r}")
            parts = _path_parts(src.path, var)
            t = _type_through(inp.structure, parts)
            if not isinstance(t, Collection):
                raise NonCollectionPath(f"{src.fn}({src.path}) is not over a collection")
            elem = t.elem
            while isinstance(elem, Collection):
                elem = elem.elem
            if src.fn == "count":
                rtype = SHORT
            else:
                if not is_numeric_type(elem):
                    raise NonNumericAgg(f"{src.fn}({src.path}) over non-numeric {elem}")
                rtype = DOUBLE if src.fn == "avg" else elem
            structure[b.name] = Field(rtype, frozenset(), computed=True)
            plans.append((b.name, src.fn, parts))
        elif isinstance(src, MethodCall):
            m = _resolve_method(src.method, inp, schema)
            structure[b.name] = Field(m.return_type or DOUBLE, frozenset(), computed=True)
            calls[b.name] = m.qualified
            plans.append((b.name, None, None))
        else:
            structure[b.name] = Field(src.type, frozenset(), computed=True)
            plans.append((b.name, None, None))
    objects = []
    for o in inp.objects:
        v = dict(o.value)
        for name, fn, parts in plans:
            if fn is None:
                v[name] = None
                continue
            coll = _navigate(o.value, parts)
            if coll is None:
                items: list[Any] = []
            elif isinstance(coll, (list, ValueSet)):
                items = _flatten(coll)
            else:
                raise NonCollectionPath(f"value at {'.'.join(parts)} is not a collection")
            v[name] = aggregate(fn, items)
        objects.append(replace(o, value=v))
    return EvalResult(structure, objects, **_merge(inp, method_calls=calls))


def _flatten(coll) -> list[Any]:
    out = []
    for x in coll:
        if isinstance(x, (list, ValueSet)):
            out.extend(_flatten(x))
        else:
            out.append(x)
    return out


def _resolve_method(name: str, inp: EvalResult, schema: SourceSchema):
    if "::" in name:
        return schema.method(name)
    found = []
    for cls in sorted(inp.involved):
        if cls in schema.classes:
            m = schema.all_methods(cls).get(name)
            if m is not None and m.qualified not in [f.qualified for f in found]:
                found.append(m)
    if len(found) != 1:
        raise UnknownMethodMeta(f"cannot resolve method {name!r} among {sorted(inp.involved)}")
    return found[0]


def select(inp: EvalResult, pred: Pred, var: str | None) -> EvalResult:
    name = var or "_"
    scopes = {name: inp.structure}
    _check_pred(pred, scopes, (name,))
    objects = [o for o in inp.objects if evaluate_on(pred, o.value, name, o.identity)]
    sel = _pred_origin(pred, scopes, (name,))
    return EvalResult(dict(inp.structure), objects, **_merge(inp, selections=inp.selections + (sel,)))


def _rename_conflicts(a: dict[str, Field], b: dict[str, Field], va: str | None, vb: str | None):
    conflicts = set(a) & set(b)

    def prefix(f: Field, fallback: str) -> str:
        owners = sorted({c for c, _ in f.origins})
        return owners[0] if len(owners) == 1 else fallback

    ra, rb = {}, {}
    for n in a:
        ra[n] = prefix(a[n], (va or "L").upper()) + n if n in conflicts else n
    for n in b:
        rb[n] = prefix(b[n], (vb or "R").upper()) + n if n in conflicts else n
    clash = set(ra.values()) & set(rb.values())
    for n in clash:
        src = [k for k, v in rb.items() if v == n][0]
        rb[src] = (vb or "R").upper() + src
    if set(ra.values()) & set(rb.values()):
        raise NameCollision(f"cannot disambiguate {sorted(set(ra.values()) & set(rb.values()))}")
    return ra, rb


def join(pred: Pred, a: EvalResult, b: EvalResult, va: str | None = None, vb: str | None = None) -> EvalResult:
    """Filtered cartesian product; name clashes get the owning class as prefix."""
    la, lb = va or "_l", vb or "_r"
    if la == lb:
        lb = lb + "'"
    scopes = {la: a.structure, lb: b.structure}
    _check_pred(pred, scopes, (la, lb))
    ra, rb = _rename_conflicts(a.structure, b.structure, va, vb)
    structure = {ra[n]: f for n, f in a.structure.items()}
    structure.update({rb[n]: f for n, f in b.structure.items()})
    objects = []
    for x in a.objects:
        for y in b.objects:
            env = {la: Binding(x.value, x.identity), lb: Binding(y.value, y.identity)}
            if evaluate(pred, env, (la, lb)):
                v = {ra[n]: val for n, val in x.value.items()}
                v.update({rb[n]: val for n, val in y.value.items()})
                objects.append(Obj([to_json(x.lineage), to_json(y.lineage)], v))
    links = list(a.links + b.links)
    for atom in pred.atoms():
        rel = _link_relationship(atom, scopes, (la, lb))
        if rel is not None:
            links.append(Link(rel, a.origin_classes, b.origin_classes))
    calls = {ra.get(k, k): m for k, m in a.method_calls.items()}
    calls.update({rb.get(k, k): m for k, m in b.method_calls.items()})
    sels = []
    for s in (a.selections + b.selections):
        sels.append(s)
    return EvalResult(
        structure,
        objects,
        involved=a.involved | b.involved,
        links=tuple(links),
        selections=tuple(sels),
        method_calls=calls,
    )


def _link_relationship(atom: Atom, scopes, defaults) -> Origin | None:
    """The relationship named by ``x.rel = y`` or ``y in x.rel``, if any."""
    cands = []
    if atom.op == "in" and isinstance(atom.right, Path):
        cands.append(atom.right)
    elif atom.op == "=":
        cands.extend(o for o in (atom.left, atom.right) if isinstance(o, Path) and len(o.parts) > 1)
    for p in cands:
        parts = p.parts
        scope = None
        if parts[0] in scopes:
            scope, parts = scopes[parts[0]], parts[1:]
        else:
            for d in defaults:
                if parts[0] in scopes[d]:
                    scope = scopes[d]
                    break
        if scope is None or not parts:
            continue
        try:
            _, f = _field_at(scope, parts)
        except UnknownProperty:
            continue
        if is_ref_like(f.type) and len(f.origins) == 1:
            return next(iter(f.origins))
    return None


def nest(inp: EvalResult, group: Sequence[Sequence[str]], attr: str) -> EvalResult:
    gnames = []
    for parts in group:
        if len(parts) != 1 or parts[0] not in inp.structure:
            raise UnknownProperty(f"cannot group by {'.'.join(parts)!r}")
        gnames.append(parts[0])
    if attr in inp.structure:
        raise NameCollision(f"nest attribute {attr!r} already exists")
    rest = [n for n in inp.structure if n not in gnames]
    member_fields = tuple((n, inp.structure[n]) for n in rest)
    elem = StructType(tuple((n, f.type) for n, f in member_fields))
    attr_field = Field(
        Collection("Set", elem),
        frozenset(o for _, f in member_fields for o in f.origins),
        computed=any(f.computed for _, f in member_fields),
        members=member_fields,
    )
    structure = {n: inp.structure[n] for n in gnames}
    structure[attr] = attr_field
    groups: dict[tuple, tuple[dict, list]] = {}
    for o in inp.objects:
        key = tuple(canon(o.value[n]) for n in gnames)
        if key not in groups:
            groups[key] = ({n: o.value[n] for n in gnames}, [])
        groups[key][1].append({n: o.value[n] for n in rest})
    objects = []
    for gvals, members in groups.values():
        v = dict(gvals)
        v[attr] = ValueSet(members)
        objects.append(Obj(["nest", [to_json(gvals[n]) for n in gnames]], v))
    calls = {k: m for k, m in inp.method_calls.items() if k in gnames}
    return EvalResult(structure, objects, **_merge(inp, method_calls=calls))


def unnest(inp: EvalResult, paths: Sequence[Sequence[str]]) -> EvalResult:
    names = []
    for parts in paths:
        if len(parts) != 1 or parts[0] not in inp.structure:
            raise UnknownProperty(f"cannot unnest {'.'.join(parts)!r}")
        if not isinstance(inp.structure[parts[0]].type, Collection):
            raise NotACollection(f"{parts[0]!r} is not a collection")
        names.append(parts[0])
    structure: dict[str, Field] = {}
    expand: dict[str, list[str] | None] = {}
    for n, f in inp.structure.items():
        if n not in names:
            if n in structure:
                raise NameCollision(f"unnest produces {n!r} twice")
            structure[n] = f
            continue
        elem = f.type.elem
        if isinstance(elem, StructType):
            sub = [(fn, f.sub(fn, ft)) for fn, ft in elem.fields]
            expand[n] = [fn for fn, _ in sub]
            for fn, ff in sub:
                if fn in structure or (fn in inp.structure and fn not in names):
                    raise NameCollision(f"unnest of {n!r} collides on {fn!r}")
                structure[fn] = ff
        else:
            expand[n] = None
            structure[n] = Field(elem, f.origins, f.computed)
    objects = []
    for o in inp.objects:
        rows = [({k: v for k, v in o.value.items() if k not in names}, [])]
        for n in names:
            coll = o.value.get(n)
            members = list(coll) if coll is not None else []
            nxt = []
            for base, picked in rows:
                for m in members:
                    v = dict(base)
                    if expand[n] is None:
                        v[n] = m
                    else:
                        for fn in expand[n]:
                            v[fn] = m.get(fn) if isinstance(m, dict) else None
                    nxt.append((v, picked + [to_json(m)]))
            rows = nxt
        for v, picked in rows:
            ordered = {k: v[k] for k in structure}
            objects.append(Obj([to_json(o.lineage), picked], ordered))
    return EvalResult(structure, objects, **_merge(inp))


def _same_structure(a: EvalResult, b: EvalResult) -> dict[str, Field]:
    if set(a.structure) != set(b.structure):
        raise StructureMismatch(f"structures differ: {sorted(a.structure)} vs {sorted(b.structure)}")
    out = {}
    for n, f in a.structure.items():
        g = b.structure[n]
        if f.type != g.type:
            raise StructureMismatch(f"property {n!r} typed {f.type} vs {g.type}")
        out[n] = Field(f.type, f.origins | g.origins, f.computed or g.computed, f.members)
    return out


def set_op(kind: str, a: EvalResult, b: EvalResult) -> EvalResult:
    """Value-set union / intersection / difference (structural equality of values)."""
    structure = _same_structure(a, b)

    def distinct(objs: list[Obj]) -> dict[tuple, Obj]:
        out: dict[tuple, Obj] = {}
        for o in objs:
            k = canon(o.value)
            if k not in out or canonical_json(o.lineage) < canonical_json(out[k].lineage):
                out[k] = o
        return out

    da, db = distinct(a.objects), distinct(b.objects)
    if kind == "union":
        keys = list(da) + [k for k in db if k not in da]
        pick = {k: _pick(da.get(k), db.get(k)) for k in keys}
    elif kind == "intersect":
        keys = [k for k in da if k in db]
        pick = {k: _pick(da[k], db[k]) for k in keys}
    elif kind == "diff":
        keys = [k for k in da if k not in db]
        pick = {k: da[k] for k in keys}
    else:
        raise ValueError(kind)
    objects = [replace(pick[k], value={n: pick[k].value[n] for n in structure}) for k in keys]
    return EvalResult(structure, objects, **_merge(a, b))


def _pick(x: Obj | None, y: Obj | None) -> Obj:
    if x is None:
        return y
    if y is None:
        return x
    return x if canonical_json(x.lineage) <= canonical_json(y.lineage) else y


def generalize(props: Sequence[str], inputs: Sequence[EvalResult], names: Sequence[str | None]) -> EvalResult:
    """Superclass over the shared properties of every operand.

    Each operand object yields one super object; objects from different
    operands with equal projected values share one.
    """
    structure: dict[str, Field] = {}
    for p in props:
        fields = []
        for r in inputs:
            if p not in r.structure:
                raise UnknownProperty(f"generalized property {p!r} missing from an operand")
            fields.append(r.structure[p])
        t = fields[0].type
        if any(f.type != t for f in fields):
            raise StructureMismatch(f"generalized property {p!r} has differing types")
        structure[p] = Field(
            t,
            frozenset().union(*(f.origins for f in fields)),
            any(f.computed for f in fields),
            fields[0].members,
        )
    objects: list[Obj] = []
    owner: dict[tuple, tuple[int, int]] = {}
    for i, (r, cname) in enumerate(zip(inputs, names)):
        for o in r.objects:
            v = {p: o.value[p] for p in props}
            k = canon(v)
            if k in owner and owner[k][0] != i:
                j = owner[k][1]
                objects[j].members = objects[j].members + ((cname, o.lineage),)
                continue
            owner.setdefault(k, (i, len(objects)))
            objects.append(Obj(o.lineage, v, o.identity, ((cname, o.lineage),)))
    calls = {k: m for r in inputs for k, m in r.method_calls.items() if k in structure}
    return EvalResult(structure, objects, **_merge(*inputs, method_calls=calls))


def specialize(pred: Pred, inputs: Sequence[EvalResult], vars: Sequence[str | None]) -> EvalResult:
    """Subclass: objects present in every operand (by lineage) satisfying ``pred``."""
    structure: dict[str, Field] = {}
    for r in inputs:
        for n, f in r.structure.items():
            if n in structure and structure[n].type != f.type:
                raise StructureMismatch(f"property {n!r} typed differently across operands")
            structure.setdefault(n, f)
    names = [v or f"_{i}" for i, v in enumerate(vars)]
    merged_name = "_"
    scopes = {n: r.structure for n, r in zip(names, inputs)}
    scopes[merged_name] = structure
    _check_pred(pred, scopes, (merged_name,))
    index = [{canonical_json(o.lineage): o for o in r.objects} for r in inputs[1:]]
    objects = []
    for o in inputs[0].objects:
        key = canonical_json(o.lineage)
        if not all(key in ix for ix in index):
            continue
        parts = [o] + [ix[key] for ix in index]
        value: dict[str, Any] = {}
        for p in parts:
            for n, v in p.value.items():
                value.setdefault(n, v)
        env = {n: Binding(p.value, p.identity) for n, p in zip(names, parts)}
        env[merged_name] = Binding(value, o.identity)
        if evaluate(pred, env, (merged_name,)):
            objects.append(Obj(o.lineage, {n: value.get(n) for n in structure}, o.identity))
    sel = _pred_origin(pred, scopes, (merged_name,))
    base = _merge(*inputs)
    base["selections"] = base["selections"] + (sel,)
    return EvalResult(structure, objects, **base)


# ---------------------------------------------------------------------------
# Whole-schema resolution
# ---------------------------------------------------------------------------


def warehouse_deps(schema: WarehouseSchema) -> dict[str, list[str]]:
    out = {}
    for name, wc in schema.classes.items():
        refs = class_refs(wc.mapping) if wc.mapping is not None else []
        out[name] = [r for r in refs if r in schema.classes and r != name]
    return out


def evaluation_order(schema: WarehouseSchema) -> list[str]:
    ts = graphlib.TopologicalSorter()
    for name, deps in warehouse_deps(schema).items():
        ts.add(name, *deps)
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        raise DependencyCycle(f"mapping dependency cycle: {' -> '.join(exc.args[1])}") from None


def hierarchy_edges(schema: WarehouseSchema) -> dict[str, tuple[str, ...]]:
    """Declared supers plus the edges created by generalization and specialization."""
    edges: dict[str, list[str]] = {n: list(c.declared_supers) for n, c in schema.classes.items()}
    for name, wc in schema.classes.items():
        e = wc.mapping
        if isinstance(e, Generalize):
            for a in e.args:
                sub = _arg_class(a)
                if sub in edges and name not in edges[sub]:
                    edges[sub].append(name)
        elif isinstance(e, Specialize):
            for a in e.args:
                sup = _arg_class(a)
                if sup in schema.classes and sup not in edges[name]:
                    edges[name].append(sup)
    return {n: tuple(v) for n, v in edges.items()}


def _nested_hierarchy(e, top: bool = True) -> bool:
    if not top and isinstance(e, HIERARCHY_OPS):
        return True
    return any(_nested_hierarchy(a.expr, False) for a in children(e))


def evaluate_warehouse(schema: WarehouseSchema, snapshot: SourceSnapshot) -> dict[str, EvalResult]:
    """Evaluate every class mapping in dependency order."""
    results: dict[str, EvalResult] = {}
    for name in evaluation_order(schema):
        wc = schema.classes[name]
        if wc.mapping is None:
            structure = {n: Field(t) for n, t in declared_structure(schema, name).items()}
            results[name] = EvalResult(structure, [])
            continue
        visible = {k: v for k, v in results.items() if k != name}
        results[name] = eval_expr(wc.mapping, snapshot, visible)
    return results


def declared_structure(schema: WarehouseSchema, name: str, _seen=None) -> dict[str, Type]:
    """Declared properties of a class including those declared on its declared supers."""
    _seen = _seen or set()
    if name in _seen or name not in schema.classes:
        return {}
    _seen.add(name)
    wc = schema.classes[name]
    out: dict[str, Type] = {}
    for s in wc.declared_supers:
        out.update(declared_structure(schema, s, _seen))
    out.update(wc.declared)
    return out


def resolve_schema(schema: WarehouseSchema) -> list[Diagnostic]:
    """Compute structures and supers of every warehouse class; report problems."""
    diags: list[Diagnostic] = []
    edges = hierarchy_edges(schema)
    for n, wc in schema.classes.items():
        wc.supers = edges.get(n, ())
        if wc.mapping is not None and _nested_hierarchy(wc.mapping):
            diags.append(Diagnostic(f"class {n}", "generalize/specialize must be the outermost function"))
    try:
        order = evaluation_order(schema)
    except DependencyCycle as exc:
        return diags + [Diagnostic("mappings", str(exc))]
    empty = SourceSnapshot(schema.source)
    results: dict[str, EvalResult] = {}
    for name in order:
        wc = schema.classes[name]
        try:
            if wc.mapping is None:
                wc.structure = declared_structure(schema, name)
                results[name] = EvalResult({n: Field(t) for n, t in wc.structure.items()}, [])
                continue
            r = eval_expr(wc.mapping, empty, {k: v for k, v in results.items() if k != name})
        except WdwError as exc:
            diags.append(Diagnostic(f"class {name}", f"{type(exc).__name__}: {exc}"))
            continue
        results[name] = r
        wc.structure = {n: f.type for n, f in r.structure.items()}
        declared = declared_structure(schema, name)
        if declared and set(declared) != set(wc.structure):
            missing = sorted(set(declared) - set(wc.structure))
            extra = sorted(set(wc.structure) - set(declared))
            diags.append(Diagnostic(
                f"class {name}",
                f"mapping structure differs from declaration (missing {missing}, undeclared {extra})",
            ))
    return diags


def structural_results(schema: WarehouseSchema) -> dict[str, EvalResult]:
    """Data-free evaluation of every mapping (structures, origins, links)."""
    return evaluate_warehouse(schema, SourceSnapshot(schema.source))
