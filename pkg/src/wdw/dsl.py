"""Schema language: source interfaces, warehouse classes with mappings and filters, environments.

The surface follows ODMG interface listings. A warehouse interface may be
followed by ``mapping <expr>`` and ``with temporal filter {...}, archive
filter {fn(p), ...}``. Mapping operators accept English keywords or the
usual symbols (π μ α σ ⋈ η η⁻¹ ∪ ∩ − Λ Σ).

:func:`parse_schema` returns a :class:`Document`; :func:`print_schema` emits
the canonical text, and parsing that text yields an equal document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from .algebra import (
    AGGREGATES,
    AggCall,
    Arg,
    Augment,
    AugmentBinding,
    ClassRef,
    Diff,
    Generalize,
    Intersect,
    Join,
    Mask,
    MethodCall,
    Nest,
    Project,
    Select,
    Specialize,
    SpecificType,
    Union,
    Unnest,
    class_refs,
    children,
)
from .archive import ArchiveClause, ArchivePredicate
from .errors import DslSyntaxError, DuplicateDeclaration, UnresolvedName
from .model import (
    Environment,
    MethodSig,
    Property,
    SourceClass,
    SourceSchema,
    WarehouseClass,
    WarehouseSchema,
)
from .predicates import Atom, Lit, Path, Pred
from .temporal import TemporalError, TemporalUnit, parse_instant, format_instant
from .values import SCALAR_TYPES, Collection, RefType, Scalar, StructType, Type, format_value

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

SYMBOL_OPS = {
    "π": "project",
    "μ": "mask",
    "α": "augment",
    "σ": "select",
    "⋈": "join",
    "η⁻¹": "unnest",
    "η": "nest",
    "∪": "union",
    "∩": "intersect",
    "−": "diff",
    "Λ": "generalize",
    "Σ": "specialize",
}
OPERATORS = ("project", "mask", "augment", "select", "join", "nest", "unnest",
             "union", "intersect", "diff", "generalize", "specialize")
COLLECTION_KINDS = ("Set", "List", "Bag", "Array")
_UNITS = "|".join(u.value for u in TemporalUnit if u is not TemporalUnit.JOUR_SEMAINE)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<instant>(?:""" + _UNITS + r""")\:\d[\w\-:]*|jour_semaine:\w+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<symbol>η⁻¹|[πμασ⋈η∪∩−ΛΣ])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>::|<=|>=|!=|≠|≤|≥|∈|[{}()\[\]<>,;:.=])
    """,
    re.VERBOSE | re.DOTALL,
)

_OP_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">=", "∈": "in"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            if kind == "symbol":
                kind, s = "name", SYMBOL_OPS[s]
            elif kind == "op":
                s = _OP_ALIASES.get(s, s)
            out.append(Token(kind, s, line, col))
        nl = s.count("\n") if kind in ("ws", "comment") else 0
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += m.end() - m.start()
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


# ---------------------------------------------------------------------------
# Document
# ---------------------------------------------------------------------------


@dataclass
class Document:
    source: SourceSchema
    warehouse: WarehouseSchema | None
    positions: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False)

    @property
    def schema(self) -> WarehouseSchema:
        """The warehouse schema (an empty one when the text declares only sources)."""
        if self.warehouse is None:
            return WarehouseSchema("warehouse", self.source)
        return self.warehouse


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


@dataclass
class _Iface:
    name: str
    pos: tuple[int, int]
    supers: list[tuple[str, Token]]
    members: list[Any]
    mapping: Any = None
    tempo: tuple[str, ...] | None = None
    archi: dict[str, str] | None = None

    @property
    def is_warehouse(self) -> bool:
        return self.mapping is not None or self.tempo is not None or self.archi is not None


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.type_refs: list[tuple[str, Token, str]] = []  # (target, token, context)
        self.positions: dict[str, tuple[int, int]] = {}

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise DslSyntaxError(f"{msg}, found {found}", t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("name", "op")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self, what: str = "a name") -> Token:
        if self.tok.kind != "name":
            self.fail(f"expected {what}")
        t = self.tok
        self.i += 1
        return t

    # -- document -----------------------------------------------------------

    def document(self) -> Document:
        source_name, wh_name = "source", None
        src_ifaces: list[_Iface] = []
        wh_ifaces: list[_Iface] = []
        loose: list[_Iface] = []
        envs: list[tuple[Environment, Token, list[tuple[str, Token]]]] = []
        default_refresh = None
        while self.tok.kind != "eof":
            if self.accept("source"):
                source_name = self.name("a source name").text
                self.expect("{")
                while not self.accept("}"):
                    src_ifaces.append(self.interface())
            elif self.accept("warehouse"):
                wh_name = self.name("a warehouse name").text
                self.expect("{")
                while not self.accept("}"):
                    if self.at("environment"):
                        envs.append(self.environment())
                    elif self.at("refresh"):
                        default_refresh = self.refresh_clause()
                    else:
                        wh_ifaces.append(self.interface())
            elif self.at("interface"):
                loose.append(self.interface())
            elif self.at("environment"):
                envs.append(self.environment())
            else:
                self.fail("expected 'source', 'warehouse', 'interface' or 'environment'")
        for it in loose:
            (wh_ifaces if it.is_warehouse else src_ifaces).append(it)
        if wh_ifaces or envs or default_refresh:
            wh_name = wh_name or "warehouse"
        return self.build(source_name, src_ifaces, wh_name, wh_ifaces, envs, default_refresh)

    # -- interfaces ---------------------------------------------------------

    def interface(self) -> _Iface:
        self.expect("interface")
        nt = self.name("an interface name")
        supers = []
        if self.accept("("):
            if not self.accept("extend") and not self.accept("extends"):
                self.fail("expected 'extend'")
            while True:
                t = self.name("a superclass name")
                supers.append((t.text, t))
                if not self.accept(","):
                    break
            self.expect(")")
        self.expect("{")
        members = []
        while not self.accept("}"):
            members.append(self.member(nt.text))
        it = _Iface(nt.text, (nt.line, nt.col), supers, members)
        if self.accept("mapping"):
            it.mapping = self.expr()
        if self.accept("with"):
            while True:
                if self.accept("temporal"):
                    self.expect("filter")
                    it.tempo = tuple(self.name_set())
                elif self.accept("archive"):
                    self.expect("filter")
                    it.archi = self.archive_filter()
                else:
                    self.fail("expected 'temporal filter' or 'archive filter'")
                if not self.accept(","):
                    break
        self.accept(";")
        return it

    def name_set(self) -> list[str]:
        self.expect("{")
        out = []
        if not self.accept("}"):
            while True:
                out.append(self.dotted())
                if self.accept("}"):
                    break
                self.expect(",")
        return out

    def dotted(self, qualified: bool = False) -> str:
        parts = [self.name().text]
        if qualified and self.accept("::"):
            parts = [parts[0] + "::" + self.name().text]
        while self.accept("."):
            parts.append(self.name().text)
        return ".".join(parts)

    def archive_filter(self) -> dict[str, str]:
        self.expect("{")
        out: dict[str, str] = {}
        if self.accept("}"):
            return out
        while True:
            fn = self.name("an aggregation function")
            self.expect("(")
            p = self.dotted()
            self.expect(")")
            if p in out:
                raise DuplicateDeclaration(f"property {p!r} archived twice", fn.line, fn.col)
            out[p] = fn.text
            if self.accept("}"):
                return out
            self.expect(",")

    def member(self, owner: str):
        start = self.tok
        if self.accept("attribute"):
            t = self.type_expr(owner)
            n = self.name("an attribute name")
            self.expect(";")
            return ("prop", Property(n.text, t, "attribute"), n)
        if self.accept("relationship"):
            t = self.type_expr(owner)
            n = self.name("a relationship name")
            inverse = None
            if self.accept("inverse"):
                c = self.name("a class name")
                self.expect("::")
                p = self.name("a property name")
                inverse = (c.text, p.text)
                self.type_refs.append((c.text, c, owner))
            self.expect(";")
            return ("prop", Property(n.text, t, "relationship", inverse), n)
        rtype = None
        if not self.accept("method"):
            rtype = self.type_expr(owner)
        n = self.name("a method name")
        self.expect("(")
        params = []
        depth = 0
        while depth or not self.at(")"):
            if self.tok.kind == "eof":
                self.fail("unterminated parameter list")
            if self.at("("):
                depth += 1
            elif self.at(")"):
                depth -= 1
            params.append(self.tok.text)
            self.i += 1
        self.expect(")")
        m = MethodSig(n.text, owner, rtype, " ".join(params))
        if self.accept("uses"):
            self.usage(m)
        self.expect(";")
        return ("usage" if rtype is None else "method", m, n)

    def usage(self, m: MethodSig) -> None:
        m.has_usage = True
        seen = False
        while True:
            if self.accept("properties"):
                m.uses_properties = m.uses_properties | frozenset(self.name_set())
            elif self.accept("methods"):
                self.expect("{")
                names = []
                if not self.accept("}"):
                    while True:
                        names.append(self.dotted(qualified=True))
                        if self.accept("}"):
                            break
                        self.expect(",")
                m.uses_methods = m.uses_methods | frozenset(names)
            elif self.accept("objects"):
                self.expect("where")
                m.uses_object_predicates = self.pred()
            elif self.accept("nothing"):
                pass
            else:
                if not seen:
                    self.fail("expected 'properties', 'methods', 'objects' or 'nothing'")
                return
            seen = True

    # -- types --------------------------------------------------------------

    def type_expr(self, ctx: str) -> Type:
        t = self.name("a type")
        if t.text == "Unsigned" and self.at("Short") or t.text == "Unsigned" and self.at("Long"):
            return Scalar("Unsigned " + self.name().text)
        if t.text in COLLECTION_KINDS and self.at("<"):
            self.expect("<")
            elem = self.type_expr(ctx)
            self.expect(">")
            return Collection(t.text, elem)
        if t.text == "Struct":
            sname = None
            if self.tok.kind == "name":
                sname = self.name().text
            self.expect("{")
            fields = []
            while True:
                ft = self.type_expr(ctx)
                fn = self.name("a field name")
                if fn.text in dict(fields):
                    raise DuplicateDeclaration(f"struct field {fn.text!r} declared twice", fn.line, fn.col)
                fields.append((fn.text, ft))
                if self.accept("}"):
                    break
                if not self.accept(",") and not self.accept(";"):
                    self.fail("expected ',' or '}'")
                if self.accept("}"):
                    break
            return StructType(tuple(fields), sname)
        if t.text in SCALAR_TYPES:
            return Scalar(t.text)
        self.type_refs.append((t.text, t, ctx))
        return RefType(t.text)

    # -- predicates ---------------------------------------------------------

    def pred(self) -> Pred:
        if self.at("true") and not self._is_path_start(1):
            self.i += 1
            return Pred.true()
        if self.at("false") and not self._is_path_start(1):
            self.i += 1
            return Pred.false()
        disj = [self.conj()]
        while self.accept("or"):
            disj.append(self.conj())
        return Pred(tuple(disj))

    def _is_path_start(self, k: int) -> bool:
        return self.peek(k).text in ("=", "!=", "<", "<=", ">", ">=", "in", ".")

    def conj(self) -> tuple[Atom, ...]:
        atoms = [self.atom()]
        while self.accept("and"):
            atoms.append(self.atom())
        return tuple(atoms)

    def atom(self) -> Atom:
        left = self.operand()
        op = self.tok.text
        if op not in ("=", "!=", "<", "<=", ">", ">=", "in"):
            self.fail("expected a comparison operator")
        self.i += 1
        right = self.operand()
        return Atom(left, op, right)

    def operand(self):
        t = self.tok
        if t.kind == "string":
            self.i += 1
            return Lit(_unquote(t.text))
        if t.kind == "number":
            self.i += 1
            return Lit(float(t.text) if any(c in t.text for c in ".eE") else int(t.text))
        if t.kind == "name":
            if t.text in ("true", "false", "null") and not self.peek().text == ".":
                self.i += 1
                return Lit({"true": True, "false": False, "null": None}[t.text])
            return Path(tuple(self.dotted().split(".")))
        self.fail("expected a path or a literal")

    # -- mapping expressions ------------------------------------------------

    def paths(self) -> tuple[Path, ...]:
        self.expect("[")
        out = []
        if not self.accept("]"):
            while True:
                out.append(Path(tuple(self.dotted().split("."))))
                if self.accept("]"):
                    break
                self.expect(",")
        return tuple(out)

    def bracket_pred(self) -> Pred:
        self.expect("[")
        p = self.pred()
        self.expect("]")
        return p

    def arg(self) -> Arg:
        var = None
        if self.tok.kind == "name" and self.peek().kind == "name":
            var = self.name().text
        return Arg(self.expr(), var)

    def args(self, n: int | None) -> tuple[Arg, ...]:
        self.expect("(")
        out = [self.arg()]
        while self.accept(","):
            out.append(self.arg())
        self.expect(")")
        if n is not None and len(out) != n:
            self.fail(f"expected {n} operand(s), got {len(out)}", self.toks[self.i - 1])
        return tuple(out)

    def expr(self):
        t = self.name("a mapping expression")
        op = t.text
        if op not in OPERATORS:
            self.type_refs.append((op, t, "mapping"))
            return ClassRef(op)
        if op in ("project", "mask"):
            ps = self.paths()
            (a,) = self.args(1)
            return (Project if op == "project" else Mask)(ps, a)
        if op == "unnest":
            ps = self.paths()
            (a,) = self.args(1)
            return Unnest(ps, a)
        if op == "augment":
            self.expect("[")
            bs = []
            while True:
                bs.append(self.binding())
                if self.accept("]"):
                    break
                self.expect(",")
            (a,) = self.args(1)
            return Augment(tuple(bs), a)
        if op == "select":
            p = self.bracket_pred()
            (a,) = self.args(1)
            return Select(p, a)
        if op == "join":
            p = self.bracket_pred()
            a, b = self.args(2)
            return Join(p, a, b)
        if op == "nest":
            ps = self.paths()
            self.expect("::")
            attr = self.name("a nest attribute name").text
            (a,) = self.args(1)
            return Nest(ps, attr, a)
        if op in ("union", "intersect", "diff"):
            a, b = self.args(2)
            return {"union": Union, "intersect": Intersect, "diff": Diff}[op](a, b)
        if op == "generalize":
            ps = self.paths()
            return Generalize(ps, self.args(None))
        p = self.bracket_pred()
        return Specialize(p, self.args(None))

    def binding(self) -> AugmentBinding:
        n = self.name("an attribute name").text
        self.expect(":")
        if self.tok.kind == "name" and self.tok.text in AGGREGATES and self.peek().text == "(":
            fn = self.name().text
            self.expect("(")
            p = Path(tuple(self.dotted().split(".")))
            self.expect(")")
            return AugmentBinding(n, AggCall(fn, p))
        if self.tok.kind == "name" and self.peek().text in ("(", "::"):
            m = self.dotted(qualified=True)
            self.expect("(")
            self.expect(")")
            return AugmentBinding(n, MethodCall(m))
        return AugmentBinding(n, SpecificType(self.type_expr("mapping")))

    # -- environments -------------------------------------------------------

    def refresh_clause(self) -> tuple[int, TemporalUnit]:
        self.expect("refresh")
        self.expect("every")
        nt = self.tok
        if nt.kind != "number" or not nt.text.isdigit() or int(nt.text) < 1:
            self.fail("expected a positive period count")
        self.i += 1
        u = self.unit()
        self.expect(";")
        return int(nt.text), u

    def unit(self) -> TemporalUnit:
        t = self.name("a temporal unit")
        try:
            return TemporalUnit(t.text)
        except ValueError:
            self.fail("expected a temporal unit", t)

    def environment(self):
        self.expect("environment")
        nt = self.name("an environment name")
        env = Environment(nt.text)
        refs: list[tuple[str, Token]] = []
        self.expect("{")
        while not self.accept("}"):
            if self.accept("classes"):
                self.expect("{")
                names = []
                if not self.accept("}"):
                    while True:
                        t = self.name("a class name")
                        names.append(t.text)
                        refs.append((t.text, t))
                        if self.accept("}"):
                            break
                        self.expect(",")
                env.classes = tuple(names)
                self.expect(";")
            elif self.at("refresh"):
                env.refresh_period = self.refresh_clause()
            elif self.accept("archive"):
                if self.accept("when"):
                    env.archive_predicate = self.archive_predicate()
                elif self.accept("mode"):
                    mode = self.name("'classical' or 'temporal'")
                    if mode.text == "classical":
                        env.archive_mode, env.archive_unit = "classical", None
                    elif mode.text == "temporal":
                        env.archive_mode, env.archive_unit = "temporal", self.unit()
                    else:
                        self.fail("expected 'classical' or 'temporal'", mode)
                else:
                    self.fail("expected 'when' or 'mode'")
                self.expect(";")
            else:
                self.fail("expected 'classes', 'refresh' or 'archive'")
        return env, nt, refs

    def archive_predicate(self) -> ArchivePredicate:
        clauses = []
        while True:
            if self.accept("not"):
                self.expect("within")
                kind = "not within"
            elif self.accept("within"):
                kind = "within"
            elif self.accept("before"):
                kind = "before"
            else:
                self.fail("expected 'within', 'not within' or 'before'")
            t = self.tok
            if t.kind != "instant":
                self.fail("expected an instant such as annee:2000")
            self.i += 1
            try:
                at = parse_instant(t.text)
            except (TemporalError, ValueError) as exc:
                raise DslSyntaxError(str(exc), t.line, t.col) from None
            clauses.append(ArchiveClause(kind, at))
            if not self.accept("and"):
                return ArchivePredicate(tuple(clauses))

    # -- assembly and name resolution ----------------------------------------

    def build(self, source_name, src_ifaces, wh_name, wh_ifaces, envs, default_refresh) -> Document:
        src = SourceSchema(source_name)
        seen: dict[str, tuple[int, int]] = {}
        for it in src_ifaces + wh_ifaces:
            if it.name in seen:
                raise DuplicateDeclaration(f"interface {it.name!r} declared twice", *it.pos)
            seen[it.name] = it.pos
        for it in src_ifaces:
            self.positions[f"source {it.name}"] = it.pos
            c = SourceClass(it.name, tuple(s for s, _ in it.supers))
            for kind, obj, tok in it.members:
                prior = c.methods.get(obj.name)
                if kind == "usage" and prior is not None and not prior.has_usage:
                    _attach_usage(prior, obj)
                    continue
                if obj.name in c.properties or prior is not None:
                    raise DuplicateDeclaration(f"{it.name}.{obj.name} declared twice", tok.line, tok.col)
                if kind == "prop":
                    c.properties[obj.name] = obj
                else:
                    c.methods[obj.name] = obj
            src.classes[it.name] = c
        wh = None
        if wh_name is not None:
            wh = WarehouseSchema(wh_name, src, default_refresh=default_refresh)
            for it in wh_ifaces:
                self.positions[f"class {it.name}"] = it.pos
                wc = WarehouseClass(it.name, it.mapping, declared_supers=tuple(s for s, _ in it.supers))
                for kind, obj, tok in it.members:
                    if obj.name in wc.declared or obj.name in [m.name for m in wc.declared_methods]:
                        raise DuplicateDeclaration(f"{it.name}.{obj.name} declared twice", tok.line, tok.col)
                    if kind == "prop":
                        wc.declared[obj.name] = obj.type
                        wc.declared_props[obj.name] = obj
                    else:
                        wc.declared_methods.append(obj)
                wc.tempo_filter = it.tempo or ()
                wc.archive_filter = dict(it.archi or {})
                wh.classes[it.name] = wc
            for env, tok, _ in envs:
                if env.name in wh.environments:
                    raise DuplicateDeclaration(f"environment {env.name!r} declared twice", tok.line, tok.col)
                self.positions[f"environment {env.name}"] = (tok.line, tok.col)
                wh.environments[env.name] = env
        # resolution
        src_names = set(src.classes)
        wh_names = set(wh.classes) if wh else set()
        for it in src_ifaces:
            for s, tok in it.supers:
                if s not in src_names:
                    raise UnresolvedName(f"unknown superclass {s!r} of {it.name}", tok.line, tok.col)
        for it in wh_ifaces:
            for s, tok in it.supers:
                if s not in wh_names:
                    raise UnresolvedName(f"unknown superclass {s!r} of {it.name}", tok.line, tok.col)
        src_ctx = {it.name for it in src_ifaces}
        for target, tok, ctx in self.type_refs:
            known = src_names if ctx in src_ctx else (src_names | wh_names)
            if target not in known:
                what = "class" if ctx == "mapping" else "type"
                raise UnresolvedName(f"unknown {what} {target!r}", tok.line, tok.col)
        for env, _, refs in envs:
            for n, tok in refs:
                if n not in wh_names:
                    raise UnresolvedName(f"unknown class {n!r} in environment {env.name}", tok.line, tok.col)
        return Document(src, wh, self.positions)


def _attach_usage(sig: MethodSig, usage: MethodSig) -> None:
    """A ``method m() uses ...`` line completes an earlier bare signature."""
    sig.has_usage = usage.has_usage
    sig.uses_properties = usage.uses_properties
    sig.uses_methods = usage.uses_methods
    sig.uses_object_predicates = usage.uses_object_predicates


def _unquote(s: str) -> str:
    import json

    return json.loads(s)


def parse_schema(text: str) -> Document:
    """Parse schema text; raises a :class:`~wdw.errors.DslError` with line and column."""
    p = Parser(text)
    return p.document()


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input after expression")
    return e


def parse_pred(text: str) -> Pred:
    p = Parser(text)
    pr = p.pred()
    if p.tok.kind != "eof":
        p.fail("trailing input after predicate")
    return pr


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def format_type(t: Type) -> str:
    return str(t)


def format_pred(p: Pred) -> str:
    return str(p)


def _paths(ps) -> str:
    return "[" + ", ".join(str(p) for p in ps) + "]"


def _arg(a: Arg) -> str:
    return (a.var + " " if a.var else "") + format_expr(a.expr)


def _args(args) -> str:
    return "(" + ", ".join(_arg(a) for a in args) + ")"


def _binding(b: AugmentBinding) -> str:
    s = b.source
    if isinstance(s, AggCall):
        return f"{b.name}:{s.fn}({s.path})"
    if isinstance(s, MethodCall):
        return f"{b.name}:{s.method}()"
    return f"{b.name}:{format_type(s.type)}"


def format_expr(e) -> str:
    if isinstance(e, ClassRef):
        return e.name
    if isinstance(e, Project):
        return f"project {_paths(e.paths)} {_args([e.arg])}"
    if isinstance(e, Mask):
        return f"mask {_paths(e.paths)} {_args([e.arg])}"
    if isinstance(e, Unnest):
        return f"unnest {_paths(e.paths)} {_args([e.arg])}"
    if isinstance(e, Augment):
        return f"augment [{', '.join(_binding(b) for b in e.bindings)}] {_args([e.arg])}"
    if isinstance(e, Select):
        return f"select [{format_pred(e.pred)}] {_args([e.arg])}"
    if isinstance(e, Join):
        return f"join [{format_pred(e.pred)}] {_args([e.left, e.right])}"
    if isinstance(e, Nest):
        return f"nest {_paths(e.group)}::{e.attr} {_args([e.arg])}"
    if isinstance(e, (Union, Intersect, Diff)):
        return f"{type(e).__name__.lower()} {_args([e.left, e.right])}"
    if isinstance(e, Generalize):
        return f"generalize {_paths(e.paths)} {_args(e.args)}"
    if isinstance(e, Specialize):
        return f"specialize [{format_pred(e.pred)}] {_args(e.args)}"
    raise TypeError(f"not a mapping expression: {e!r}")


def _method(m: MethodSig) -> str:
    head = f"{format_type(m.return_type)} " if m.return_type is not None else "method "
    s = f"{head}{m.name}({m.params})"
    if m.has_usage:
        parts = []
        if m.uses_properties:
            parts.append("properties {" + ", ".join(sorted(m.uses_properties)) + "}")
        if m.uses_methods:
            parts.append("methods {" + ", ".join(sorted(m.uses_methods)) + "}")
        if m.uses_object_predicates is not None:
            parts.append("objects where " + format_pred(m.uses_object_predicates))
        s += " uses " + (" ".join(parts) if parts else "nothing")
    return s + ";"


def _prop(p: Property) -> str:
    s = f"{p.kind} {format_type(p.type)} {p.name}"
    if p.inverse:
        s += f" inverse {p.inverse[0]}::{p.inverse[1]}"
    return s + ";"


def _header(name: str, supers) -> str:
    ext = f" (extend {', '.join(supers)})" if supers else ""
    return f"interface {name}{ext} {{"


def print_schema(doc: Document) -> str:
    ind = "    "
    out = [f"source {doc.source.name} {{"]
    for c in doc.source.classes.values():
        out.append(ind + _header(c.name, c.supers))
        out.extend(ind * 2 + _prop(p) for p in c.properties.values())
        out.extend(ind * 2 + _method(m) for m in c.methods.values())
        out.append(ind + "}")
    out.append("}")
    wh = doc.warehouse
    if wh is not None:
        out.append("")
        out.append(f"warehouse {wh.name} {{")
        if wh.default_refresh:
            out.append(ind + f"refresh every {wh.default_refresh[0]} {wh.default_refresh[1].value};")
        for wc in wh.classes.values():
            out.append(ind + _header(wc.name, wc.declared_supers))
            out.extend(
                ind * 2 + _prop(wc.declared_props.get(n) or Property(n, t))
                for n, t in wc.declared.items()
            )
            out.extend(ind * 2 + _method(m) for m in wc.declared_methods)
            out.append(ind + "}")
            if wc.mapping is not None:
                out.append(ind + "mapping " + format_expr(wc.mapping))
            filters = []
            if wc.tempo_filter or wc.archive_filter:
                filters.append("temporal filter {" + ", ".join(wc.tempo_filter) + "}")
            if wc.archive_filter:
                filters.append("archive filter {" + ", ".join(f"{fn}({p})" for p, fn in wc.archive_filter.items()) + "}")
            if filters:
                out.append(ind + "with " + ", ".join(filters))
            out[-1] += ";"
        for env in wh.environments.values():
            out.append(ind + f"environment {env.name} {{")
            out.append(ind * 2 + "classes {" + ", ".join(env.classes) + "};")
            if env.refresh_period:
                out.append(ind * 2 + f"refresh every {env.refresh_period[0]} {env.refresh_period[1].value};")
            if env.archive_predicate is not None:
                out.append(ind * 2 + f"archive when {env.archive_predicate};")
            mode = "temporal " + env.archive_unit.value if env.archive_mode == "temporal" else "classical"
            out.append(ind * 2 + f"archive mode {mode};")
            out.append(ind + "}")
        out.append("}")
    return "\n".join(out) + "\n"
