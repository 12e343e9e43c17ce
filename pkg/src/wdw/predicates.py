"""Predicates in disjunctive normal form over dotted property paths.

An atom compares two operands (paths or literals) with one of
``= != < <= > >= in``. A :class:`Pred` is a disjunction of conjunctions;
``Pred.true()`` is one empty conjunction and ``Pred.false()`` has none.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .errors import TypeMismatch, UnknownProperty
from .values import Ref, ValueSet, canon, format_value, is_collection, is_numeric

OPS = ("=", "!=", "<", "<=", ">", ">=", "in")
NEGATE = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
FLIP = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True)
class Path:
    parts: tuple[str, ...]

    def __str__(self) -> str:
        return ".".join(self.parts)


@dataclass(frozen=True)
class Lit:
    value: Any

    def __str__(self) -> str:
        return format_value(self.value)


Operand = "Path | Lit"


@dataclass(frozen=True)
class Atom:
    left: Path | Lit
    op: str
    right: Path | Lit

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Pred:
    disjuncts: tuple[tuple[Atom, ...], ...]

    @classmethod
    def true(cls) -> Pred:
        return cls(((),))

    @classmethod
    def false(cls) -> Pred:
        return cls(())

    @classmethod
    def atom(cls, left, op, right) -> Pred:
        return cls(((Atom(left, op, right),),))

    @property
    def is_true(self) -> bool:
        return any(len(c) == 0 for c in self.disjuncts)

    def atoms(self):
        for conj in self.disjuncts:
            yield from conj

    def __str__(self) -> str:
        if not self.disjuncts:
            return "false"
        return " or ".join(conj_str(c) for c in self.disjuncts)


def conj_str(conj: tuple[Atom, ...]) -> str:
    return " and ".join(str(a) for a in conj) if conj else "true"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class Binding:
    """An object visible to a predicate: its field values and its identity."""

    __slots__ = ("value", "identity")

    def __init__(self, value: Mapping[str, Any], identity: Ref | None = None):
        self.value = value
        self.identity = identity


def navigate(value: Any, steps: tuple[str, ...], where: str = "") -> Any:
    """Follow struct fields; a collection mid-path maps over its members."""
    cur = value
    for i, s in enumerate(steps):
        if cur is None:
            return None
        if isinstance(cur, dict):
            if s not in cur:
                raise UnknownProperty(f"no property {'.'.join(steps[: i + 1])!r}{where}")
            cur = cur[s]
        elif is_collection(cur):
            rest = steps[i:]
            out = [navigate(m, rest, where) for m in cur]
            return ValueSet(out) if isinstance(cur, ValueSet) else out
        else:
            raise UnknownProperty(f"cannot navigate {s!r} into a scalar{where}")
    return cur


def resolve(operand: Path | Lit, env: Mapping[str, Binding], default: str | tuple[str, ...] | None) -> Any:
    """Value of an operand; unprefixed paths are looked up in the ``default`` bindings."""
    if isinstance(operand, Lit):
        return operand.value
    parts = operand.parts
    if parts[0] in env:
        b = env[parts[0]]
        if len(parts) == 1:
            if b.identity is None:
                raise TypeMismatch(f"{parts[0]!r} has no object identity")
            return b.identity
        return navigate(b.value, parts[1:])
    names = (default,) if isinstance(default, str) else (default or ())
    for name in names:
        b = env.get(name)
        if b is not None and parts[0] in b.value:
            return navigate(b.value, parts)
    raise UnknownProperty(f"unbound path {operand}")


def _comparable(a, b) -> bool:
    if is_numeric(a) and is_numeric(b):
        return True
    return type(a) is type(b) and not isinstance(a, (dict, list, ValueSet))


def compare(a: Any, op: str, b: Any) -> bool:
    """Two-valued comparison: anything involving ``None`` is false."""
    if a is None or b is None:
        return False
    if op == "in":
        if not is_collection(b):
            raise TypeMismatch(f"right side of 'in' is not a collection: {b!r}")
        return a in b if isinstance(b, ValueSet) else any(canon(a) == canon(x) for x in b)
    if op in ("=", "!="):
        if isinstance(a, (dict, list, ValueSet)) or isinstance(b, (dict, list, ValueSet)):
            eq = canon(a) == canon(b)
        elif not _comparable(a, b):
            raise TypeMismatch(f"cannot compare {a!r} {op} {b!r}")
        else:
            eq = a == b
        return eq if op == "=" else not eq
    if not _comparable(a, b) or isinstance(a, (bool, Ref)):
        raise TypeMismatch(f"cannot order {a!r} {op} {b!r}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def evaluate(pred: Pred, env: Mapping[str, Binding], default: str | tuple[str, ...] | None = None) -> bool:
    for conj in pred.disjuncts:
        if all(compare(resolve(a.left, env, default), a.op, resolve(a.right, env, default)) for a in conj):
            return True
    return False


def evaluate_on(pred: Pred, value: Mapping[str, Any], var: str | None = None, identity: Ref | None = None) -> bool:
    """Evaluate against a single object, optionally bound to ``var``."""
    name = var or "_"
    return evaluate(pred, {name: Binding(value, identity)}, default=name)


def strip_var(path: Path, var: str | None) -> Path:
    if var and len(path.parts) > 1 and path.parts[0] == var:
        return Path(path.parts[1:])
    return path


def map_paths(pred: Pred, fn: Callable[[Path], Path]) -> Pred:
    def m(o):
        return fn(o) if isinstance(o, Path) else o

    return Pred(tuple(tuple(Atom(m(a.left), a.op, m(a.right)) for a in c) for c in pred.disjuncts))


# ---------------------------------------------------------------------------
# Syntactic implication between conjunctions of simple atoms
# ---------------------------------------------------------------------------


@dataclass
class _Range:
    """Set of admissible values for one path: bounds, pinned value, exclusions."""

    lo: Any = None
    lo_incl: bool = True
    hi: Any = None
    hi_incl: bool = True
    eq: Any = None
    has_eq: bool = False
    neq: tuple = ()
    empty: bool = False

    def add(self, op: str, v: Any) -> None:
        try:
            if op == "=":
                if self.has_eq and canon(self.eq) != canon(v):
                    self.empty = True
                self.eq, self.has_eq = v, True
            elif op == "!=":
                self.neq += (v,)
            elif op in (">", ">="):
                incl = op == ">="
                if self.lo is None or v > self.lo or (v == self.lo and not incl):
                    self.lo, self.lo_incl = v, incl
            elif op in ("<", "<="):
                incl = op == "<="
                if self.hi is None or v < self.hi or (v == self.hi and not incl):
                    self.hi, self.hi_incl = v, incl
        except TypeError:
            raise TypeMismatch(f"incomparable literal {v!r}") from None
        self._check()

    def _inside(self, v) -> bool:
        try:
            if self.lo is not None and (v < self.lo or (v == self.lo and not self.lo_incl)):
                return False
            if self.hi is not None and (v > self.hi or (v == self.hi and not self.hi_incl)):
                return False
        except TypeError:
            return False
        return True

    def _check(self) -> None:
        if self.has_eq:
            if not self._inside(self.eq) or any(canon(self.eq) == canon(x) for x in self.neq):
                self.empty = True
        elif self.lo is not None and self.hi is not None:
            try:
                if self.lo > self.hi or (self.lo == self.hi and not (self.lo_incl and self.hi_incl)):
                    self.empty = True
            except TypeError:
                self.empty = True
            if not self.empty and self.lo == self.hi and any(canon(self.lo) == canon(x) for x in self.neq):
                self.empty = True

    def implies(self, op: str, v: Any) -> bool:
        """True iff every admissible value satisfies ``x op v``."""
        if self.empty:
            return True
        try:
            if self.has_eq:
                return compare(self.eq, op, v)
            pinned = self.lo is not None and self.lo == self.hi and self.lo_incl and self.hi_incl
            if pinned:
                return compare(self.lo, op, v)
            if op == "=":
                return False
            if op == "!=":
                return any(canon(x) == canon(v) for x in self.neq) or not self._inside(v)
            if op in ("<", "<="):
                if self.hi is None:
                    return False
                if op == "<":
                    return self.hi < v or (self.hi == v and not self.hi_incl)
                return self.hi <= v
            if self.lo is None:
                return False
            if op == ">":
                return self.lo > v or (self.lo == v and not self.lo_incl)
            return self.lo >= v
        except (TypeError, TypeMismatch):
            return False


def _simple(atom: Atom) -> tuple[str, str, Any] | None:
    """Normalize ``path op literal`` (either orientation); None if not simple."""
    if isinstance(atom.left, Path) and isinstance(atom.right, Lit) and atom.op != "in":
        return str(atom.left), atom.op, atom.right.value
    if isinstance(atom.left, Lit) and isinstance(atom.right, Path) and atom.op != "in":
        return str(atom.right), FLIP[atom.op], atom.left.value
    return None


def conj_implies(premise: tuple[Atom, ...], conclusion: Atom) -> bool:
    """Whether every object satisfying ``premise`` satisfies ``conclusion``.

    Reasoning is per path; anything outside ``path op literal`` is unknown,
    which answers False.
    """
    c = _simple(conclusion)
    if c is None:
        return any(a == conclusion for a in premise)
    path, op, v = c
    rng = _Range()
    for a in premise:
        s = _simple(a)
        if s is None:
            continue
        p, o, lit = s
        if p == path:
            rng.add(o, lit)
    return rng.implies(op, v)


def conj_implies_pred(premise: tuple[Atom, ...], target: Pred) -> bool:
    """Premise implies some disjunct of ``target`` atom by atom (conservative)."""
    return any(all(conj_implies(premise, a) for a in conj) for conj in target.disjuncts)
