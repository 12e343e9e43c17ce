import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdw.dsl import parse_pred
from wdw.errors import TypeMismatch
from wdw.predicates import Atom, Binding, Lit, Path, Pred, conj_implies, conj_implies_pred, evaluate, evaluate_on
from wdw.values import Collection, Ref, RefType, Scalar, StructType, ValueSet, canon, conforms, from_json, to_json

scalars = st.one_of(st.none(), st.booleans(), st.integers(-5, 5), st.text(max_size=3))
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=3),
        st.dictionaries(st.text("abc", min_size=1, max_size=2), inner, max_size=3),
        st.lists(inner, max_size=3).map(ValueSet),
        st.text("xyz", min_size=1, max_size=3).map(Ref),
    ),
    max_leaves=8,
)


@given(values)
def test_json_round_trip(v):
    assert canon(from_json(to_json(v))) == canon(v)


@given(st.lists(values, max_size=6))
def test_value_set_collapses_structural_duplicates(items):
    s = ValueSet(items + items)
    assert len(s) == len({canon(x) for x in items})
    assert all(x in s for x in items)


def test_value_set_equality_ignores_order():
    assert ValueSet([{"a": 1}, {"a": 2}]) == ValueSet([{"a": 2}, {"a": 1}, {"a": 1}])


def test_conforms():
    t = StructType((("n", Scalar("Short")), ("refs", Collection("Set", RefType("C")))))
    assert conforms({"n": 3, "refs": ValueSet([Ref("c1")])}, t)
    assert not conforms({"n": "x", "refs": ValueSet()}, t)


# -- evaluation ------------------------------------------------------------------


def test_comparison_with_null_is_false():
    p = parse_pred("o.x > 1")
    assert not evaluate_on(p, {"x": None}, "o")
    assert not evaluate_on(parse_pred("o.x = 1"), {"x": None}, "o")


def test_incomparable_types_raise():
    with pytest.raises(TypeMismatch):
        evaluate_on(parse_pred("o.x < 1"), {"x": "abc"}, "o")


def test_membership_and_reference_equality():
    env = {
        "v": Binding({"prescription": ValueSet([Ref("m1"), Ref("m2")])}, Ref("v1")),
        "m": Binding({"code": "A"}, Ref("m2")),
    }
    assert evaluate(parse_pred("m in v.prescription"), env)
    env["m"] = Binding({"code": "A"}, Ref("m9"))
    assert not evaluate(parse_pred("m in v.prescription"), env)


def test_paths_map_over_collections():
    value = {"enfants": [{"age": 3}, {"age": 9}]}
    assert evaluate_on(parse_pred("9 in o.enfants.age"), value, "o")


def test_true_and_false():
    assert evaluate_on(Pred.true(), {}, "o")
    assert not evaluate_on(Pred.false(), {}, "o")


def test_dnf_parsing_and_evaluation():
    p = parse_pred('o.a = 1 and o.b = "x" or o.a > 5')
    assert len(p.disjuncts) == 2
    assert evaluate_on(p, {"a": 1, "b": "x"}, "o")
    assert evaluate_on(p, {"a": 7, "b": "y"}, "o")
    assert not evaluate_on(p, {"a": 1, "b": "y"}, "o")


# -- implication -------------------------------------------------------------------


def _atom(op, v):
    return Atom(Path(("x",)), op, Lit(v))


def test_implication_examples():
    region = Atom(Path(("adresse", "region")), "=", Lit("Midi-Pyrenees"))
    assert conj_implies((region,), region)
    other = Atom(Path(("adresse", "region")), "=", Lit("Aquitaine"))
    assert not conj_implies((other,), region)
    assert conj_implies((_atom(">", 5),), _atom(">=", 3))
    assert not conj_implies((_atom(">", 5),), _atom(">", 6))
    assert conj_implies((_atom(">=", 2), _atom("<=", 2)), _atom("=", 2))
    assert conj_implies((_atom("=", 4),), _atom("!=", 3))
    assert conj_implies_pred((), Pred.true())
    assert not conj_implies_pred((), Pred.atom(Path(("x",)), "=", Lit(1)))


OPS = ["=", "!=", "<", "<=", ">", ">="]
GRID = [k / 2 for k in range(-4, 24)]


def _holds(op, a, b):
    return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


@settings(max_examples=300)
@given(
    st.lists(st.tuples(st.sampled_from(OPS), st.integers(0, 9)), max_size=4),
    st.sampled_from(OPS),
    st.integers(0, 9),
)
def test_implication_is_sound_on_a_dense_grid(premise, op, v):
    atoms = tuple(_atom(o, c) for o, c in premise)
    if conj_implies(atoms, _atom(op, v)):
        for x in GRID:
            if all(_holds(o, x, c) for o, c in premise):
                assert _holds(op, x, v)
