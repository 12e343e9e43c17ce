import datetime as dt
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdw.temporal import (
    NOW,
    EmptyInterval,
    Instant,
    Interval,
    MixedUnits,
    NotCoarser,
    TemporalDomain,
    TemporalError,
    TemporalUnit,
    coarsen_instant,
    domain_difference,
    domain_intersection,
    domain_union,
    finer_than,
    format_domain,
    format_instant,
    grain_span,
    group_by_grain,
    normalize_domain,
    normalize_instants,
    parse_domain,
    parse_instant,
)

from oracles import CALENDAR_UNITS, calendar_finer, grains, month_index, runs

U = TemporalUnit
ALL_UNITS = list(TemporalUnit)


def dom(*pairs, unit=U.JOUR):
    return TemporalDomain.of(unit, *pairs)


def pairs_of(d):
    return [(iv.td, iv.tf) for iv in d]


# -- unit order ------------------------------------------------------------


def test_finer_than_examples():
    assert finer_than(U.MOIS, U.ANNEE)
    assert not finer_than(U.ANNEE, U.ANNEE)
    assert not finer_than(U.SEMAINE, U.MOIS)
    assert not finer_than(U.MOIS, U.SEMAINE)


@pytest.mark.parametrize("u1,u2", list(itertools.product(CALENDAR_UNITS, CALENDAR_UNITS)))
def test_finer_than_matches_calendar_walk(u1, u2):
    assert finer_than(U(u1), U(u2)) == calendar_finer(u1, u2)


def test_weekday_unit_is_isolated():
    for u in ALL_UNITS:
        assert not finer_than(U.JOUR_SEMAINE, u)
        assert not finer_than(u, U.JOUR_SEMAINE)


def test_finer_than_is_a_strict_partial_order():
    for a in ALL_UNITS:
        assert not finer_than(a, a)
        for b in ALL_UNITS:
            assert not (finer_than(a, b) and finer_than(b, a))
            for c in ALL_UNITS:
                if finer_than(a, b) and finer_than(b, c):
                    assert finer_than(a, c)


# -- instants ----------------------------------------------------------------


def test_instants_of_different_units_do_not_compare():
    with pytest.raises(MixedUnits):
        _ = Instant(U.MOIS, 1) < Instant(U.ANNEE, 1)


def test_now_exceeds_every_tick():
    assert NOW > 10**12 and not NOW < 0 and NOW == NOW


@pytest.mark.parametrize(
    "text,unit,ticks",
    [
        ("annee:2000", U.ANNEE, 30),
        ("mois:2000-03", U.MOIS, month_index(2000, 3)),
        ("mois:1970-01", U.MOIS, 0),
        ("trimestre:1998-Q1", U.TRIMESTRE, 28 * 4),
        ("semestre:1971-S2", U.SEMESTRE, 3),
        ("jour:2000-03-14", U.JOUR, (dt.date(2000, 3, 14) - dt.date(1970, 1, 1)).days),
        ("heure:1970-01-02T05", U.HEURE, 29),
        ("jour_semaine:mardi", U.JOUR_SEMAINE, 1),
    ],
)
def test_parse_instant(text, unit, ticks):
    i = parse_instant(text)
    assert (i.unit, i.ticks) == (unit, ticks)


@pytest.mark.parametrize("bad", ["mois:2000-13", "annee", "lune:2000", "jour:2000-02-30", "jour_semaine:8"])
def test_parse_instant_rejects(bad):
    with pytest.raises(TemporalError):
        parse_instant(bad)


@given(st.sampled_from([u for u in ALL_UNITS if u is not U.JOUR_SEMAINE]), st.integers(-2000, 20000))
def test_instant_text_round_trip(unit, ticks):
    i = Instant(unit, ticks)
    if unit in (U.JOUR, U.SEMAINE, U.HEURE, U.MINUTE, U.SECONDE) and i.start().year < 1:
        return
    assert parse_instant(format_instant(i)) == i


@pytest.mark.parametrize(
    "fine,coarse,expected",
    [
        ("mois:2000-03", U.ANNEE, "annee:2000"),
        ("jour:1999-12-31", U.ANNEE, "annee:1999"),
        ("mois:1998-01", U.TRIMESTRE, "trimestre:1998-Q1"),
        ("mois:1998-09", U.TRIMESTRE, "trimestre:1998-Q3"),
        ("jour:2000-01-02", U.SEMAINE, "semaine:1999-W52"),
    ],
)
def test_coarsen_instant(fine, coarse, expected):
    assert coarsen_instant(parse_instant(fine), coarse) == parse_instant(expected)


@given(st.integers(0, 1200), st.sampled_from([U.TRIMESTRE, U.SEMESTRE, U.ANNEE]))
def test_coarsen_month_against_calendar(m, coarse):
    year, month = 1970 + m // 12, m % 12 + 1
    got = coarsen_instant(Instant(U.MOIS, m), coarse)
    per = {U.TRIMESTRE: 3, U.SEMESTRE: 6, U.ANNEE: 12}[coarse]
    assert got.ticks == ((year - 1970) * 12 + month - 1) // per


def test_coarsen_rejects_non_coarser_units():
    with pytest.raises(NotCoarser):
        coarsen_instant(parse_instant("annee:2000"), U.MOIS)
    with pytest.raises(NotCoarser):
        coarsen_instant(parse_instant("mois:2000-01"), U.SEMAINE)


def test_grain_span_of_a_year_in_months():
    lo, hi = grain_span(parse_instant("annee:2000"), U.MOIS)
    assert (lo, hi) == (month_index(2000, 1), month_index(2000, 12))


# -- intervals and domains -----------------------------------------------------


def test_interval_rejects_reversed_bounds():
    with pytest.raises(EmptyInterval):
        Interval(5, 3)


def test_single_grain_interval_is_allowed():
    assert pairs_of(dom((4, 4))) == [(4, 4)]


@pytest.mark.parametrize(
    "given_pairs,expected",
    [
        ([(1, 3), (3, 5)], [(1, 5)]),
        ([(1, 2), (3, 5)], [(1, 5)]),
        ([(5, 7), (1, 2)], [(1, 2), (5, 7)]),
    ],
)
def test_normalize_examples(given_pairs, expected):
    d = normalize_domain([Interval(a, b) for a, b in given_pairs], U.JOUR)
    assert pairs_of(d) == expected


def test_normalize_keeps_a_single_open_end():
    d = normalize_domain([Interval(8, NOW), Interval(1, 3), Interval(2, 9)], U.MOIS)
    assert pairs_of(d) == [(1, NOW)]
    assert d.is_open


def test_normalize_rejects_mixed_units():
    with pytest.raises(MixedUnits):
        normalize_instants([(Instant(U.MOIS, 1), Instant(U.ANNEE, 3))])


def test_set_operation_examples():
    assert pairs_of(domain_union(dom((1, 3)), dom((2, 6)))) == [(1, 6)]
    assert not domain_intersection(dom((1, 3)), dom((5, 9)))
    assert pairs_of(domain_difference(dom((1, 9)), dom((4, 5)))) == [(1, 3), (6, 9)]
    with pytest.raises(MixedUnits):
        domain_union(dom((1, 2)), dom((1, 2), unit=U.MOIS))


def test_close_cuts_the_open_end():
    d = dom((1, 3), (6, NOW))
    assert pairs_of(d.close(9)) == [(1, 3), (6, 9)]
    assert pairs_of(d.close(4)) == [(1, 3)]


def test_domain_text_round_trip():
    d = parse_domain("<[mois:1998-01,mois:1998-06];[mois:2000-01,NOW]>")
    assert format_domain(d) == "<[mois:1998-01,mois:1998-06];[mois:2000-01,NOW]>"
    assert parse_domain("<>") == TemporalDomain.empty()


intervals = st.lists(
    st.tuples(st.integers(0, 100), st.integers(0, 20)).map(lambda p: (p[0], min(100, p[0] + p[1]))),
    max_size=20,
)


def _norm(ps):
    return normalize_domain([Interval(a, b) for a, b in ps], U.JOUR)


def _covered(d):
    return d.grains()


def _well_formed(d):
    ps = pairs_of(d)
    assert all(a <= b for a, b in ps)
    assert all(ps[k][1] + 1 < ps[k + 1][0] for k in range(len(ps) - 1))


@settings(max_examples=500)
@given(intervals)
def test_normalize_is_idempotent_and_preserves_grains(ps):
    d = _norm(ps)
    _well_formed(d)
    assert _covered(d) == grains(ps)
    assert pairs_of(d) == runs(grains(ps))
    assert normalize_domain(d.intervals, U.JOUR) == d


@settings(max_examples=500)
@given(intervals, intervals)
def test_set_operations_match_grain_oracles(a, b):
    da, db = _norm(a), _norm(b)
    ga, gb = grains(a), grains(b)
    for op, expected in (
        (domain_union, ga | gb),
        (domain_intersection, ga & gb),
        (domain_difference, ga - gb),
    ):
        got = op(da, db)
        _well_formed(got)
        assert _covered(got) == expected


@settings(max_examples=200)
@given(intervals, st.integers(0, 101))
def test_membership_matches_grains(ps, t):
    assert (t in _norm(ps)) == (t in grains(ps))


# -- grouping ------------------------------------------------------------------


def _monthly(y0, y1):
    return [
        (TemporalDomain.of(U.MOIS, (m, m)), m)
        for m in range(month_index(y0, 1), month_index(y1, 12) + 1)
    ]


def test_group_36_months_by_year():
    groups = group_by_grain(_monthly(1998, 2000), U.ANNEE)
    assert [format_instant(k) for k in groups] == ["annee:1998", "annee:1999", "annee:2000"]
    assert [len(v) for v in groups.values()] == [12, 12, 12]


def test_group_requires_coarser_unit():
    with pytest.raises(NotCoarser):
        group_by_grain([(TemporalDomain.of(U.MOIS, (1, 1)), "x")], U.MOIS)


def test_straddling_state_lands_in_both_years():
    d = TemporalDomain.of(U.MOIS, (month_index(1998, 11), month_index(1999, 2)))
    groups = group_by_grain([(d, "s")], U.ANNEE)
    assert {format_instant(k) for k in groups} == {"annee:1998", "annee:1999"}


@settings(max_examples=200)
@given(intervals)
def test_grouping_matches_grain_enumeration(ps):
    d = _norm(ps)
    if not d:
        return
    groups = group_by_grain([(d, 0)], U.MOIS)
    expected = {coarsen_instant(Instant(U.JOUR, g), U.MOIS) for g in grains(ps)}
    assert set(groups) == expected
