import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdw.errors import DanglingRef, InverseMismatch, IoError, SchemaMismatch, UnknownClass, UnknownProperty
from wdw.io import (
    dumps,
    load_store,
    load_tickscript,
    read_schema,
    save_store,
    schema_hash,
    snapshot_from_json,
    snapshot_to_json,
    store_from_json,
    store_to_json,
)
from wdw.model import check_store_invariants
from wdw.refresh import initial_build, refresh
from wdw.sample import annex_snapshot
from wdw.temporal import parse_instant
from wdw.values import Ref, ValueSet

from conftest import ANNEX


def test_snapshot_decoding_follows_declared_types(annex):
    snap = snapshot_from_json(annex_snapshot(2), annex.source)
    pr = snap.objects["PRATICIEN"][0].value
    assert isinstance(pr["diplomes"], ValueSet)
    assert all(isinstance(r, Ref) for r in pr["consultations"])
    assert isinstance(pr["adresse"], dict)
    assert snap.at == parse_instant("mois:2000-01")


def test_snapshot_round_trip(annex):
    doc = annex_snapshot(4)
    snap = snapshot_from_json(doc, annex.source)
    again = snapshot_from_json(snapshot_to_json(snap), annex.source)
    assert [o.value for objs in again.objects.values() for o in objs] == [o.value for objs in snap.objects.values() for o in objs]


def test_dangling_reference(annex):
    doc = annex_snapshot(0)
    doc["classes"]["VISITE"][0]["patient"] = "nobody"
    with pytest.raises(DanglingRef):
        snapshot_from_json(doc, annex.source)


def test_one_sided_relationship(annex):
    doc = annex_snapshot(0)
    v = doc["classes"]["VISITE"][0]
    patient = next(p for p in doc["classes"]["PATIENT"] if p["oid"] == v["patient"])
    patient["visites"].remove(v["oid"])
    with pytest.raises(InverseMismatch):
        snapshot_from_json(doc, annex.source)
    snapshot_from_json(doc, annex.source, check_inverses=False)


def test_unknown_names(annex):
    doc = annex_snapshot(0)
    doc["classes"]["PRATICIEN"][0]["salaire"] = 1
    with pytest.raises(UnknownProperty):
        snapshot_from_json(doc, annex.source)
    with pytest.raises(UnknownClass):
        snapshot_from_json({"classes": {"ROBOT": []}}, annex.source)


def build(annex, seed=1):
    snap = snapshot_from_json(annex_snapshot(seed), annex.source)
    return initial_build(annex.schema, snap, parse_instant("mois:2000-01"), read_schema(ANNEX)[1])


def test_store_save_load_is_value_equal(annex, tmp_path):
    store = build(annex)
    refresh(store, snapshot_from_json(annex_snapshot(5), annex.source), parse_instant("mois:2000-02"))
    path = tmp_path / "store.json"
    save_store(store, path)
    back = load_store(path)
    assert store_to_json(back) == store_to_json(store)
    assert back.extents == store.extents
    assert check_store_invariants(back) == []
    save_store(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


@settings(max_examples=25)
@given(st.integers(0, 500), st.integers(0, 500))
def test_round_trip_after_random_refreshes(annex_shared, a, b):
    store = initial_build(annex_shared.schema, snapshot_from_json(annex_snapshot(a), annex_shared.source), parse_instant("mois:2000-01"))
    refresh(store, snapshot_from_json(annex_snapshot(b), annex_shared.source), parse_instant("mois:2000-02"))
    text = dumps(store_to_json(store))
    back = store_from_json(json.loads(text))
    assert dumps(store_to_json(back)) == text
    assert back.extents == store.extents


def test_schema_hash_guards_the_store(annex):
    doc = store_to_json(build(annex))
    tampered = copy.deepcopy(doc)
    tampered["schema"] = tampered["schema"].replace("refresh every 1 mois", "refresh every 2 mois", 1)
    with pytest.raises(SchemaMismatch):
        store_from_json(tampered)
    with pytest.raises(SchemaMismatch):
        store_from_json(doc, expected_hash="0" * 64)
    assert store_from_json(doc, expected_hash=schema_hash(doc["schema"])) is not None


def test_unreadable_files(tmp_path):
    with pytest.raises(IoError):
        load_store(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(IoError):
        load_store(bad)


def test_tickscript_paths_are_relative(annex, tmp_path):
    (tmp_path / "snaps").mkdir()
    for i in range(2):
        (tmp_path / "snaps" / f"s{i}.json").write_text(dumps(annex_snapshot(i)))
    script = [{"at": f"mois:2000-0{i + 2}", "snapshot_path": f"snaps/s{i}.json", "environment": "suivi_praticiens"} for i in range(2)]
    script[1]["archive"] = True
    (tmp_path / "ticks.json").write_text(json.dumps({"ticks": script}))
    ticks = load_tickscript(tmp_path / "ticks.json", annex.source)
    assert [str(t.at) for t in ticks] == ["mois:2000-02", "mois:2000-03"]
    assert [t.archive for t in ticks] == [False, True]
    (tmp_path / "broken.json").write_text(json.dumps([{"at": "mois:2000-02"}]))
    with pytest.raises(IoError):
        load_tickscript(tmp_path / "broken.json", annex.source)
