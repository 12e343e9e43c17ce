"""Reference-schema mappings evaluated on generated snapshots, against hand-rolled nested loops."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdw.algebra import evaluate_warehouse
from wdw.io import snapshot_from_json
from wdw.sample import annex_snapshot
from wdw.values import to_json

from oracles import jeune_praticien_rows, key, multiset, personne_rows, praticien_rows, prescription_rows

ORACLES = {
    "Praticien": praticien_rows,
    "Personne": personne_rows,
    "Jeune_Praticien": jeune_praticien_rows,
    "Prescription": prescription_rows,
}


def plain(v):
    """JSON value with refs as bare oids and sets as sorted lists."""
    if isinstance(v, dict):
        if set(v) == {"$ref"}:
            return v["$ref"]
        if set(v) == {"$set"}:
            return sorted((plain(x) for x in v["$set"]), key=key)
        return {k: plain(x) for k, x in v.items()}
    if isinstance(v, list):
        return [plain(x) for x in v]
    return v


def evaluate(annex, doc):
    return evaluate_warehouse(annex.schema, snapshot_from_json(doc, annex.source))


def test_structures_follow_the_declared_interfaces(annex):
    r = evaluate(annex, annex_snapshot(0))
    assert set(r["Personne"].structure) == {"nom", "prenom", "ville", "densite", "departement", "annee_n", "nb_enfants"}
    assert set(r["Praticien"].structure) == set(r["Personne"].structure) | {"categorie", "specialite", "consultations"}
    assert set(r["Jeune_Praticien"].structure) == set(r["Praticien"].structure)
    assert set(r["Prescription"].structure) == {"honoraire", "prescripteur", "tension", "poids", "taille", "medicament"}


@pytest.mark.parametrize("cls", sorted(ORACLES))
@pytest.mark.parametrize("seed", range(8))
def test_mapping_matches_oracle(annex, cls, seed):
    doc = annex_snapshot(seed)
    got = [plain(to_json(v)) for v in evaluate(annex, doc)[cls].values()]
    assert multiset(got) == multiset(ORACLES[cls](doc))


@settings(max_examples=40)
@given(
    st.integers(0, 10_000),
    st.integers(1, 4),
    st.integers(0, 6),
    st.integers(1, 4),
    st.integers(0, 8),
    st.integers(1, 5),
)
def test_mappings_on_random_small_snapshots(annex_shared, seed, nc, npr, npa, nv, nm):
    doc = annex_snapshot(seed, nc, npr, npa, nv, nm)
    results = evaluate(annex_shared, doc)
    for cls, oracle in ORACLES.items():
        got = [plain(to_json(v)) for v in results[cls].values()]
        assert multiset(got) == multiset(oracle(doc)), cls


def test_practices_outside_the_region_are_excluded(annex):
    doc = annex_snapshot(3, n_cabinets=3, n_praticiens=6)
    outside = {c["oid"] for c in doc["classes"]["CABINET"] if c["adresse"]["region"] != "Midi-Pyrenees"}
    names = {(p["nom"], p["prenom"], p["annee_n"]) for p in doc["classes"]["PRATICIEN"] if p.get("travaille") in outside}
    got = {(v["nom"], v["prenom"], v["annee_n"]) for v in evaluate(annex, doc)["Praticien"].values()}
    inside = {(p["nom"], p["prenom"], p["annee_n"]) for p in doc["classes"]["PRATICIEN"] if p.get("travaille") and p["travaille"] not in outside}
    assert got <= inside
    assert not (got & (names - inside))


def test_empty_snapshot_gives_empty_extents(annex):
    doc = annex_snapshot(0, 0, 0, 0, 0, 0)
    assert all(not r.objects for r in evaluate(annex, doc).values())
