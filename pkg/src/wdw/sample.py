"""Seeded generator of small, referentially consistent snapshots for the medical reference schema."""

from __future__ import annotations

import copy
import random
from dataclasses import asdict, dataclass
from typing import Any

REGIONS = ("Midi-Pyrenees", "Aquitaine")
VILLES = {"Midi-Pyrenees": ("Toulouse", "Albi", "Rodez", "Cahors"), "Aquitaine": ("Bordeaux", "Pau")}
CATEGORIES = ("interne", "generaliste", "specialiste")
SPECIALITES = ("cardiologie", "pediatrie", "dermatologie", "aucune")
NOMS = ("Martin", "Bernard", "Dubois", "Durand", "Lefebvre", "Moreau", "Laurent", "Simon")
PRENOMS = ("Anne", "Paul", "Marie", "Luc", "Julie", "Marc", "Claire", "Pierre")


def _adresse(rng: random.Random, region: str) -> dict[str, Any]:
    ville = rng.choice(VILLES[region])
    return {
        "libelle": f"{rng.randint(1, 90)} rue {rng.choice(NOMS)}",
        "code": f"{rng.randint(10, 99)}{rng.randint(0, 999):03d}",
        "ville": ville,
        "departement": ville[:3].upper(),
        "region": region,
        "densite": rng.randint(10, 500),
    }


def annex_snapshot(
    seed: int = 0,
    n_cabinets: int = 3,
    n_praticiens: int = 5,
    n_patients: int = 4,
    n_visites: int = 8,
    n_medicaments: int = 5,
    at: str | None = "mois:2000-01",
) -> dict[str, Any]:
    """A snapshot document whose relationships and inverses all agree."""
    rng = random.Random(seed)
    cabinets = []
    for i in range(n_cabinets):
        region = REGIONS[0] if i % 3 != 2 else REGIONS[1]
        cabinets.append({"oid": f"c{i}", "intitule": f"Cabinet {i}", "adresse": _adresse(rng, region), "membres": []})
    medicaments = [
        {
            "oid": f"m{i}",
            "code": f"MED{i:03d}",
            "generique": rng.random() < 0.5,
            "categorie_molecule": rng.choice(("antalgique", "antibiotique", "antiviral")),
            "type_molecule": rng.choice(("A", "B")),
            "posologie": f"{rng.randint(1, 3)} par jour",
            "quantite": rng.randint(1, 4),
            "tarif": round(rng.uniform(1, 40), 2),
            "taux_secu": rng.choice((0.35, 0.65, 1.0)),
            "fabriquant": rng.choice(("Sanofi", "Servier")),
        }
        for i in range(n_medicaments)
    ]

    def person(oid: str) -> dict[str, Any]:
        return {
            "oid": oid,
            "nom": rng.choice(NOMS),
            "prenom": rng.choice(PRENOMS),
            "annee_n": rng.randint(1940, 1985),
            "adresse": _adresse(rng, rng.choice(REGIONS)),
            "enfants": [],
            "parents": [],
        }

    praticiens = []
    for i in range(n_praticiens):
        p = person(f"pr{i}")
        p.update(
            num_prat=f"P{i:04d}",
            categorie=rng.choice(CATEGORIES),
            specialite=rng.choice(SPECIALITES),
            type_convention=rng.choice((1.0, 2.0)),
            diplomes=sorted(rng.sample(["DES", "DU", "CES", "DIU"], rng.randint(0, 2))),
            consultations=[],
        )
        if cabinets and rng.random() < 0.9:
            c = rng.choice(cabinets)
            p["travaille"] = c["oid"]
            c["membres"].append(p["oid"])
        praticiens.append(p)
    patients = []
    for i in range(n_patients):
        p = person(f"pa{i}")
        p.update(num_secu=f"{rng.randint(10**12, 10**13 - 1)}", cle_secu=f"{rng.randint(1, 97):02d}", visites=[])
        patients.append(p)

    people = praticiens + patients
    for child in people:
        if rng.random() < 0.4:
            parent = rng.choice(people)
            if parent is not child and parent["oid"] not in child["parents"]:
                child["parents"].append(parent["oid"])
                parent["enfants"].append(child["oid"])
    singles = list(people)
    rng.shuffle(singles)
    while len(singles) >= 2 and rng.random() < 0.6:
        a, b = singles.pop(), singles.pop()
        a["marie"], b["marie"] = b["oid"], a["oid"]

    visites = []
    for i in range(n_visites if praticiens and patients else 0):
        pr = rng.choice(praticiens)
        pa = rng.choice(patients)
        v = {
            "oid": f"v{i}",
            "honoraire": rng.choice((20.0, 23.0, 25.0, 40.0)),
            "symptomes": rng.sample(["fievre", "toux", "fatigue", "douleur"], rng.randint(0, 2)),
            "tension": {"max": rng.randint(10, 16), "min": rng.randint(6, 9)},
            "poids": float(rng.randint(50, 110)),
            "taille": round(rng.uniform(1.5, 1.95), 2),
            "temperature": round(rng.uniform(36.5, 39.5), 1),
            "diagnostic": rng.choice(("grippe", "angine", "rien")),
            "prescription": sorted(m["oid"] for m in rng.sample(medicaments, rng.randint(0, min(2, len(medicaments))))),
            "patient": pa["oid"],
            "prescripteur": pr["oid"],
        }
        pr["consultations"].append(v["oid"])
        pa["visites"].append(v["oid"])
        visites.append(v)

    doc: dict[str, Any] = {}
    if at is not None:
        doc["at"] = at
    doc["classes"] = {
        "PRATICIEN": praticiens,
        "PATIENT": patients,
        "CABINET": cabinets,
        "VISITE": visites,
        "MEDICAMENT": medicaments,
    }
    return doc


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    n_cabinets: int = 3
    n_praticiens: int = 5
    n_patients: int = 4
    n_visites: int = 8
    n_medicaments: int = 5


def _month(year: int, month: int) -> str:
    return f"mois:{year:04d}-{month:02d}"


def monthly_series(config: SampleConfig, months: int, start: tuple[int, int] = (2000, 1), moves: int = 1) -> list[dict[str, Any]]:
    """Snapshots one month apart; each month ``moves`` people change town and some gain a child."""
    doc = annex_snapshot(at=None, **asdict(config))
    rng = random.Random(config.seed + 1)
    people = doc["classes"]["PRATICIEN"] + doc["classes"]["PATIENT"]
    out = []
    y, m = start
    for k in range(months):
        if k:
            for p in rng.sample(people, min(moves, len(people))):
                region = p["adresse"]["region"]
                p["adresse"]["ville"] = rng.choice([v for v in VILLES[region] if v != p["adresse"]["ville"]] or VILLES[region])
            if len(people) >= 2 and rng.random() < 0.3:
                parent, child = rng.sample(people, 2)
                if child["oid"] not in parent["enfants"]:
                    parent["enfants"].append(child["oid"])
                    child["parents"].append(parent["oid"])
        snap = copy.deepcopy(doc)
        snap["at"] = _month(y, m)
        out.append(snap)
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out
