"""Archive three years of monthly states under both modes and both avg weightings."""

import argparse
import random
from dataclasses import dataclass

from wdw.archive import ArchivePredicate, archive_object
from wdw.model import State, WarehouseObject
from wdw.temporal import TemporalDomain, TemporalUnit, format_domain


@dataclass
class ArchiveConfig:
    first_year: int = 1998
    years: int = 3
    predicate: str = "not within annee:2000"
    seed: int = 0
    max_run: int = 1  # >1 gives states spanning several months


def history_of(cfg: ArchiveConfig) -> WarehouseObject:
    rng = random.Random(cfg.seed)
    t = (cfg.first_year - 1970) * 12
    end = t + 12 * cfg.years
    past = []
    while t < end:
        n = min(rng.randint(1, cfg.max_run), end - t)
        past.append(State({"nb_enfants": rng.randint(0, 4)}, TemporalDomain.of(TemporalUnit.MOIS, (t, t + n - 1))))
        t += n
    return WarehouseObject("demo", "demo", None, past)


def run(cfg: ArchiveConfig) -> None:
    pred = ArchivePredicate.parse(cfg.predicate)
    print(f"predicate: {pred}")
    for mode, target in (("classical", None), ("temporal", TemporalUnit.ANNEE)):
        for weight in ("state", "duration"):
            o = history_of(cfg)
            n = len(o.past)
            consumed, produced = archive_object(o, {"nb_enfants": "avg"}, pred, mode, target, weight)
            print(f"{mode:<10} {weight:<9} {n} past -> consumed {consumed}, produced {produced}, kept {len(o.past)}")
            for s in o.archived:
                print(f"    {format_domain(s.domain)}  avg nb_enfants = {s.value['nb_enfants']:.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--predicate", default=ArchiveConfig.predicate)
    ap.add_argument("--max-run", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    run(ArchiveConfig(predicate=a.predicate, max_run=a.max_run, seed=a.seed))
