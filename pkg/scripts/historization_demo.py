"""Build a store from the reference schema, refresh it monthly for three years, archive, and show one history."""

import argparse
from dataclasses import dataclass
from pathlib import Path

from wdw.io import read_schema, save_store, snapshot_from_json
from wdw.model import check_store_invariants, history
from wdw.refresh import RefreshTick, initial_build, run_schedule
from wdw.sample import SampleConfig, monthly_series
from wdw.temporal import format_domain, parse_instant

DEFAULT_SCHEMA = Path(__file__).resolve().parents[1] / "src" / "wdw" / "fixtures" / "annex.wdl"


@dataclass
class DemoConfig:
    schema: Path = DEFAULT_SCHEMA
    months: int = 37
    start: tuple[int, int] = (1998, 1)
    sample: SampleConfig = SampleConfig(seed=4, n_praticiens=6)
    save: Path | None = None


def run(cfg: DemoConfig) -> None:
    doc, text = read_schema(cfg.schema)
    series = monthly_series(cfg.sample, cfg.months, cfg.start, moves=2)
    snaps = [snapshot_from_json(s, doc.source) for s in series]
    store = initial_build(doc.schema, snaps[0], parse_instant(series[0]["at"]), text)
    ticks = [RefreshTick(parse_instant(s["at"]), snap, "suivi_praticiens") for s, snap in zip(series[1:], snaps[1:])]
    ticks[-1].archive = True
    report = run_schedule(store, ticks)
    for line in report.lines()[-6:]:
        print(line)
    print()
    for cname in ("Personne", "Praticien"):
        objs = store.objects(cname)
        print(f"{cname}: {len(objs)} objects, {sum(len(o.past) for o in objs)} past, {sum(len(o.archived) for o in objs)} archived")
    o = max(store.objects("Personne"), key=lambda x: len(x.past) + len(x.archived))
    print(f"\nville of {o.oid}:")
    for dom, v in history(o, "ville"):
        print(f"  {format_domain(dom)}  {v}")
    for s in o.archived:
        print(f"  archived {format_domain(s.domain)}  {s.value}")
    problems = check_store_invariants(store)
    print(f"\ninvariants: {'ok' if not problems else problems}")
    if cfg.save:
        save_store(store, cfg.save)
        print(f"saved {cfg.save}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--months", type=int, default=37)
    ap.add_argument("--save", type=Path)
    a = ap.parse_args()
    run(DemoConfig(months=a.months, save=a.save))
