"""Write a month-by-month series of snapshots and a tick script for the reference schema.

    python scripts/make_sample_snapshots.py out/ --months 36 --start 1998-01
"""

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

from wdw.io import dumps
from wdw.sample import SampleConfig, monthly_series


@dataclass
class SeriesConfig:
    out: Path
    months: int = 12
    start: tuple[int, int] = (2000, 1)
    archive_at_end: bool = False
    sample: SampleConfig = SampleConfig()


def write_series(cfg: SeriesConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    series = monthly_series(cfg.sample, cfg.months, cfg.start)
    ticks = []
    for snap in series:
        name = f"snapshot_{snap['at'].split(':')[1]}.json"
        (cfg.out / name).write_text(dumps(snap), encoding="utf-8")
        ticks.append({"at": snap["at"], "snapshot_path": name, "environment": "suivi_praticiens"})
    if cfg.archive_at_end and ticks:
        ticks[-1]["archive"] = True
    script = cfg.out / "ticks.json"
    # the first snapshot seeds the store, so the script starts at the second
    script.write_text(json.dumps({"ticks": ticks[1:]}, indent=2) + "\n", encoding="utf-8")
    return script


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--months", type=int, default=12)
    ap.add_argument("--start", default="2000-01", help="YYYY-MM")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--archive-at-end", action="store_true")
    a = ap.parse_args()
    y, m = (int(x) for x in a.start.split("-"))
    cfg = SeriesConfig(a.out, a.months, (y, m), a.archive_at_end, SampleConfig(seed=a.seed))
    script = write_series(cfg)
    print(f"wrote {cfg.months} snapshots and {script}")


if __name__ == "__main__":
    main()
