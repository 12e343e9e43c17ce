"""Print the derivability verdicts of a schema and how much optimize shrinks each matrix."""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from wdw.analyzer import deriver_comportement, optimize
from wdw.io import read_schema

DEFAULT_SCHEMA = Path(__file__).resolve().parents[1] / "src" / "wdw" / "fixtures" / "annex.wdl"


@dataclass
class ReportConfig:
    schema: Path = DEFAULT_SCHEMA
    assume: list[str] = field(default_factory=list)


def run(cfg: ReportConfig) -> None:
    doc, _ = read_schema(cfg.schema)
    a = deriver_comportement(doc.schema, assume_derivable=cfg.assume)
    for line in a.report_lines():
        print(line)
    print()
    print(f"{'matrix':<22}{'rows':>6}{'cols':>6}{'optimized':>11}")
    for kind, mats in (("MUP", a.mups), ("MUO", a.muos)):
        for cname, m in mats.items():
            print(f"{kind + ' ' + cname:<22}{len(m.rows):>6}{len(m.cols):>6}{len(optimize(m).cols):>11}")
    print(f"{'MUM':<22}{len(a.mum.rows):>6}{len(a.mum.cols):>6}{'-':>11}")
    for w in a.warnings:
        print(f"warning: {w}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("schema", nargs="?", type=Path, default=DEFAULT_SCHEMA)
    ap.add_argument("--assume-derivable", action="append", default=[])
    a = ap.parse_args()
    run(ReportConfig(a.schema, a.assume_derivable))
