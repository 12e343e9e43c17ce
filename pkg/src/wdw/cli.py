"""Command-line driver: ``wdw <command> ...``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

from .algebra import evaluation_order
from .analyzer import deriver_comportement, optimize
from .archive import apply_archive
from .dsl import print_schema
from .errors import DslError, WdwError
from .io import load_snapshot, load_store, load_tickscript, read_schema, save_store
from .model import history, validate_schema
from .refresh import initial_build, refresh, run_schedule
from .temporal import TemporalError, format_domain, parse_instant
from .values import format_value

EXIT_OK, EXIT_DIAG, EXIT_ERROR = 0, 1, 2

_COLORS = {"DERIVABLE": "32", "MISSING": "31", "CYCLE": "33"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _colored(line: str) -> str:
    if os.environ.get("WDW_COLOR", "0") != "1":
        return line
    name, _, rest = line.partition(": ")
    word = rest.split(" ", 1)[0]
    code = _COLORS.get(word)
    return f"{name}: \x1b[{code}m{rest}\x1b[0m" if code else line


def _out(lines) -> None:
    for line in lines:
        print(line)


def _load_schema(path: str):
    doc, text = read_schema(path)
    diags = validate_schema(doc.schema)
    return doc, text, diags


def cmd_validate(args) -> int:
    try:
        doc, _, diags = _load_schema(args.schema)
    except DslError as e:
        print(f"{args.schema}:{e}")
        return EXIT_DIAG
    for d in diags:
        print(f"{args.schema}: {d}")
    if diags:
        return EXIT_DIAG
    s = doc.schema
    print(f"{args.schema}: ok ({len(s.source.classes)} source classes, {len(s.classes)} warehouse classes, {len(s.environments)} environments)")
    return EXIT_OK


def cmd_build(args) -> int:
    doc, text, diags = _load_schema(args.schema)
    if diags:
        for d in diags:
            print(f"{args.schema}: {d}", file=sys.stderr)
        return EXIT_DIAG
    snap = load_snapshot(args.snapshot, doc.source)
    store = initial_build(doc.schema, snap, parse_instant(args.at), text)
    save_store(store, args.output)
    for cname in evaluation_order(store.schema):
        print(f"{cname}: {len(store.extents.get(cname, {}))} objects")
    return EXIT_OK


def cmd_refresh(args) -> int:
    store = load_store(args.store)
    snap = load_snapshot(args.snapshot, store.schema.source)
    report = refresh(store, snap, parse_instant(args.at), args.env)
    save_store(store, args.output or args.store)
    _out(report.lines())
    return EXIT_OK


def cmd_run(args) -> int:
    store = load_store(args.store)
    ticks = load_tickscript(args.tickscript, store.schema.source)
    report = run_schedule(store, ticks)
    save_store(store, args.output or args.store)
    _out(report.lines())
    return EXIT_OK


def cmd_archive(args) -> int:
    store = load_store(args.store)
    if args.env not in store.schema.environments:
        print(f"error: unknown environment {args.env!r}", file=sys.stderr)
        return EXIT_ERROR
    report = apply_archive(store.schema.environments[args.env], store, args.weight)
    save_store(store, args.output or args.store)
    _out(report.lines())
    return EXIT_OK


def cmd_analyze(args) -> int:
    doc, _, diags = _load_schema(args.schema)
    if diags:
        for d in diags:
            print(f"{args.schema}: {d}", file=sys.stderr)
        return EXIT_DIAG
    analysis = deriver_comportement(doc.schema, assume_derivable=args.assume_derivable)
    _out(_colored(line) for line in analysis.report_lines())
    for w in analysis.warnings:
        print(f"warning: {w}")
    if args.csv:
        out = Path(args.csv)
        out.mkdir(parents=True, exist_ok=True)
        for kind, mats in (("MUP", analysis.mups), ("MUO", analysis.muos)):
            for cname, m in mats.items():
                m = optimize(m) if args.optimize else m
                (out / f"{kind}_{cname}.csv").write_text(m.to_csv(), encoding="utf-8")
        (out / "MUM.csv").write_text(analysis.mum.to_csv(), encoding="utf-8")
    return EXIT_DIAG if analysis.cycles else EXIT_OK


def cmd_inspect(args) -> int:
    store = load_store(args.store)
    if args.cls not in store.extents:
        print(f"error: unknown warehouse class {args.cls!r}", file=sys.stderr)
        return EXIT_ERROR
    objs = store.objects(args.cls)
    if args.oid:
        objs = [o for o in objs if o.oid == args.oid]
        if not objs:
            print(f"error: no object {args.oid!r} in {args.cls}", file=sys.stderr)
            return EXIT_ERROR
    for o in objs:
        flag = "" if o.active else " (retired)"
        print(f"{o.oid}{flag}")
        if args.property:
            for dom, v in history(o, args.property):
                print(f"  {format_domain(dom)} {args.property} = {format_value(v)}")
            continue
        states = [("past", s) for s in o.past] + ([("current", o.current)] if o.current else [])
        for label, s in states:
            print(f"  {label} {format_domain(s.domain)} {format_value(s.value)}")
        for s in o.archived:
            print(f"  archived {format_domain(s.domain)} {format_value(s.value)}")
    return EXIT_OK


def cmd_print(args) -> int:
    doc, _, _ = _load_schema(args.schema)
    sys.stdout.write(print_schema(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wdw", description="Temporal object warehouse: schemas, refreshes, archives and method derivability.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a schema file")
    s.add_argument("schema")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("print", help="print a schema in canonical form")
    s.add_argument("schema")
    s.set_defaults(func=cmd_print)

    s = sub.add_parser("build", help="populate a new store from a snapshot")
    s.add_argument("schema")
    s.add_argument("snapshot")
    s.add_argument("--at", required=True, help="build instant, e.g. mois:2000-01")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("refresh", help="apply one snapshot to a store")
    s.add_argument("store")
    s.add_argument("snapshot")
    s.add_argument("--at", required=True)
    s.add_argument("--env", help="refresh only this environment's classes")
    s.add_argument("-o", "--output", help="write here instead of in place")
    s.set_defaults(func=cmd_refresh)

    s = sub.add_parser("run", help="apply a tick script")
    s.add_argument("store")
    s.add_argument("tickscript")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("archive", help="archive past states of an environment")
    s.add_argument("store")
    s.add_argument("--env", required=True)
    s.add_argument("--weight", choices=("state", "duration"), default="state", help="avg weighting of past states")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_archive)

    s = sub.add_parser("analyze", help="method derivability report")
    s.add_argument("schema")
    s.add_argument("--csv", metavar="DIR", help="write MUP/MUO/MUM matrices here")
    s.add_argument("--optimize", action="store_true", help="drop fully derived columns from MUP/MUO files")
    s.add_argument("--assume-derivable", action="append", default=[], metavar="METHOD")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("inspect", help="print state histories")
    s.add_argument("store")
    s.add_argument("--class", dest="cls", required=True)
    s.add_argument("--oid")
    s.add_argument("--property")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except DslError as e:
        target = getattr(args, "schema", None) or getattr(args, "store", "")
        print(f"{target}:{e}", file=sys.stderr)
        return EXIT_ERROR
    except (WdwError, TemporalError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
