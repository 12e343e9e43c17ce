"""Temporal object warehouse built from an object source schema.

Modules: ``temporal`` (units, instants, domains), ``model`` (schemas, states,
store), ``algebra`` (mapping functions), ``archive``, ``analyzer`` (method
derivability), ``refresh``, ``dsl`` and ``io``, with ``cli`` on top.
"""

from .algebra import SourceSnapshot, eval_expr, evaluate_warehouse
from .analyzer import deriver_comportement
from .archive import ArchivePredicate, apply_archive
from .dsl import parse_schema, print_schema
from .io import load_snapshot, load_store, save_store
from .refresh import initial_build, refresh, run_schedule
from .temporal import Instant, TemporalDomain, TemporalUnit, parse_instant

__all__ = [
    "ArchivePredicate",
    "Instant",
    "SourceSnapshot",
    "TemporalDomain",
    "TemporalUnit",
    "apply_archive",
    "deriver_comportement",
    "eval_expr",
    "evaluate_warehouse",
    "initial_build",
    "load_snapshot",
    "load_store",
    "parse_instant",
    "parse_schema",
    "print_schema",
    "refresh",
    "run_schedule",
    "save_store",
]
