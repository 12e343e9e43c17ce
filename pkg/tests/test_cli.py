import json
import subprocess
import sys

import pytest

from wdw.analyzer import UsageMatrix
from wdw.cli import main
from wdw.io import dumps
from wdw.sample import annex_snapshot

from conftest import ANNEX
from schemas import PEOPLE, people_snapshot


@pytest.fixture
def workdir(tmp_path):
    for i in range(3):
        (tmp_path / f"s{i}.json").write_text(dumps(annex_snapshot(i, at=None)))
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", ANNEX)
    assert code == 0 and "ok (6 source classes, 4 warehouse classes, 1 environments)" in out
    bad = tmp_path / "bad.wdl"
    bad.write_text(PEOPLE.replace("mapping project", "mapping projekt"))
    code, out, _ = run(capsys, "validate", bad)
    assert code == 1 and str(bad) in out


def test_validate_reports_model_diagnostics(capsys, tmp_path):
    p = tmp_path / "s.wdl"
    p.write_text(PEOPLE.replace("archive filter {avg(nb_enfants)}", "archive filter {avg(nom)}"))
    code, out, _ = run(capsys, "validate", p)
    assert code == 1 and "nom" in out


def test_print_is_canonical(capsys, tmp_path):
    _, first, _ = run(capsys, "print", ANNEX)
    p = tmp_path / "canon.wdl"
    p.write_text(first)
    _, second, _ = run(capsys, "print", p)
    assert first == second


def test_analyze_report_and_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", ANNEX, "--csv", tmp_path)
    assert code == 0
    assert "cout_secu: MISSING {montant_remb}" in out
    assert "warning: Prescription declares cout_secu(), which is not derivable" in out
    m = UsageMatrix.from_csv((tmp_path / "MUP_Prescription.csv").read_text())
    assert m.derived_row[m.col("prescription")] == 1
    assert (tmp_path / "MUM.csv").exists() and (tmp_path / "MUO_Praticien.csv").exists()
    run(capsys, "analyze", ANNEX, "--csv", tmp_path / "opt", "--optimize")
    slim = UsageMatrix.from_csv((tmp_path / "opt" / "MUP_Prescription.csv").read_text())
    assert len(slim.cols) < len(m.cols)
    assert slim.derivable_col == m.derivable_col


def test_analyze_with_assumption(capsys):
    _, out, _ = run(capsys, "analyze", ANNEX, "--assume-derivable", "MEDICAMENT::montant_remb")
    assert "cout_secu: DERIVABLE" in out


def test_analyze_exits_1_on_cycles(capsys, tmp_path):
    p = tmp_path / "cyc.wdl"
    p.write_text("""
    source s { interface K { attribute Short a;
        Short f() uses properties {a} methods {K::g};
        Short g() uses properties {a} methods {K::f}; } }
    warehouse w { interface W { attribute Short a; } mapping project [o.a] (o K); }
    """)
    code, out, _ = run(capsys, "analyze", p)
    assert code == 1 and "f: CYCLE with {g}" in out


def test_color_only_on_request(capsys, monkeypatch):
    _, plain, _ = run(capsys, "analyze", ANNEX)
    assert "\x1b[" not in plain
    monkeypatch.setenv("WDW_COLOR", "1")
    _, colored, _ = run(capsys, "analyze", ANNEX)
    assert "\x1b[32mDERIVABLE" in colored


def test_build_refresh_inspect(capsys, workdir):
    store = workdir / "store.json"
    code, out, _ = run(capsys, "build", ANNEX, workdir / "s0.json", "--at", "mois:2000-01", "-o", store)
    assert code == 0 and "Praticien:" in out
    code, out, _ = run(capsys, "refresh", store, workdir / "s1.json", "--at", "mois:2000-02")
    assert code == 0 and out.startswith("Praticien: created")
    code, out, _ = run(capsys, "inspect", store, "--class", "Personne", "--property", "ville")
    assert code == 0 and "ville =" in out
    code, _, err = run(capsys, "inspect", store, "--class", "Nobody")
    assert code == 2 and "unknown warehouse class" in err


def test_run_and_archive(capsys, tmp_path):
    schema = tmp_path / "people.wdl"
    schema.write_text(PEOPLE)
    for m in range(1, 14):
        (tmp_path / f"p{m}.json").write_text(dumps(people_snapshot([("p1", "a", "Albi", m % 3)])))
    store = tmp_path / "store.json"
    run(capsys, "build", schema, tmp_path / "p1.json", "--at", "mois:1999-01", "-o", store)
    script = [{"at": f"mois:{1999 + (m - 1) // 12}-{(m - 1) % 12 + 1:02d}", "snapshot_path": f"p{m}.json", "environment": "foyers"} for m in range(2, 14)]
    (tmp_path / "ticks.json").write_text(json.dumps(script))
    code, out, _ = run(capsys, "run", store, tmp_path / "ticks.json")
    assert code == 0 and "tick mois:2000-01 [foyers]" in out
    code, out, _ = run(capsys, "archive", store, "--env", "foyers", "-o", tmp_path / "archived.json")
    assert code == 0 and out.strip() == "Personne: consumed 12, produced 1"
    code, _, err = run(capsys, "archive", store, "--env", "nowhere")
    assert code == 2


def test_schedule_violation_is_an_error(capsys, tmp_path):
    schema = tmp_path / "people.wdl"
    schema.write_text(PEOPLE)
    (tmp_path / "p.json").write_text(dumps(people_snapshot([("p1", "a", "Albi", 0)])))
    store = tmp_path / "store.json"
    run(capsys, "build", schema, tmp_path / "p.json", "--at", "jour:2000-01-01", "-o", store)
    (tmp_path / "t.json").write_text(json.dumps([{"at": "jour:2000-01-15", "snapshot_path": "p.json", "environment": "foyers"}]))
    code, _, err = run(capsys, "run", store, tmp_path / "t.json")
    assert code == 2 and "ScheduleViolation" in err


def test_usage_and_missing_files(capsys, tmp_path):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    code, _, err = run(capsys, "inspect", tmp_path / "none.json", "--class", "X")
    assert code == 2 and "cannot read" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "wdw", "validate", str(ANNEX)], capture_output=True, text=True)
    assert r.returncode == 0 and "ok" in r.stdout
