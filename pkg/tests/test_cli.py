import io
import json
import os

import pytest

from chasemith.cli import INPUT, NO, NOT_WITHIN, OK, UNSUPPORTED, main
from util import CORPUS

VISITS_WF = os.path.join(CORPUS, "visits.wf")
MOTIVATING = os.path.join(CORPUS, "motivating.wf")


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_check():
    code, text = run("check", MOTIVATING)
    assert code == OK
    assert "procedure alter_insid: safe-alteration" in text
    assert "procedure fill: full-scope with cyclic tgds (dynamic path only)" in text
    assert "procedure migrate: safe-scope" in text


def test_apply_static_json():
    code, text = run("apply", VISITS_WF, "--seq", "migrate")
    doc = json.loads(text)
    assert code == OK and doc["format"] == "chasemith/1" and doc["kind"] == "skb"
    assert doc["skb"]["scope"] == ["LocVisits"]
    assert len(doc["skb"]["minimal_instance"]["relations"]["LocVisits"]) == 3


def test_apply_dynamic():
    code, text = run("apply", MOTIVATING, "--seq", "alter_insid,fill", "--semantics", "dynamic")
    assert code == OK and json.loads(text)["kind"] == "conditional"
    code, text = run("apply", MOTIVATING, "--seq", "fill", "--semantics", "dynamic")
    assert code == NO and json.loads(text)["kind"] == "empty"


def test_yes_no_commands():
    assert run("entails", VISITS_WF, "--seq", "migrate", "--goal", "migrated") == (OK, "YES\n")
    code, text = run("entails", VISITS_WF, "--goal", "migrated")
    assert code == NO and text.startswith("NO\ncounterexample: ")
    assert run("certain", VISITS_WF, "--seq", "migrate", "--query", "at2087") == (OK, "YES\n")
    assert run("certain", VISITS_WF, "--query", "at2087") == (NO, "NO\n")
    assert run("nonempty", VISITS_WF, "--seq", "migrate")[0] == OK
    assert run("nonempty", MOTIVATING, "--seq", "fill", "--semantics", "dynamic")[0] == NO
    assert run("applicability", VISITS_WF, "--seq", "migrate_checked")[0] == OK


def test_applicability_trace():
    code, text = run("applicability", MOTIVATING, "--seq", "alter_insid,fill", "--dynamic")
    lines = text.splitlines()
    assert code == OK and lines[0].startswith("alter_insid: ") and lines[-1] == "YES"
    code, text = run("applicability", MOTIVATING, "--seq", "fill", "--dynamic")
    assert code == NO and "fails: " in text


def test_entails_json():
    code, text = run("entails", VISITS_WF, "--seq", "migrate", "--goal", "migrated", "--json")
    doc = json.loads(text)
    assert code == OK and doc["holds"] and doc["dependency"]["kind"] == "tgd"


def test_ready():
    code, text = run("ready", MOTIVATING, "--goal", "insured", "--max-len", "3", "--semantics", "dynamic")
    assert (code, text) == (OK, "WITNESS alter_insid fill\n")
    code, text = run("ready", MOTIVATING, "--goal", "insured", "--catalog", "fill,migrate", "--max-len", "3",
                     "--semantics", "dynamic")
    assert (code, text) == (NOT_WITHIN, "NO-WITHIN-BOUND 3\n")
    code, text = run("ready", MOTIVATING, "--goal", "insured", "--max-len", "3", "--semantics", "dynamic", "--json")
    doc = json.loads(text)
    assert doc["outcome"] == "witness" and doc["witness"] == ["alter_insid", "fill"] and doc["stats"]["verified"]


def test_ready_unsupported():
    code, text = run("ready", VISITS_WF, "--goal", "at2087", "--catalog", "migrate_checked", "--max-len", "2")
    assert code == UNSUPPORTED and text.startswith("UNSUPPORTED ")


def test_goal_file(tmp_path):
    g = tmp_path / "g.wf"
    g.write_text("goal extra { query: LocVisits(facility: 2087) }\n")
    code, text = run("ready", VISITS_WF, "--goal-file", str(g), "--max-len", "2", "--catalog", "migrate")
    assert (code, text) == (OK, "WITNESS migrate\n")


def test_oracle_commands():
    code, text = run("oracle", "outcomes", VISITS_WF, "--seq", "migrate", "--extra-tuples", "1")
    assert code == OK and json.loads(text)["count"] == 1
    code, text = run("oracle", "certain", VISITS_WF, "--seq", "migrate", "--query", "at2087")
    assert code == OK and text.startswith("YES\n")


@pytest.mark.parametrize("argv", [
    ("check", "/nonexistent.wf"),
    ("apply", VISITS_WF, "--seq", "nope"),
    ("entails", VISITS_WF, "--goal", "nope"),
    ("entails", VISITS_WF, "--goal", "at2087"),
    ("certain", VISITS_WF, "--query", "migrated"),
    ("ready", VISITS_WF, "--max-len", "2"),
    ("ready", VISITS_WF, "--goal", "at2087", "--catalog", "migrate", "--max-len", "2", "--prove-bound"),
])
def test_input_errors(argv, capsys):
    assert run(*argv)[0] == INPUT
    assert capsys.readouterr().err.startswith("error: ")


def test_bad_workspace_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.wf"
    bad.write_text("schema {\n  relation R(A\n}\n")
    assert run("check", str(bad))[0] == INPUT
    assert capsys.readouterr().err.startswith("error: 3:1: ")


def test_unsupported_exit():
    code, _ = run("apply", VISITS_WF, "--seq", "migrate_checked")
    assert code == UNSUPPORTED


@pytest.mark.parametrize("argv", [
    ("apply", VISITS_WF, "--seq", "migrate"),
    ("apply", MOTIVATING, "--seq", "alter_insid,fill", "--semantics", "dynamic"),
    ("ready", MOTIVATING, "--goal", "insured", "--max-len", "3", "--semantics", "dynamic", "--json"),
    ("oracle", "outcomes", MOTIVATING, "--seq", "alter_insid", "--dynamic", "--extra-tuples", "0",
     "--extra-attrs", "1"),
])
def test_output_is_deterministic(argv):
    assert run(*argv) == run(*argv)
