import random

import pytest
from hypothesis import given, settings, strategies as st

from chasemith.dsl import DslError, format_workspace, load, parse_spec
from chasemith.lang import ConjunctiveQuery, Egd, StructureConstraint, Tgd, TotalQuery, Var
from chasemith.procedures import Procedure
from chasemith.relmodel import Instance, Null
from gen import SMALL, random_instance, random_safe_procedure
from util import CORPUS, visits_i


def test_corpus_files_parse():
    ws = load(f"{CORPUS}/visits.wf")
    assert ws.instance == visits_i()
    assert [p.name for p in ws.catalog] == ["migrate", "migrate_checked"]
    assert set(ws.goals) == {"migrated", "at2087"}


@pytest.mark.parametrize("name", ["visits.wf", "motivating.wf"])
def test_format_round_trip(name):
    ws = load(f"{CORPUS}/{name}")
    assert parse_spec(format_workspace(ws)) == ws


def test_procedure_sections():
    ws = parse_spec("""
        schema { relation R(A, B) relation T(A) }
        procedure p {
          scope { T[*]; R[B] }
          pre { R[A] ; egd: R(A: x, B: y), R(A: x, B: z) -> y = z }
          post { tgd: R(A: x) -> exists z. T(A: z) }
          preserve { total T; (x): R(A: x, B: y) }
        }""")
    p = ws.procedure("p")
    assert p.scope == (StructureConstraint("T"), StructureConstraint("R", ("B",)))
    assert isinstance(p.pre[0], StructureConstraint) and isinstance(p.pre[1], Egd)
    assert isinstance(p.post[0], Tgd) and p.post[0].existential == (Var("z"),)
    assert p.preserve[0] == TotalQuery("T")
    assert p.preserve[1].free == (Var("x"),)


def test_query_defaults():
    ws = parse_spec("""
        procedure p { preserve { R(A: x, B: y) } }
        goal g { query: R(A: x) }
        goal h { query: (x): R(A: x) }""")
    assert ws.procedure("p").preserve[0].free == (Var("x"), Var("y"))
    assert ws.goals["g"].free == ()
    assert ws.goals["h"].free == (Var("x"),)


def test_values_and_nulls():
    ws = parse_spec('schema { relation R(A, B) } instance { R(A: 7, B: "a b") R(A: _:n3, B: "q") }')
    assert ws.instance.rows("R") == {("7", "a b"), (Null(3), "q")}
    with pytest.raises(DslError):
        parse_spec("goal g { query: R(A: _:n1) }")


def test_comments_and_separators():
    ws = parse_spec("# leading\nschema { relation R(A) } # trailing\ngoal g { query: R(A: x) & R(A: 1) }")
    assert len(ws.goals["g"].atoms) == 2


@pytest.mark.parametrize("text, line, column", [
    ("schema { relation R(A) }\ninstance { R(A: 1, B: 2) }", 2, 12),
    ("schema { relation R(A) }\ninstance { T(A: 1) }", 2, 12),
    ("schema {\n relation R(A\n}", 3, 1),
    ("goal g { query: R(A: x) ", None, None),
    ("procedure p { post { tgd: R(A: x) -> T(A: x, A: y) } }", 1, 38),
    ("procedure p { } procedure p { }", 1, 27),
])
def test_errors_carry_positions(text, line, column):
    with pytest.raises(DslError) as e:
        parse_spec(text)
    if line is not None:
        assert (e.value.line, e.value.column) == (line, column)
        assert str(e.value).startswith(f"{line}:{column}: ")


def test_undeclared_attributes_in_procedures_are_allowed():
    ws = parse_spec("schema { relation R(A) } procedure p { post { R[B] } }")
    assert ws.procedure("p").post == (StructureConstraint("R", ("B",)),)


def _workspace_text(inst, procs):
    from chasemith.dsl import format_procedure

    rels = "\n".join(f"  relation {r}({', '.join(a)})" for r, a in inst.schema.items())
    facts = "\n".join(f"  {r}(" + ", ".join(f"{a}: {v}" for a, v in zip(inst.schema[r], row)) + ")"
                      for r in inst.schema for row in inst.sorted_rows(r))
    return f"schema {{\n{rels}\n}}\ninstance {{\n{facts}\n}}\n" + "\n".join(map(format_procedure, procs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_workspaces_round_trip(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, SMALL, ("1", "2", "3"))
    procs = [random_safe_procedure(rng, f"p{k}", consts=("1",)) for k in range(rng.randint(0, 3))]
    ws = parse_spec(_workspace_text(inst, procs))
    assert ws.instance == inst
    assert ws.catalog == procs
    assert parse_spec(format_workspace(ws)) == ws


def test_empty_workspace():
    ws = parse_spec("")
    assert ws.instance == Instance(ws.schema) and ws.catalog == [] and ws.goals == {}
    assert isinstance(parse_spec("procedure p { }").procedure("p"), Procedure)
    assert isinstance(parse_spec("goal g { query: R(A: x) }").goals["g"], ConjunctiveQuery)
