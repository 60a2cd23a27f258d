import itertools
import random

from hypothesis import given, settings, strategies as st

from chasemith.lang import (
    ConjunctiveQuery,
    NamedAtom,
    StructureConstraint,
    Tgd,
    TotalQuery,
    Var,
    canonical_tgd,
    classify_tgd_set,
    compatible,
    eval_cq,
    satisfies_dependency,
    satisfies_structure,
)
from chasemith.relmodel import Instance, Schema
from gen import SMALL, random_instance, random_tgd
from util import VISITS_SCHEMA, egd, visits_i, migrated_visits, query, tgd

MIGRATE = "EVisits(facility: x, pId: y, timestp: z) -> LocVisits(facility: x, pId: y, timestp: z)"


def test_compatibility():
    assert compatible(query("LocVisits(facility: x)"), VISITS_SCHEMA)
    assert not compatible(query("LocVisits(insId: y)"), VISITS_SCHEMA)
    assert compatible(ConjunctiveQuery((), ()), VISITS_SCHEMA)
    assert compatible(TotalQuery("EVisits"), VISITS_SCHEMA)
    assert not compatible(TotalQuery("Patients"), VISITS_SCHEMA)


def test_total_query_matches_wildcard_structure():
    for rel in ("EVisits", "Patients"):
        assert compatible(TotalQuery(rel), VISITS_SCHEMA) == satisfies_structure(VISITS_SCHEMA, StructureConstraint(rel))


def test_eval_cq():
    i = visits_i()
    assert eval_cq(query("(x): LocVisits(facility: x)"), i) == {("1234",), ("1222",)}
    assert eval_cq(query("EVisits(facility: x, pId: y, timestp: z)"), i) == {()}
    empty = Instance(VISITS_SCHEMA)
    assert eval_cq(query("EVisits(facility: x)"), empty) == set()


def test_constants_in_atoms():
    assert eval_cq(query("(y): LocVisits(facility: 1222, pId: y)"), visits_i()) == {("33",)}


def test_satisfies_tgd():
    t = tgd(MIGRATE)
    assert satisfies_dependency(migrated_visits(), t)
    assert not satisfies_dependency(visits_i(), t)
    s = Schema({"R": ["A"], "T": ["A"]})
    assert satisfies_dependency(Instance(s, {"T": [("1",)]}), tgd("R(A: x) -> T(A: x)"))


def test_incompatible_dependency_is_not_satisfied():
    assert not satisfies_dependency(visits_i(), tgd("LocVisits(facility: x) -> LocVisits(insId: x)"))


def test_satisfies_egd():
    s = Schema({"R": ["A", "B"]})
    e = egd("R(A: x, B: y), R(A: x, B: z) -> y = z")
    assert satisfies_dependency(Instance(s, {"R": [("1", "2"), ("2", "2")]}), e)
    assert not satisfies_dependency(Instance(s, {"R": [("1", "2"), ("1", "3")]}), e)


def test_satisfies_structure():
    assert satisfies_structure(VISITS_SCHEMA, StructureConstraint("LocVisits"))
    assert not satisfies_structure(VISITS_SCHEMA, StructureConstraint("LocVisits", ("insId",)))
    assert not satisfies_structure(VISITS_SCHEMA, StructureConstraint("R"))


def test_classify_tgd_sets():
    f = classify_tgd_set([tgd(MIGRATE)])
    assert f.full and f.acyclic
    f = classify_tgd_set([tgd("R(A: x) -> T(A: x)"), tgd("T(A: x) -> R(A: x)")])
    assert f.full and not f.acyclic and f.weakly_acyclic
    f = classify_tgd_set([])
    assert f.full and f.acyclic and f.weakly_acyclic


def test_weak_acyclicity():
    # an existential position fed back into itself
    t = tgd("E(A: x, B: y) -> exists z. E(A: y, B: z)")
    f = classify_tgd_set([t])
    assert not f.full and not f.weakly_acyclic
    f = classify_tgd_set([tgd("R(A: x) -> exists z. E(A: x, B: z)")])
    assert not f.full and f.acyclic and f.weakly_acyclic


def test_canonical_tgd_ignores_variable_names():
    a = tgd("R(A: x), E(A: x, B: y) -> T(A: y)")
    b = tgd("E(A: u, B: w), R(A: u) -> T(A: w)")
    assert canonical_tgd(a) == canonical_tgd(b)
    assert canonical_tgd(a) != canonical_tgd(tgd("R(A: x), E(A: x, B: y) -> T(A: x)"))


def _brute_satisfies(inst, t):
    dom = sorted(inst.active_domain()) or ["0"]
    vs = sorted({v for a in t.body + t.head for v in a.vars()}, key=lambda v: v.name)
    bvars = [v for v in vs if any(v in a.vars() for a in t.body)]
    hvars = [v for v in vs if v not in bvars]

    def holds(atom, asg):
        row = {attr: asg.get(term, term) for attr, term in atom.bindings}
        return any(all(r[attr] == val for attr, val in row.items()) for r in inst.tuples(atom.rel))

    for vals in itertools.product(dom, repeat=len(bvars)):
        asg = dict(zip(bvars, vals))
        if not all(holds(a, asg) for a in t.body):
            continue
        ok = any(all(holds(a, {**asg, **dict(zip(hvars, ext))}) for a in t.head)
                 for ext in itertools.product(dom, repeat=len(hvars)))
        if not ok:
            return False
    return True


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_tgd_satisfaction_agrees_with_assignment_enumeration(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, SMALL, ("1", "2", "3"), max_tuples=6)
    t = random_tgd(rng, SMALL, list(SMALL), ("1",))
    assert satisfies_dependency(inst, t) == _brute_satisfies(inst, t)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_eval_cq_is_monotone(seed):
    rng = random.Random(seed)
    a = random_instance(rng, SMALL, ("1", "2"), max_tuples=4)
    b = random_instance(rng, SMALL, ("1", "2"), max_tuples=4)
    union = a.add({r: b.rows(r) for r in SMALL})
    t = random_tgd(rng, SMALL, list(SMALL))
    q = ConjunctiveQuery(tuple(t.frontier), tuple(t.body))
    assert eval_cq(q, a) <= eval_cq(q, union)


def test_atoms_reject_repeated_attributes():
    try:
        NamedAtom("R", [("A", Var("x")), ("A", Var("y"))])
    except ValueError:
        return
    raise AssertionError("duplicate attribute accepted")


def test_tgd_frontier_and_existentials():
    t = Tgd([NamedAtom("R", {"A": Var("x")})], [NamedAtom("E", {"A": Var("x"), "B": Var("z")})])
    assert t.frontier == (Var("x"),)
    assert t.existential == (Var("z"),)
    assert not t.is_full
