import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from chasemith.chase import EGD_FAILURE, STEP_LIMIT, SUCCESS, ChaseError, chase_full, chase_standard, fire_order, replay
from chasemith.lang import is_acyclic, satisfies_all
from chasemith.relmodel import Instance, Null, Schema
from gen import SMALL, random_instance, random_tgd
from util import egd, visits_i, migrated_visits, tgd

MIGRATE = tgd("EVisits(facility: x, pId: y, timestp: z) -> LocVisits(facility: x, pId: y, timestp: z)")
RTS = Schema({"R": ["A"], "S": ["A"], "T": ["A"]})


def test_migration_chase():
    assert chase_full(visits_i(), [MIGRATE]) == migrated_visits()


def test_chase_of_a_model_is_unchanged():
    assert chase_full(migrated_visits(), [MIGRATE]) == migrated_visits()


def test_two_step_closure():
    i = Instance(RTS, {"R": [("1",)]})
    j = chase_full(i, [tgd("R(A: x) -> T(A: x)"), tgd("T(A: x) -> S(A: x)")])
    assert j == Instance(RTS, {"R": [("1",)], "S": [("1",)], "T": [("1",)]})


def test_chase_full_rejects_existentials_and_incompatible_tgds():
    with pytest.raises(ChaseError):
        chase_full(visits_i(), [tgd("EVisits(facility: x) -> exists z. LocVisits(facility: z)")])
    with pytest.raises(ChaseError):
        chase_full(visits_i(), [tgd("EVisits(facility: x) -> LocVisits(insId: x)")])


def test_egd_unifies_null_with_constant():
    s = Schema({"Patients": ["insId", "pId"], "LocVisits": ["insId", "pId"]})
    i = Instance(s, {"Patients": [("INS1", "33")], "LocVisits": [(Null(1), "33")]})
    e = egd("Patients(pId: p, insId: a), LocVisits(pId: p, insId: b) -> a = b")
    r = chase_standard(i, [e])
    assert r.status == SUCCESS
    assert r.instance.rows("LocVisits") == {("INS1", "33")}


def test_egd_constant_clash_fails():
    s = Schema({"Patients": ["insId", "pId"], "LocVisits": ["insId", "pId"]})
    i = Instance(s, {"Patients": [("INS1", "33")], "LocVisits": [("INS2", "33")]})
    e = egd("Patients(pId: p, insId: a), LocVisits(pId: p, insId: b) -> a = b")
    assert chase_standard(i, [e]).status == EGD_FAILURE


def test_existential_gets_a_fresh_null():
    s = Schema({"R": ["A"], "T": ["A", "B"]})
    r = chase_standard(Instance(s, {"R": [("1",)]}), [tgd("R(A: x) -> exists z. T(A: x, B: z)")])
    assert r.ok
    assert r.instance.rows("T") == {("1", Null(1))}


def test_restricted_chase_skips_satisfied_triggers():
    s = Schema({"R": ["A"], "T": ["A", "B"]})
    i = Instance(s, {"R": [("1",)], "T": [("1", "9")]})
    r = chase_standard(i, [tgd("R(A: x) -> exists z. T(A: x, B: z)")])
    assert r.steps == [] and r.instance == i


def test_step_limit_is_reported():
    s = Schema({"E": ["A", "B"]})
    i = Instance(s, {"E": [("1", "2")]})
    r = chase_standard(i, [tgd("E(A: x, B: y) -> exists z. E(A: y, B: z)")], step_limit=5)
    assert r.status == STEP_LIMIT and len(r.steps) == 5


def test_fire_order_is_by_dependency_then_assignment():
    i = Instance(RTS, {"R": [("2",), ("1",)]})
    order = fire_order([tgd("R(A: x) -> T(A: x)"), tgd("R(A: x) -> S(A: x)")], i)
    assert [(k, asg[0][1]) for k, asg in order] == [(0, "1"), (0, "2"), (1, "1"), (1, "2")]


def _full_acyclic(rng, n):
    while True:
        g = [random_tgd(rng, SMALL, list(SMALL), ("1",)) for _ in range(n)]
        if is_acyclic(g):
            return g


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_chase_full_satisfies_and_is_idempotent(seed):
    rng = random.Random(seed)
    i = random_instance(rng, SMALL, ("1", "2", "3"), max_tuples=8)
    g = _full_acyclic(rng, rng.randint(1, 5))
    j = chase_full(i, g)
    assert satisfies_all(j, g)
    assert i.issubset(j)
    assert chase_full(j, g) == j
    assert chase_full(i, list(reversed(g))) == j


def _models_over(i, g, values):
    """Every superset of ``i`` over ``values`` that satisfies ``g``."""
    missing = [(r, row) for r in i.schema for row in itertools.product(values, repeat=len(i.schema[r]))
               if row not in i.rows(r)]
    for bits in itertools.product([0, 1], repeat=len(missing)):
        extra = {}
        for (r, row), b in zip(missing, bits):
            if b:
                extra.setdefault(r, []).append(row)
        j = i.add(extra)
        if satisfies_all(j, g):
            yield j


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_chase_full_is_contained_in_every_model(seed):
    rng = random.Random(seed)
    i = random_instance(rng, SMALL, ("1", "2"), max_tuples=4)
    g = _full_acyclic(rng, rng.randint(1, 3))
    j = chase_full(i, g)
    models = list(_models_over(i, g, ("1", "2")))
    assert j in models
    assert all(j.issubset(m) for m in models)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_standard_chase_replays(seed):
    rng = random.Random(seed)
    s = Schema({"R": ["A"], "E": ["A", "B"]})
    i = random_instance(rng, s, ("1", "2"), max_tuples=4)
    deps = [tgd("R(A: x) -> exists z. E(A: x, B: z)"), egd("E(A: x, B: y), E(A: x, B: w) -> y = w")]
    deps = deps[: rng.randint(1, 2)]
    r = chase_standard(i, deps)
    if r.ok:
        assert satisfies_all(r.instance, deps)
    assert replay(i, deps, r.steps) == r.instance
    assert chase_standard(i, deps).instance == r.instance
