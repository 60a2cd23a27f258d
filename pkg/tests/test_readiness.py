import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from chasemith.oracle import UniverseBound, oracle_certain
from chasemith.procedures import DYNAMIC
from chasemith.readiness import (
    BoundTooSmall,
    NoWithinBound,
    UnsupportedGoal,
    Witness,
    log2_sequence_bound,
    ready,
)
from chasemith.relmodel import Instance, Schema
from chasemith.skb import minimal_instance, outcomes_skb
from gen import SMALL, random_instance, random_safe_procedure
from util import corpus, egd, visits_i, query, tgd


def _motivating():
    ws = corpus("motivating.wf")
    return ws, [ws.procedure(n) for n in ("alter_insid", "fill", "migrate")]


def test_dynamic_witness_for_the_join_goal():
    ws, cat = _motivating()
    ans = ready(ws.instance, cat, ws.goals["insured"], 3, DYNAMIC)
    assert ans.outcome == Witness(("alter_insid", "fill")) and ans.stats["verified"]
    assert ans.kind == "witness"


def test_alteration_alone_readies_the_column_goal():
    ws, cat = _motivating()
    assert ready(ws.instance, cat, ws.goals["located"], 3, DYNAMIC).outcome == Witness(("alter_insid",))


def test_no_witness_without_the_alteration():
    ws, cat = _motivating()
    ans = ready(ws.instance, cat[1:], ws.goals["insured"], 3, DYNAMIC)
    assert ans.outcome == NoWithinBound(3) and ans.kind == "no_within_bound"


def test_thread_count_does_not_change_the_answer():
    ws, cat = _motivating()
    a = ready(ws.instance, cat, ws.goals["insured"], 3, DYNAMIC, threads=1)
    b = ready(ws.instance, cat, ws.goals["insured"], 3, DYNAMIC, threads=8)
    assert a.outcome == b.outcome and a.stats == b.stats


def test_static_query_readiness():
    ws = corpus("visits.wf")
    cat = [ws.procedure("migrate")]
    assert ready(visits_i(), cat, ws.goals["at2087"], 2).outcome == Witness(("migrate",))
    assert ready(visits_i(), [], ws.goals["at2087"], 2).outcome == NoWithinBound(2)
    # already true: the empty sequence
    assert ready(visits_i(), cat, query("LocVisits(facility: 1222)"), 2).outcome == Witness(())


def test_constraint_readiness():
    ws = corpus("visits.wf")
    ans = ready(visits_i(), [ws.procedure("migrate")], ws.goals["migrated"], 2)
    assert ans.outcome == Witness(("migrate",))
    s = Schema({"R": ["A", "B"]})
    i = Instance(s, {"R": [("1", "2"), ("1", "3")]})
    key = egd("R(A: x, B: y), R(A: x, B: z) -> y = z")
    assert isinstance(ready(i, [], key, 2).outcome, NoWithinBound)
    assert ready(Instance(s, {"R": [("1", "2")]}), [], key, 2).outcome == Witness(())


def test_unsupported_inputs():
    ws, cat = _motivating()
    free = query("(x): LocVisits(facility: x)")
    assert isinstance(ready(ws.instance, cat, free, 2, DYNAMIC).outcome, UnsupportedGoal)
    checked = corpus("visits.wf").procedure("migrate_checked")
    assert isinstance(ready(visits_i(), [checked], query("LocVisits(facility: x)"), 2).outcome, UnsupportedGoal)
    assert isinstance(ready(ws.instance, cat, tgd("EVisits(facility: x) -> LocVisits(facility: x)"), 2, DYNAMIC).outcome,
                      UnsupportedGoal)


def test_prove_bound():
    ws = corpus("visits.wf")
    lb = log2_sequence_bound(visits_i(), [ws.procedure("migrate")], ws.goals["at2087"])
    assert lb > 0
    with pytest.raises(BoundTooSmall):
        ready(visits_i(), [ws.procedure("migrate")], ws.goals["at2087"], 2, prove_bound=True)
    big = 2 ** int(lb + 1)
    ans = ready(visits_i(), [], ws.goals["at2087"], big, prove_bound=True)
    assert isinstance(ans.outcome, NoWithinBound) and "no sequence" in ans.outcome.note


QUERIES = ["T(A: x)", "R(A: 1)", "E(A: x, B: x)", "S(A: x), T(A: x)", "E(A: x, B: y), T(A: y)"]


def _oracle_shortest(i, catalog, q, max_len):
    """Shortest sequence, in catalog order, whose bounded outcomes all satisfy q."""
    for n in range(max_len + 1):
        for seq in itertools.product(catalog, repeat=n):
            least = minimal_instance(outcomes_skb(i, list(seq)))
            u = UniverseBound(("1", "2"), max_extra_tuples=least.size() - i.size() + 1)
            ans = oracle_certain(i, list(seq), u, q)
            assert not ans.vacuous
            if ans.value:
                return tuple(p.name for p in seq)
    return None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_static_witness_is_the_shortest_oracle_sequence(seed):
    rng = random.Random(seed)
    i = random_instance(rng, SMALL, ("1", "2"), max_tuples=3)
    catalog = [random_safe_procedure(rng, f"p{k}", consts=("1",), max_tgds=2) for k in range(2)]
    q = query(rng.choice(QUERIES))
    ans = ready(i, catalog, q, 2)
    expected = _oracle_shortest(i, catalog, q, 2)
    if expected is None:
        assert ans.outcome == NoWithinBound(2)
    else:
        assert ans.outcome == Witness(expected)

