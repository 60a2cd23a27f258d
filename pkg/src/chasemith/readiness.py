"""Bounded search for a procedure sequence after which every outcome satisfies a goal."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .chase import chase_full
from .condtab import ConditionalInstance, EmptyOutcome, ground, outcomes_condtab
from .entail import check_tgd_general, skb_satisfies
from .errors import Unsupported
from .lang import ConjunctiveQuery, Egd, Tgd, compatible, eval_cq, has_homomorphism, satisfies_dependency
from .procedures import DYNAMIC, STATIC, classify, is_full_scope
from .relmodel import fresh_constants
from .skb import ScopedKnowledgeBase, apply_procedure, minimal_instance, outcomes_skb


@dataclass(frozen=True)
class Witness:
    sequence: Tuple[str, ...]


@dataclass(frozen=True)
class NoWithinBound:
    bound: Optional[int]
    note: str = ""


@dataclass(frozen=True)
class UnsupportedGoal:
    reason: str


@dataclass
class ReadinessAnswer:
    outcome: object
    stats: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        if isinstance(self.outcome, Witness):
            return "witness"
        if isinstance(self.outcome, NoWithinBound):
            return "no_within_bound"
        return "unsupported"


class WitnessCheckError(AssertionError):
    pass


class BoundTooSmall(ValueError):
    def __init__(self, log2_bound, max_len):
        super().__init__(f"max_len {max_len} is below the sequence-length bound 2^{log2_bound:.1f}")
        self.log2_bound = log2_bound
        self.max_len = max_len


# -- generic level-by-level search -----------------------------------------------------

def _search(root, catalog, step, key, check, max_len, threads=1):
    """Breadth-first over sequences; ``step(node, p)`` returns a child node or None.
    The first satisfying node in (length, catalog order) order wins."""
    stats = {"nodes": 0, "dedup": 0, "levels": 0, "skipped": 0}
    seen = {key(root)}
    level = [((), root)]
    notes = []
    for depth in range(max_len + 1):
        stats["levels"] = depth
        for seq, node in level:
            stats["nodes"] += 1
            if check(node):
                return Witness(tuple(p.name for p in seq)), stats, notes
        if depth == max_len:
            break
        jobs = [(seq, node, p) for seq, node in level for p in catalog]

        def run(job):
            seq, node, p = job
            try:
                return step(node, p), None
            except Unsupported as e:
                return None, str(e)

        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(run, jobs))
        else:
            results = [run(j) for j in jobs]
        nxt = []
        for (seq, node, p), (child, err) in zip(jobs, results):
            if err is not None:
                stats["skipped"] += 1
                notes.append(f"{' '.join(q.name for q in seq + (p,))}: {err}")
                continue
            if child is None:
                continue
            k = key(child)
            if k in seen:
                stats["dedup"] += 1
                continue
            seen.add(k)
            nxt.append((seq + (p,), child))
        level = nxt
        if not level:
            break
    return None, stats, notes


def _finish(found, stats, notes, max_len, verify):
    if found is not None:
        verify(found)
        stats["verified"] = True
        return ReadinessAnswer(found, stats)
    if notes:
        return ReadinessAnswer(UnsupportedGoal("some sequences could not be analysed: " + "; ".join(notes[:3])), stats)
    return ReadinessAnswer(NoWithinBound(max_len), stats)


def _by_name(catalog):
    return {p.name: p for p in catalog}


def _require_full_safe(catalog):
    for p in catalog:
        c = classify(p)
        if not c.safe_scope:
            raise Unsupported(f"procedure {p.name} is not safe-scope")
        if not all(t.is_full for t in p.tgds):
            raise Unsupported(f"procedure {p.name} has existential tgds")


def _static_step(schema, p, go):
    """Static outcomes are empty when a postcondition does not fit the schema."""
    if not all(compatible(t, schema) for t in p.tgds):
        return None
    for t in p.tgds:
        for a in t.head:
            if set(a.attrs) != set(schema[a.rel]):
                raise Unsupported(f"procedure {p.name}: conclusion {a} leaves attributes unspecified")
    return go()


# -- constraint goals ------------------------------------------------------------------------

def constraint_ready(i, catalog, goal, max_len: int, threads: int = 1) -> ReadinessAnswer:
    catalog = list(catalog)
    try:
        _require_full_safe(catalog)
    except Unsupported as e:
        return ReadinessAnswer(UnsupportedGoal(str(e)))
    if isinstance(goal, Egd):
        if satisfies_dependency(i, goal):
            return ReadinessAnswer(Witness(()), {"nodes": 1, "dedup": 0, "levels": 0})
        return ReadinessAnswer(NoWithinBound(None, "the instance violates the egd and no safe-scope procedure can repair it"),
                               {"nodes": 1, "dedup": 0, "levels": 0})
    root = ScopedKnowledgeBase(i, (), frozenset())

    def check(k):
        if not compatible(goal, k.base.schema):
            return False
        return skb_satisfies(k, goal).holds

    def verify(w):
        k = outcomes_skb(i, [_by_name(catalog)[n] for n in w.sequence])
        if not check_tgd_general(k, goal).holds:
            raise WitnessCheckError(f"witness {w.sequence} failed re-verification")

    def step(k, p):
        return _static_step(k.base.schema, p, lambda: apply_procedure(k, p))

    found, stats, notes = _search(root, catalog, step, ScopedKnowledgeBase.key, check, max_len, threads)
    return _finish(found, stats, notes, max_len, verify)


# -- query goals, static -----------------------------------------------------------------------

def query_ready(i, catalog, goal: ConjunctiveQuery, max_len: int, threads: int = 1) -> ReadinessAnswer:
    catalog = list(catalog)
    try:
        _require_full_safe(catalog)
    except Unsupported as e:
        return ReadinessAnswer(UnsupportedGoal(str(e)))

    def check(j):
        return compatible(goal, j.schema) and has_homomorphism(goal.atoms, j)

    def step(j, p):
        return _static_step(j.schema, p, lambda: chase_full(j, p.tgds))

    def verify(w):
        k = outcomes_skb(i, [_by_name(catalog)[n] for n in w.sequence])
        j = minimal_instance(k)
        if not (compatible(goal, j.schema) and eval_cq(goal, j)):
            raise WitnessCheckError(f"witness {w.sequence} failed re-verification")

    found, stats, notes = _search(i, catalog, step, lambda j: j.canonical(), check, max_len, threads)
    return _finish(found, stats, notes, max_len, verify)


# -- query goals, dynamic ----------------------------------------------------------------------

def _fresh_ground(t: ConditionalInstance):
    nulls = sorted(t.nulls())
    vals = fresh_constants(t.constants(), len(nulls), prefix="_w")
    return ground(t, dict(zip(nulls, vals)))


def query_ready_dyn(i, catalog, goal: ConjunctiveQuery, max_len: int, threads: int = 1) -> ReadinessAnswer:
    catalog = list(catalog)
    for p in catalog:
        c = classify(p)
        if not (c.safe_scope or c.safe_alteration or is_full_scope(p)):
            return ReadinessAnswer(UnsupportedGoal(f"procedure {p.name} is neither safe-scope nor a safe schema-alteration"))
        if not all(t.is_full for t in p.tgds):
            return ReadinessAnswer(UnsupportedGoal(f"procedure {p.name} has existential tgds"))
    root = ConditionalInstance.from_instance(i)

    def check(t):
        return compatible(goal, t.schema) and has_homomorphism(goal.atoms, t.naive())

    def step(t, p):
        res = outcomes_condtab(t, [p])
        return None if isinstance(res, EmptyOutcome) else res

    def verify(w):
        res = outcomes_condtab(i, [_by_name(catalog)[n] for n in w.sequence])
        if isinstance(res, EmptyOutcome):
            raise WitnessCheckError(f"witness {w.sequence} has no outcomes")
        j = _fresh_ground(res)
        if not (compatible(goal, j.schema) and eval_cq(goal, j)):
            raise WitnessCheckError(f"witness {w.sequence} failed re-verification")

    found, stats, notes = _search(root, catalog, step, ConditionalInstance.canonical, check, max_len, threads)
    return _finish(found, stats, notes, max_len, verify)


# -- dispatch and bounds -----------------------------------------------------------------------

def _goal_size(goal) -> int:
    if isinstance(goal, ConjunctiveQuery):
        atoms = goal.atoms
    elif isinstance(goal, Tgd):
        atoms = goal.body + goal.head
    else:
        atoms = goal.body
    return sum(len(a.bindings) for a in atoms)


def log2_sequence_bound(i, catalog, goal, semantics=STATIC) -> float:
    """log2 of the length beyond which searching cannot reveal new witnesses."""
    catalog = list(catalog)
    consts = set(i.active_domain())
    for p in catalog:
        for t in p.tgds:
            for a in t.body + t.head:
                consts.update(x for x in a.terms if isinstance(x, str))
    d = max(len(consts), 2)
    s = i.schema.size()
    n = max(len(catalog), 1)
    if semantics == DYNAMIC:
        # nulls from alterations: up to d^(s*|catalog|) new elements
        elems = math.log2(d) * s * n
        total = max(elems, math.log2(d)) + 1
        return total * s
    if isinstance(goal, ConjunctiveQuery):
        return s * math.log2(d)
    q = _goal_size(goal)
    return s * math.log2(d) + math.log2(n) + (d + q) ** s


def ready(i, catalog, goal, max_len: int, semantics: str = STATIC, threads: int = 1,
          prove_bound: bool = False) -> ReadinessAnswer:
    if prove_bound:
        lb = log2_sequence_bound(i, catalog, goal, semantics)
        if max_len <= 0 or math.log2(max_len) < lb:
            raise BoundTooSmall(lb, max_len)
    if isinstance(goal, ConjunctiveQuery):
        if goal.free:
            return ReadinessAnswer(UnsupportedGoal("goal queries must be boolean"))
        if semantics == DYNAMIC:
            ans = query_ready_dyn(i, catalog, goal, max_len, threads)
        else:
            ans = query_ready(i, catalog, goal, max_len, threads)
    else:
        if semantics == DYNAMIC:
            if any(classify(p).safe_alteration and not classify(p).safe_scope for p in catalog):
                return ReadinessAnswer(UnsupportedGoal("constraint goals under schema alterations are not supported"))
        ans = constraint_ready(i, catalog, goal, max_len, threads)
    if prove_bound and isinstance(ans.outcome, NoWithinBound):
        ans.outcome = NoWithinBound(ans.outcome.bound, "max_len reaches the sequence-length bound: no sequence readies the data")
    return ans
