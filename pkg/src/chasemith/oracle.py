"""Brute-force ground truth over bounded universes.

Candidates are generated exhaustively (with only exact, semantics-preserving
pruning) and filtered through the direct outcome checker.  Everything here is
bounded: a ``True`` answer is a statement about the universe enumerated, never
about all instances.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Tuple

from .chase import budget
from .errors import ResourceError
from .lang import (
    ConjunctiveQuery,
    Egd,
    StructureConstraint,
    Tgd,
    TotalQuery,
    Var,
    compatible,
    eval_cq,
    satisfies_dependency,
)
from .procedures import PER_RELATION, STATIC, Procedure, is_possible_outcome, scope_complement_query
from .relmodel import Instance, Schema, row_key, sort_attrs

CANDIDATE_BUDGET = 10**6


@dataclass(frozen=True)
class UniverseBound:
    values: Tuple[str, ...]
    max_extra_tuples: int = 1
    max_extra_attrs: int = 0
    max_extra_rels: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(sorted(set(map(str, self.values)))))

    @property
    def attr_pool(self):
        return tuple(f"x{k}" for k in range(1, self.max_extra_attrs + 1))

    @property
    def rel_pool(self):
        return tuple(f"r{k}" for k in range(1, self.max_extra_rels + 1))


@dataclass(frozen=True)
class OracleAnswer:
    value: bool
    vacuous: bool = False
    outcomes: int = 0

    def __bool__(self):
        return self.value


class _Counter:
    def __init__(self):
        self.n = 0
        self.cap = budget(CANDIDATE_BUDGET)

    def tick(self, k=1):
        self.n += k
        if self.n > self.cap:
            raise ResourceError(f"oracle enumeration exceeded {self.cap} candidates", self.n)


def _all_rows(values, arity):
    return [tuple(r) for r in itertools.product(values, repeat=arity)]


def _subsets(pool, lo, hi):
    pool = sorted(pool, key=row_key)
    for n in range(lo, min(hi, len(pool)) + 1):
        yield from itertools.combinations(pool, n)


def _mentions(p: Procedure):
    """Relation -> attributes mentioned anywhere in the procedure."""
    out = {}

    def note_atoms(atoms):
        for a in atoms:
            out.setdefault(a.rel, set()).update(a.attrs)

    for d in list(p.pre) + list(p.post):
        if isinstance(d, Tgd):
            note_atoms(d.body + d.head)
        elif isinstance(d, Egd):
            note_atoms(d.body)
        elif isinstance(d, StructureConstraint):
            out.setdefault(d.rel, set()).update(d.attrs or ())
    for q in p.preserve:
        if isinstance(q, TotalQuery):
            out.setdefault(q.rel, set())
        else:
            note_atoms(q.atoms)
    for c in p.scope:
        out.setdefault(c.rel, set()).update(c.attrs or ())
    return out


def _extra_attrs(schema: Schema, ref: Schema) -> int:
    n = 0
    for rel, attrs in schema.items():
        base = set(ref[rel]) if rel in ref else set()
        n += len(set(attrs) - base)
    return n


def _candidate_schemas(i: Instance, p: Procedure, u: UniverseBound, ref: Instance):
    mentions = _mentions(p)
    wild = {c.rel for c in p.scope if c.wildcard}
    budget_attrs = u.max_extra_attrs - _extra_attrs(i.schema, ref.schema)
    budget_rels = u.max_extra_rels - len([r for r in i.schema if r not in ref.schema])
    per_rel = []
    for rel in i.schema:
        cur = set(i.schema[rel])
        extra = sorted((mentions.get(rel, set()) | set(u.attr_pool)) - cur)
        opts = []
        for n in range(0, max(budget_attrs, 0) + 1):
            for add in itertools.combinations(extra, n):
                opts.append((n, sort_attrs(cur | set(add))))
        if rel in wild:
            opts.append((0, None))
        per_rel.append((rel, opts))
    new_names = sorted((set(mentions) | set(u.rel_pool)) - set(i.schema))
    seen = set()
    for combo in itertools.product(*(opts for _, opts in per_rel)):
        used = sum(n for n, _ in combo)
        if used > budget_attrs:
            continue
        rels = {rel: attrs for (rel, _), (_, attrs) in zip(per_rel, combo) if attrs is not None}
        left = budget_attrs - used
        for k in range(0, max(budget_rels, 0) + 1):
            for names in itertools.combinations(new_names, k):
                for extra in _new_relation_attrs(names, mentions, u, left):
                    d = dict(rels)
                    d.update(extra)
                    s = Schema(d)
                    if s not in seen:
                        seen.add(s)
                        yield s


def _new_relation_attrs(names, mentions, u, left):
    if not names:
        yield {}
        return
    first, rest = names[0], names[1:]
    pool = sorted(mentions.get(first, set()) | set(u.attr_pool))
    for n in range(1, left + 1):
        for attrs in itertools.combinations(pool, n):
            for tail in _new_relation_attrs(rest, mentions, u, left - n):
                d = {first: attrs}
                d.update(tail)
                yield d


def _lower_bounds(i: Instance, p: Procedure, schema: Schema):
    """Tuples that every outcome must keep, read off preservation queries that
    copy a whole relation."""
    low = {}
    for q in p.preserve:
        if isinstance(q, TotalQuery):
            rel = q.rel
        elif len(q.atoms) == 1 and q.atoms[0].rel in i.schema:
            atom = q.atoms[0]
            terms = atom.terms
            if not all(isinstance(t, Var) for t in terms) or len(set(terms)) != len(terms):
                continue
            if set(q.free) != set(terms) or set(atom.attrs) != set(i.schema[atom.rel]):
                continue
            rel = atom.rel
        else:
            continue
        if rel in i.schema and rel in schema and schema[rel] == i.schema[rel]:
            low[rel] = set(i.rows(rel))
    return low


def _pins(i: Instance, p: Procedure):
    """Per-relation projections that must be kept exactly (relation -> attrs)."""
    try:
        q = scope_complement_query(i.schema, p.scope)
    except ValueError:
        return None
    return {a.rel: a.attrs for a in q.atoms}


def _relation_candidates(rel, attrs, i, u, low, pins, hi, counter):
    pool_rows = _all_rows(u.values, len(attrs))
    if rel in pins and rel in i.schema:
        keep = pins[rel]
        if tuple(attrs) == tuple(i.schema[rel]) and set(keep) == set(attrs):
            rows = i.rows(rel)
            if len(rows) <= hi:
                yield tuple(sorted(rows, key=row_key))
            return
        pos = [attrs.index(a) for a in keep]
        ipos = [i.schema[rel].index(a) for a in keep]
        target = {tuple(r[k] for k in ipos) for r in i.rows(rel)}
        if not all(v in u.values for row in target for v in row):
            return
        pool_rows = [r for r in pool_rows if tuple(r[k] for k in pos) in target]
        for sub in _subsets(pool_rows, len(target), hi):
            counter.tick()
            if {tuple(r[k] for k in pos) for r in sub} == target:
                yield sub
        return
    lower = low.get(rel, set())
    if lower:
        if len(lower) > hi:
            return
        rest = [r for r in pool_rows if r not in lower]
        base = tuple(sorted(lower, key=row_key))
        for sub in _subsets(rest, 0, hi - len(lower)):
            counter.tick()
            yield tuple(sorted(base + sub, key=row_key))
        return
    for sub in _subsets(pool_rows, 0, hi):
        counter.tick()
        yield sub


def _instances_over(schema: Schema, i, p, u, cap, pin, counter):
    low = _lower_bounds(i, p, schema)
    pins = _pins(i, p) if pin == PER_RELATION else {}
    if pins is None:
        return
    rels = list(schema)

    def rec(k, left, acc):
        if k == len(rels):
            yield Instance._raw(schema, {r: frozenset(v) for r, v in acc.items()})
            return
        rel = rels[k]
        for rows in _relation_candidates(rel, list(schema[rel]), i, u, low, pins, left, counter):
            acc[rel] = rows
            yield from rec(k + 1, left - len(rows), acc)
        acc.pop(rel, None)

    yield from rec(0, cap, {})


def enumerate_outcomes(i: Instance, p: Procedure, u: UniverseBound, mode: str = STATIC, ref: Instance = None,
                       pin: str = PER_RELATION, counter=None) -> set:
    """All bounded outcomes of ``p`` on ``i``.  Bounds (tuple count, extra attributes and
    relations) are measured against ``ref``, which defaults to ``i``."""
    ref = i if ref is None else ref
    counter = counter or _Counter()
    cap = ref.size() + u.max_extra_tuples
    if not all(v in u.values for v in i.active_domain()):
        raise ValueError("universe must cover the active domain of the input instance")
    if mode == STATIC:
        schemas = [i.schema]
    else:
        schemas = list(_candidate_schemas(i, p, u, ref))
    out = set()
    for s in schemas:
        for j in _instances_over(s, i, p, u, cap, pin, counter):
            if is_possible_outcome(p, i, j, mode, pin):
                out.add(j)
    return out


def enumerate_outcomes_seq(i: Instance, ps, u: UniverseBound, mode: str = STATIC, pin: str = PER_RELATION) -> set:
    counter = _Counter()
    frontier = {i}
    for p in ps:
        nxt = set()
        for k in sorted(frontier, key=lambda x: x.canonical()):
            nxt |= enumerate_outcomes(k, p, u, mode, ref=i, pin=pin, counter=counter)
        frontier = nxt
    return frontier


def _holds(j: Instance, q) -> bool:
    if isinstance(q, ConjunctiveQuery):
        if not compatible(q, j.schema):
            return False
        return bool(eval_cq(q, j))
    return satisfies_dependency(j, q)


def oracle_entails(outcomes, d) -> OracleAnswer:
    outcomes = list(outcomes)
    if not outcomes:
        warnings.warn("empty outcome set: answer is vacuous")
        return OracleAnswer(True, True, 0)
    return OracleAnswer(all(_holds(j, d) for j in outcomes), False, len(outcomes))


def oracle_certain(i: Instance, ps, u: UniverseBound, q, mode: str = STATIC) -> OracleAnswer:
    return oracle_entails(enumerate_outcomes_seq(i, ps, u, mode), q)


def enumerate_rep(k, u: UniverseBound, ref: Instance = None) -> set:
    """Bounded members of rep(k) for a scoped knowledge base (same schema as its base)."""
    from .skb import rep_contains

    ref = k.base if ref is None else ref
    cap = ref.size() + u.max_extra_tuples
    counter = _Counter()
    schema = k.base.schema
    rels = list(schema)
    out = set()

    def rec(n, left, acc):
        if n == len(rels):
            j = Instance._raw(schema, {r: frozenset(v) for r, v in acc.items()})
            if rep_contains(k, j):
                out.add(j)
            return
        rel = rels[n]
        base = k.base.rows(rel)
        if len(base) > left:
            return
        if rel not in k.scope:
            acc[rel] = tuple(base)
            rec(n + 1, left - len(base), acc)
            return
        rest = [r for r in _all_rows(u.values, len(schema[rel])) if r not in base]
        for sub in _subsets(rest, 0, left - len(base)):
            counter.tick()
            acc[rel] = tuple(base) + sub
            rec(n + 1, left - len(base) - len(sub), acc)

    rec(0, cap, {})
    return out


def minimal_elements(instances) -> set:
    """Members not extending any other member."""
    from .relmodel import instance_extends

    items = sorted(instances, key=lambda x: (x.size(), x.canonical()))
    out = []
    for j in items:
        if not any(k != j and instance_extends(j, k) for k in items):
            out.append(j)
    return set(out)
