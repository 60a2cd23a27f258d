"""Scoped knowledge bases: (base instance, tgds, open relations).

rep(K) holds every superset J of the base that satisfies the tgds and agrees
with the base on all relations outside the scope.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import FrozenSet, Tuple

from .chase import STEP_LIMIT, budget, chase_full, chase_standard
from .errors import ResourceError
from .lang import (
    NamedAtom,
    Tgd,
    Var,
    atoms_constants,
    atoms_vars,
    canonical_tgd,
    canonical_tgds,
    classify_tgd_set,
    compatible,
    has_homomorphism,
    rename_apart,
    satisfies_all,
    schema_of_atoms,
    topological_relations,
)
from .procedures import Procedure, classify
from .relmodel import Instance, NullFactory, fresh_constants

GAMMA_CAP = 10**5
PRUNE_LIMIT = 400

# how often resolution needed a merged (non-identity) variable partition
COVERAGE = Counter()


class SkbError(ValueError):
    pass


@dataclass(frozen=True)
class ScopedKnowledgeBase:
    base: Instance
    gamma: Tuple[Tgd, ...] = ()
    scope: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "gamma", canonical_tgds(self.gamma))
        object.__setattr__(self, "scope", frozenset(self.scope))

    @property
    def full(self) -> bool:
        return all(t.is_full for t in self.gamma)

    @property
    def acyclic(self) -> bool:
        return classify_tgd_set(self.gamma).acyclic

    @property
    def safe(self) -> bool:
        return all(a.rel in self.scope for t in self.gamma for a in t.head)

    def flags(self) -> dict:
        f = classify_tgd_set(self.gamma)
        return {"full": f.full, "acyclic": f.acyclic, "weakly_acyclic": f.weakly_acyclic, "safe": self.safe}

    def key(self):
        return (self.base.canonical(), tuple(str(t) for t in self.gamma), tuple(sorted(self.scope)))


def rep_contains(k: ScopedKnowledgeBase, j: Instance) -> bool:
    if j.schema != k.base.schema:
        raise SkbError("instance schema differs from the knowledge base schema")
    if not k.base.issubset(j):
        return False
    for rel in j.schema:
        if rel not in k.scope and j.rows(rel) != k.base.rows(rel):
            return False
    return satisfies_all(j, k.gamma)


def minimal_instance(k: ScopedKnowledgeBase) -> Instance:
    return chase_full(k.base, k.gamma)


# -- RemoveRelations -------------------------------------------------------------

def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for n in range(len(part)):
            yield part[:n] + [[first] + part[n]] + part[n + 1:]


def _unifiers(y_atom: NamedAtom, w_atom: NamedAtom):
    """Pairs (pi, h): pi merges variables of ``w_atom`` (optionally onto constants of
    ``y_atom``) and h maps ``y_atom`` onto pi(w_atom)."""
    for a in y_atom.attrs:
        if a not in w_atom.attrs:
            raise SkbError(f"conclusion atom {w_atom} does not determine attribute {a}")
    wvars = atoms_vars([w_atom])
    consts = sorted(atoms_constants([y_atom]))
    for part in set_partitions(wvars):
        for choice in itertools.product([None] + consts, repeat=len(part)):
            pi = {}
            for block, c in zip(part, choice):
                rep = block[0] if c is None else c
                for v in block:
                    pi[v] = rep
            h = {}
            ok = True
            for attr, yt in y_atom.bindings:
                wt = w_atom.term(attr)
                wt = pi.get(wt, wt) if isinstance(wt, Var) else wt
                if isinstance(yt, Var):
                    if h.setdefault(yt, wt) != wt:
                        ok = False
                        break
                elif yt != wt:
                    ok = False
                    break
            if ok:
                identity = all(len(b) == 1 for b in part) and all(c is None for c in choice)
                yield pi, h, identity


def _resolve(lam: Tgd, idx: int, sigma: Tgd, w_atom: NamedAtom, pi, h) -> Tgd:
    body = [a.substitute(h) for n, a in enumerate(lam.body) if n != idx]
    body += [a.substitute(pi) for a in sigma.body]
    head = [a.substitute(h) for a in lam.head]
    return Tgd(body, head)


def remove_relations(g, scope, base: Instance = None, stats: Counter = None) -> Tuple[Tgd, ...]:
    """Rewrite full acyclic tgds so that no premise mentions a relation of ``scope``.

    Premise atoms over a scoped relation are resolved against every tgd producing
    that relation and, when ``base`` is given, against the tuples the relation
    already holds there.  Resolving against base tuples can leave tgds with an
    empty premise (plain facts).
    """
    g = list(g)
    flags = classify_tgd_set(g)
    if not flags.full or not flags.acyclic:
        raise SkbError("remove_relations needs a full acyclic tgd set")
    stats = COVERAGE if stats is None else stats
    cap = budget(GAMMA_CAP)
    gamma = list(canonical_tgds(g))
    scope = set(scope)
    order = [r for r in topological_relations(gamma) if r in scope]
    for rel in reversed(order):
        omega = [t for t in gamma if rel in t.body_relations()]
        if not omega:
            continue
        rest = [t for t in gamma if rel not in t.body_relations()]
        producers = [rename_apart(t, "s") for t in rest if rel in t.head_relations()]
        if base is not None and rel in base.schema:
            for row in base.sorted_rows(rel):
                producers.append(Tgd((), [NamedAtom(rel, zip(base.schema[rel], row))]))
        pending = [rename_apart(t, "l") for t in omega]
        seen = {str(canonical_tgd(t)) for t in pending}
        finished = []
        merged = set()
        while pending:
            lam = pending.pop(0)
            idx = next((n for n, a in enumerate(lam.body) if a.rel == rel), None)
            if idx is None:
                finished.append(lam)
                continue
            for sigma in producers:
                for w_atom in sigma.head:
                    if w_atom.rel != rel:
                        continue
                    for pi, h, identity in _unifiers(lam.body[idx], w_atom):
                        res = rename_apart(_resolve(lam, idx, sigma, w_atom, pi, h), "l")
                        key = str(canonical_tgd(res))
                        stats["resolvents"] += 1
                        if not identity:
                            stats["non_identity"] += 1
                            merged.add(key)
                        if key in seen:
                            continue
                        seen.add(key)
                        pending.append(res)
                        if len(seen) > cap:
                            raise ResourceError(f"rewriting produced more than {cap} tgds", len(seen))
        gamma = list(canonical_tgds(rest + finished))
        kept = {str(t) for t in gamma}
        stats["non_identity_kept"] += len(merged & kept)
    return canonical_tgds(gamma)


# -- implication-based pruning ---------------------------------------------------

def implies(t1: Tgd, t2: Tgd) -> bool:
    """Sound check that ``t1`` logically implies ``t2``: chase the frozen premise of
    ``t2`` with ``t1`` and look for its conclusion."""
    atoms = t1.body + t1.head + t2.body + t2.head
    schema = schema_of_atoms(atoms)
    bvars = atoms_vars(t2.body)
    consts = fresh_constants(atoms_constants(atoms), len(bvars), prefix="_f")
    freeze = dict(zip(bvars, consts))
    fresh = NullFactory(1)
    rows = {}
    for a in t2.body:
        row = []
        for attr in schema[a.rel]:
            try:
                t = a.term(attr)
                row.append(freeze.get(t, t) if isinstance(t, Var) else t)
            except KeyError:
                row.append(fresh())
        rows.setdefault(a.rel, set()).add(tuple(row))
    inst = Instance(schema, rows)
    res = chase_standard(inst, [t1], step_limit=10000)
    if res.status == STEP_LIMIT:
        return False
    front = {v: freeze[v] for v in t2.frontier}
    head = [a.substitute(front) for a in t2.head]
    return has_homomorphism(head, res.instance)


def prune_implied(tgds) -> Tuple[Tgd, ...]:
    tgds = list(canonical_tgds(tgds))
    if len(tgds) > PRUNE_LIMIT:
        return tuple(tgds)
    tgds.sort(key=lambda t: (len(t.body) + len(t.head), str(t)))
    kept = []
    for t in tgds:
        if any(implies(k, t) for k in kept):
            continue
        kept.append(t)
    # a later, larger tgd may imply an earlier one
    out = [t for n, t in enumerate(kept) if not any(m != n and implies(o, t) and not implies(t, o) for m, o in enumerate(kept))]
    return canonical_tgds(out)


# -- construction ------------------------------------------------------------------

def check_procedure(p: Procedure, schema):
    c = classify(p)
    if not c.safe_scope:
        raise SkbError(f"procedure {p.name} is not safe-scope: {'; '.join(c.reasons)}")
    if not all(t.is_full for t in p.tgds):
        raise SkbError(f"procedure {p.name} has tgds with existential variables")
    for t in p.tgds:
        if not compatible(t, schema):
            raise SkbError(f"procedure {p.name}: tgd {t} is not compatible with the schema")


def apply_procedure(k: ScopedKnowledgeBase, p: Procedure) -> ScopedKnowledgeBase:
    if not k.full:
        raise SkbError("knowledge base is not full")
    if not k.acyclic:
        raise SkbError("knowledge base is not acyclic")
    if not k.safe:
        raise SkbError("knowledge base is not safe")
    check_procedure(p, k.base.schema)
    base = chase_full(k.base, p.tgds)
    rewritten = remove_relations(k.gamma, p.scope_relations, base=k.base)
    facts = [t for t in rewritten if not t.body]
    if facts:
        base = chase_full(base, facts)
    gamma = prune_implied(list(p.tgds) + [t for t in rewritten if t.body])
    if len(gamma) > budget(GAMMA_CAP):
        raise ResourceError(f"knowledge base exceeds {GAMMA_CAP} tgds", len(gamma))
    return ScopedKnowledgeBase(base, gamma, k.scope | set(p.scope_relations))


def outcomes_skb(i: Instance, ps) -> ScopedKnowledgeBase:
    k = ScopedKnowledgeBase(i, (), frozenset())
    for p in ps:
        k = apply_procedure(k, p)
    return k
