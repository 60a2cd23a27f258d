"""Procedures described by scope, pre/postconditions and preservation queries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

from .errors import Unsupported
from .lang import (
    ConjunctiveQuery,
    Egd,
    IncompatibleError,
    NamedAtom,
    StructureConstraint,
    Tgd,
    TotalQuery,
    Var,
    compatible,
    evaluate,
    is_acyclic,
    satisfies_all,
)
from .relmodel import Instance, Schema

STATIC = "static"
DYNAMIC = "dynamic"

CONJOINED = "conjoined"
PER_RELATION = "per_relation"


@dataclass(frozen=True)
class Procedure:
    name: str
    scope: Tuple[StructureConstraint, ...] = ()
    pre: tuple = ()
    post: tuple = ()
    preserve: tuple = ()

    def __post_init__(self):
        for f in ("scope", "pre", "post", "preserve"):
            object.__setattr__(self, f, tuple(getattr(self, f)))

    @property
    def tgds(self):
        return [d for d in self.post if isinstance(d, Tgd)]

    @property
    def egds(self):
        return [d for d in self.post if isinstance(d, Egd)]

    @property
    def scope_relations(self):
        return sorted({c.rel for c in self.scope})

    def classify(self) -> "ProcedureClass":
        return classify(self)


@dataclass(frozen=True)
class ProcedureClass:
    safe_scope: bool
    safe_alteration: bool
    # post carries structure constraints, so applying it may have to change the schema
    forces_alteration: bool
    reasons: Tuple[str, ...] = field(default=(), compare=False)


def safe_scope_violations(p: Procedure, allow_cyclic_full: bool = False) -> list:
    """``allow_cyclic_full`` admits cyclic postconditions made of full tgds; their
    chase still terminates, which is all the conditional chase needs."""
    out = []
    if p.pre:
        out.append("precondition is not empty")
    if not all(isinstance(d, Tgd) for d in p.post):
        out.append("postcondition is not a set of tgds")
    elif not is_acyclic(p.post) and not (allow_cyclic_full and all(d.is_full for d in p.post)):
        out.append("postcondition tgds are cyclic")
    heads = {a.rel for d in p.post if isinstance(d, Tgd) for a in d.head}
    if set(p.scope) != {StructureConstraint(r) for r in heads}:
        out.append("scope is not exactly R[*] for the conclusion relations")
    totals = [q for q in p.preserve if isinstance(q, TotalQuery)]
    if len(totals) != len(p.preserve) or sorted(q.rel for q in totals) != sorted(heads):
        out.append("preservation is not one total query per scoped relation")
    return out


def safe_alteration_violations(p: Procedure) -> list:
    out = []
    if p.scope:
        out.append("scope is not empty")
    if p.preserve:
        out.append("preservation queries are not empty")
    if not all(isinstance(d, StructureConstraint) for d in p.post):
        out.append("postcondition has data constraints")
    return out


def classify(p: Procedure) -> ProcedureClass:
    a = safe_scope_violations(p)
    b = safe_alteration_violations(p)
    forces = any(isinstance(d, StructureConstraint) for d in p.post)
    return ProcedureClass(not a, not b, forces, tuple(a + b))


def is_full_scope(p: Procedure) -> bool:
    """Safe scope except that a set of full tgds may be cyclic."""
    return not safe_scope_violations(p, allow_cyclic_full=True) and all(t.is_full for t in p.tgds)


def is_full_safe_scope(p: Procedure) -> bool:
    return classify(p).safe_scope and all(t.is_full for t in p.tgds)


def scope_complement_query(s: Schema, c) -> ConjunctiveQuery:
    """The query projecting every relation (or attribute) that the constraints leave untouched."""
    wild = set()
    partial = {}
    for sc in c:
        if sc.rel not in s:
            raise ValueError(f"scope mentions relation {sc.rel} which is not in the schema")
        if sc.wildcard:
            wild.add(sc.rel)
        else:
            partial.setdefault(sc.rel, set()).update(sc.attrs)
    atoms = []
    k = 0
    for rel in s:
        if rel in wild:
            continue
        attrs = [a for a in s[rel] if a not in partial.get(rel, ())]
        if not attrs and rel in partial:
            continue
        binds = []
        for a in attrs:
            k += 1
            binds.append((a, Var(f"z{k}")))
        atoms.append(NamedAtom(rel, binds))
    free = tuple(Var(f"z{n}") for n in range(1, k + 1))
    return ConjunctiveQuery(free, tuple(atoms))


def is_applicable(p: Procedure, i: Instance) -> bool:
    if not all(compatible(q, i.schema) for q in p.preserve):
        return False
    return satisfies_all(i, p.pre)


def _pins_hold(q: ConjunctiveQuery, i: Instance, j: Instance, pin: str) -> bool:
    if not compatible(q, j.schema):
        return False
    if pin == CONJOINED:
        return evaluate(q, i) == evaluate(q, j)
    for atom in q.atoms:
        sub = ConjunctiveQuery(tuple(atom.vars()), (atom,))
        if evaluate(sub, i) != evaluate(sub, j):
            return False
    return True


def is_possible_outcome(p: Procedure, i: Instance, j: Instance, mode: str = STATIC, pin: str = CONJOINED) -> bool:
    """Check the four outcome clauses.  ``pin`` selects how the untouched part is compared:
    as one conjoined query (the literal reading) or relation by relation."""
    if mode == STATIC and j.schema != i.schema:
        return False
    if not is_applicable(p, i):
        return False
    if not satisfies_all(j, p.post):
        return False
    try:
        q = scope_complement_query(i.schema, p.scope)
    except ValueError:
        return False
    if not _pins_hold(q, i, j, pin):
        return False
    for pq in p.preserve:
        if not compatible(pq, j.schema):
            return False
        try:
            if not evaluate(pq, i) <= evaluate(pq, j):
                return False
        except IncompatibleError:
            return False
    return True


def check_applicability_sequence(ps, s: Schema) -> bool:
    """Decide whether the last procedure of ``ps`` can always be applied.

    Raises Unsupported when some precondition carries data constraints."""
    if all(not p.pre for p in ps):
        return True
    if all(isinstance(d, StructureConstraint) for p in ps for d in p.pre):
        from .dynschema import applicability_dyn

        return applicability_dyn(ps, s)
    raise Unsupported("preconditions with tgds or egds make applicability undecidable")
