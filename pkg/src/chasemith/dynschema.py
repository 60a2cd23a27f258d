"""Schema reasoning under the dynamic semantics: the least schema every outcome
must extend, and applicability of sequences whose preconditions are structural."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from .errors import Unsupported
from .lang import (
    ConjunctiveQuery,
    Egd,
    StructureConstraint,
    Tgd,
    TotalQuery,
    compatible,
    satisfies_structure,
)
from .procedures import scope_complement_query
from .relmodel import Schema, sort_attrs


@dataclass(frozen=True)
class MinimalSchemaResult:
    schema: Optional[Schema]
    labels: Dict[str, int] = field(default_factory=dict)
    reason: str = ""
    # relations whose attribute count outgrew their label
    over: tuple = ()

    @property
    def ok(self) -> bool:
        return self.schema is not None


def _fail(reason, labels=None, over=()):
    return MinimalSchemaResult(None, dict(labels or {}), reason, tuple(over))


def minimal_schema(p, s: Schema, ignore_labels=()) -> MinimalSchemaResult:
    """Least schema that the schema of every dynamic outcome of ``p`` over ``s`` extends.

    ``ignore_labels`` names relations whose arity pin is not enforced (used when the
    pinned relation is known to be empty, so preserving it constrains nothing)."""
    # step 1: structural preconditions and compatibility
    for c in p.pre:
        if isinstance(c, StructureConstraint) and not satisfies_structure(s, c):
            return _fail(f"schema does not satisfy precondition {c}")
    for q in p.preserve:
        if not compatible(q, s):
            return _fail(f"preservation query {q} is not compatible with the schema")
    try:
        scope_complement_query(s, p.scope)
    except ValueError as e:
        return _fail(str(e))

    sch: Dict[str, set] = {}
    labels: Dict[str, int] = {}
    # step 3: total preservation queries pin arity
    for q in p.preserve:
        if isinstance(q, TotalQuery):
            if not s[q.rel]:
                return _fail(f"total query on relation {q.rel}, which has no attributes yet")
            sch[q.rel] = set(s[q.rel])
            labels[q.rel] = len(s[q.rel])
    # step 4: relations required by R[*] postconditions
    for c in p.post:
        if isinstance(c, StructureConstraint) and c.wildcard:
            sch.setdefault(c.rel, set())
    # step 5: required (relation, attributes) pairs
    pairs = []
    scoped = {c.rel for c in p.scope}
    for rel in s:
        if rel not in scoped:
            pairs.append((rel, set(s[rel])))
    for c in p.scope:
        if not c.wildcard:
            pairs.append((c.rel, set(s[c.rel]) - set(c.attrs)))
    for q in p.preserve:
        if isinstance(q, ConjunctiveQuery):
            pairs.extend((a.rel, set(a.attrs)) for a in q.atoms)
    for d in p.post:
        if isinstance(d, Tgd):
            pairs.extend((a.rel, set(a.attrs)) for a in d.body + d.head)
        elif isinstance(d, Egd):
            pairs.extend((a.rel, set(a.attrs)) for a in d.body)
        elif isinstance(d, StructureConstraint) and not d.wildcard:
            pairs.append((d.rel, set(d.attrs)))
    # step 6: union
    for rel, attrs in pairs:
        sch.setdefault(rel, set()).update(attrs)
    # step 7: labels
    over = sorted(r for r, n in labels.items() if len(sch[r]) > n and r not in ignore_labels)
    if over:
        return _fail(f"relation(s) {', '.join(over)} must gain attributes but are preserved as a whole", labels, over)
    return MinimalSchemaResult(Schema({r: sort_attrs(a) for r, a in sch.items()}), labels)


@dataclass(frozen=True)
class FoldStep:
    procedure: str
    result: MinimalSchemaResult


def _check_structural(ps):
    for p in ps:
        for d in p.pre:
            if not isinstance(d, StructureConstraint):
                raise Unsupported(f"procedure {p.name} has a data precondition")


def applicability_trace(ps, s: Schema) -> list:
    """Fold of minimal_schema; stops at the first failure."""
    _check_structural(ps)
    out = []
    cur = s
    for p in ps:
        r = minimal_schema(p, cur)
        out.append(FoldStep(p.name, r))
        if not r.ok:
            break
        cur = r.schema
    return out


def applicability_dyn(ps, s: Schema) -> bool:
    trace = applicability_trace(ps, s)
    return all(step.result.ok for step in trace)


def dyn_nonempty(i, ps) -> bool:
    from .condtab import EmptyOutcome, outcomes_condtab

    return not isinstance(outcomes_condtab(i, ps), EmptyOutcome)
