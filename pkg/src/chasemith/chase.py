"""Chase engines: the ground chase for full tgds and a restricted chase with
labeled nulls for tgd/egd sets."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Tuple

from .lang import StructureConstraint, Tgd, Var, classify_tgd_set, compatible, has_homomorphism, homomorphisms
from .relmodel import Instance, Null, NullFactory, value_key

SUCCESS = "success"
EGD_FAILURE = "egd_failure"
STEP_LIMIT = "step_limit_exceeded"

DEFAULT_STEP_LIMIT = 10**6


def budget(default: int) -> int:
    """Resource caps can be overridden with CHASEMITH_BUDGET."""
    env = os.environ.get("CHASEMITH_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return default


class ChaseError(ValueError):
    pass


@dataclass
class ChaseResult:
    instance: Instance
    steps: List[Tuple[int, tuple]] = field(default_factory=list)
    status: str = SUCCESS

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


def _check_heads(t: Tgd, schema):
    for a in t.head:
        if set(a.attrs) != set(schema[a.rel]):
            missing = sorted(set(schema[a.rel]) - set(a.attrs))
            raise ChaseError(f"conclusion atom {a} leaves attributes {missing} unspecified; not full over this schema")


def head_row(atom, asg, schema, fresh=None):
    row = []
    for attr in schema[atom.rel]:
        try:
            t = atom.term(attr)
        except KeyError:
            if fresh is None:
                raise ChaseError(f"atom {atom} has no value for {attr}")
            row.append(fresh())
            continue
        if isinstance(t, Var):
            if t not in asg:
                if fresh is None:
                    raise ChaseError(f"unbound variable {t}")
                asg[t] = fresh()
            row.append(asg[t])
        else:
            row.append(t)
    return tuple(row)


def chase_full(i: Instance, tgds) -> Instance:
    """Least superset of ``i`` satisfying the full tgds (no nulls created)."""
    tgds = list(tgds)
    if not classify_tgd_set(tgds).full:
        raise ChaseError("chase_full needs full tgds")
    for t in tgds:
        if not compatible(t, i.schema):
            raise ChaseError(f"tgd {t} is not compatible with the schema")
        _check_heads(t, i.schema)
    rows = {r: set(v) for r, v in i.items()}
    changed = True
    while changed:
        changed = False
        cur = Instance._raw(i.schema, {r: frozenset(v) for r, v in rows.items()})
        for t in tgds:
            for h in homomorphisms(t.body, cur):
                for a in t.head:
                    row = head_row(a, h, i.schema)
                    if row not in rows[a.rel]:
                        rows[a.rel].add(row)
                        changed = True
    return Instance._raw(i.schema, {r: frozenset(v) for r, v in rows.items()})


def _asg_key(h):
    return tuple((v.name, value_key(h[v])) for v in sorted(h, key=lambda x: x.name))


def _active(d, h, inst):
    if isinstance(d, Tgd):
        front = {v: h[v] for v in d.frontier}
        return not has_homomorphism(d.head, inst, front)
    return h[d.lhs] != h[d.rhs]


def fire_order(deps, inst: Instance) -> list:
    """Currently active triggers, ordered by dependency index then assignment."""
    out = []
    for k, d in enumerate(deps):
        if isinstance(d, StructureConstraint):
            continue
        hs = sorted(homomorphisms(d.body, inst), key=_asg_key)
        for h in hs:
            if _active(d, h, inst):
                out.append((k, _asg_key_plain(h)))
    return out


def _asg_key_plain(h):
    return tuple((v, h[v]) for v in sorted(h, key=lambda x: x.name))


def _substitute(rows, old, new):
    out = {}
    for r, rs in rows.items():
        if any(old in row for row in rs):
            rs = {tuple(new if v == old else v for v in row) for row in rs}
        out[r] = rs
    return out


def chase_standard(i: Instance, deps, step_limit: int = None) -> ChaseResult:
    """Restricted chase.  Existential positions and unspecified attributes get fresh nulls;
    egds merge a null into the other value and fail on two distinct constants."""
    deps = [d for d in deps if not isinstance(d, StructureConstraint)]
    limit = budget(DEFAULT_STEP_LIMIT) if step_limit is None else step_limit
    for d in deps:
        if not compatible(d, i.schema):
            raise ChaseError(f"dependency {d} is not compatible with the schema")
    fresh = NullFactory.above(i.active_domain())
    rows = {r: set(v) for r, v in i.items()}
    steps = []

    def snapshot():
        return Instance._raw(i.schema, {r: frozenset(v) for r, v in rows.items()})

    while True:
        fired = False
        restart = False
        for k, d in enumerate(deps):
            cur = snapshot()
            triggers = sorted(homomorphisms(d.body, cur), key=_asg_key)
            for h in triggers:
                if isinstance(d, Tgd):
                    cur = snapshot()
                    if not _active(d, h, cur):
                        continue
                    if len(steps) >= limit:
                        return ChaseResult(snapshot(), steps, STEP_LIMIT)
                    steps.append((k, _asg_key_plain(h)))
                    asg = dict(h)
                    for a in d.head:
                        rows[a.rel].add(head_row(a, asg, i.schema, fresh))
                    fired = True
                else:
                    a, b = h[d.lhs], h[d.rhs]
                    if a == b:
                        continue
                    if len(steps) >= limit:
                        return ChaseResult(snapshot(), steps, STEP_LIMIT)
                    steps.append((k, _asg_key_plain(h)))
                    if not isinstance(a, Null) and not isinstance(b, Null):
                        return ChaseResult(snapshot(), steps, EGD_FAILURE)
                    old, new = _merge_pair(a, b)
                    rows = _substitute(rows, old, new)
                    fired = True
                    restart = True
                    break
            if restart:
                break
        if not fired:
            return ChaseResult(snapshot(), steps, SUCCESS)


def _merge_pair(a, b):
    if isinstance(a, Null) and isinstance(b, Null):
        return (a, b) if a.id > b.id else (b, a)
    if isinstance(a, Null):
        return a, b
    return b, a


def replay(i: Instance, deps, steps) -> Instance:
    """Re-apply recorded chase steps to ``i``."""
    deps = [d for d in deps if not isinstance(d, StructureConstraint)]
    fresh = NullFactory.above(i.active_domain())
    rows = {r: set(v) for r, v in i.items()}
    for k, asg in steps:
        d = deps[k]
        h = dict(asg)
        if isinstance(d, Tgd):
            for a in d.head:
                rows[a.rel].add(head_row(a, h, i.schema, fresh))
        else:
            a, b = h[d.lhs], h[d.rhs]
            if isinstance(a, Null) or isinstance(b, Null):
                old, new = _merge_pair(a, b)
                rows = _substitute(rows, old, new)
    return Instance._raw(i.schema, {r: frozenset(v) for r, v in rows.items()})
