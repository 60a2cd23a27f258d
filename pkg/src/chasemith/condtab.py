"""Positive conditional instances: tuples over constants and nulls, each guarded by
a disjunction of conjunctions of equalities.  Used to approximate outcome sets
under the dynamic semantics and to answer boolean queries over them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Mapping

import networkx as nx

from .errors import Unsupported
from .lang import (
    ConjunctiveQuery,
    Egd,
    StructureConstraint,
    Var,
    compatible,
    eval_cq,
    has_homomorphism,
    is_acyclic,
    relation_graph,
    topological_relations,
)
from .procedures import STATIC, Procedure, classify, is_full_scope, safe_scope_violations
from .relmodel import Instance, Null, NullFactory, Schema, fresh_constants, row_key, sort_attrs, value_key

# conditions in disjunctive normal form: a set of clauses, each a set of equalities
TRUE: FrozenSet = frozenset({frozenset()})
FALSE: FrozenSet = frozenset()


class CondTabError(ValueError):
    pass


@dataclass(frozen=True)
class EmptyOutcome:
    procedure: str
    reason: str

    def __bool__(self):
        return False


def literal(a, b):
    """Equality between a null and a value (or null), oriented null-first."""
    if not isinstance(a, Null) and not isinstance(b, Null):
        raise CondTabError(f"equality {a} = {b} mentions no null")
    x, y = sorted((a, b), key=lambda v: (0, v.id) if isinstance(v, Null) else (1, v))
    return (x, y)


class _UF:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        ca, cb = not isinstance(ra, Null), not isinstance(rb, Null)
        if ca and cb:
            return False
        if ca:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True


def _clause_sat(clause) -> bool:
    uf = _UF()
    return all(uf.union(a, b) for a, b in clause)


def simplify(dnf) -> FrozenSet:
    clauses = set()
    for c in dnf:
        c = frozenset((a, b) for a, b in c if a != b)
        if _clause_sat(c):
            clauses.add(c)
    out = {c for c in clauses if not any(o < c for o in clauses)}
    return frozenset(out)


def conj(d1, d2) -> FrozenSet:
    return simplify(c1 | c2 for c1 in d1 for c2 in d2)


def disj(d1, d2) -> FrozenSet:
    return simplify(set(d1) | set(d2))


def holds(dnf, nu: Mapping) -> bool:
    def val(x):
        return nu[x] if isinstance(x, Null) else x

    return any(all(val(a) == val(b) for a, b in c) for c in dnf)


def format_condition(dnf) -> str:
    if dnf == TRUE:
        return "true"
    if not dnf:
        return "false"
    parts = []
    for c in sorted(dnf, key=_clause_key):
        parts.append(" & ".join(f"{a} = {b}" for a, b in sorted(c, key=_lit_key)))
    return " | ".join(f"({p})" if len(dnf) > 1 else p for p in parts)


def _lit_key(l):
    return (value_key(l[0]), value_key(l[1]))


def _clause_key(c):
    return tuple(sorted(_lit_key(l) for l in c))


def condition_key(dnf):
    return tuple(sorted(_clause_key(c) for c in dnf))


class ConditionalInstance:
    """Schema plus, per relation, a map from tuple to its condition."""

    __slots__ = ("schema", "_rows", "_key")

    def __init__(self, schema: Schema, rows: Mapping[str, Mapping[tuple, FrozenSet]] = None):
        self.schema = schema
        rows = rows or {}
        for rel in rows:
            if rel not in schema:
                raise CondTabError(f"unknown relation {rel}")
        self._rows = {}
        for rel in schema:
            cur = {}
            for row, cond in (rows.get(rel) or {}).items():
                row = tuple(row)
                if len(row) != len(schema[rel]):
                    raise CondTabError(f"tuple {row} has wrong arity for {rel}")
                cond = simplify(cond)
                if not cond:
                    continue
                cur[row] = disj(cur[row], cond) if row in cur else cond
            self._rows[rel] = cur
        self._key = None

    @classmethod
    def from_instance(cls, i: Instance) -> "ConditionalInstance":
        return cls(i.schema, {r: {row: TRUE for row in rows} for r, rows in i.items()})

    @property
    def positive(self) -> bool:
        return True

    def rows(self, rel) -> Dict[tuple, FrozenSet]:
        return self._rows[rel]

    def sorted_rows(self, rel):
        return sorted(self._rows[rel].items(), key=lambda kv: (row_key(kv[0]), condition_key(kv[1])))

    def items(self):
        return self._rows.items()

    def size(self) -> int:
        return sum(len(v) for v in self._rows.values())

    def nulls(self) -> set:
        out = set()
        for rows in self._rows.values():
            for row, cond in rows.items():
                out.update(v for v in row if isinstance(v, Null))
                for c in cond:
                    for a, b in c:
                        out.update(x for x in (a, b) if isinstance(x, Null))
        return out

    def constants(self) -> set:
        out = set()
        for rows in self._rows.values():
            for row, cond in rows.items():
                out.update(v for v in row if not isinstance(v, Null))
                for c in cond:
                    for a, b in c:
                        out.update(x for x in (a, b) if not isinstance(x, Null))
        return out

    def naive(self) -> Instance:
        """Only the unconditioned tuples, with nulls kept as values."""
        return Instance._raw(self.schema, {r: frozenset(row for row, c in rows.items() if c == TRUE)
                                           for r, rows in self._rows.items()})

    def is_ground(self) -> bool:
        return not self.nulls() and all(c == TRUE for rows in self._rows.values() for c in rows.values())

    def to_instance(self) -> Instance:
        if not self.is_ground():
            raise CondTabError("conditional instance carries nulls or conditions")
        return self.naive()

    def canonical(self):
        """Null-renaming invariant form: nulls renumbered by first appearance."""
        if self._key is None:
            self._key = _canonical(self)
        return self._key

    def __eq__(self, other):
        return isinstance(other, ConditionalInstance) and self.schema == other.schema and self._rows == other._rows

    def __hash__(self):
        return hash((self.schema, tuple((r, frozenset(v.items())) for r, v in self._rows.items())))

    def __repr__(self):
        parts = []
        for rel in self.schema:
            rs = ", ".join(
                "(" + ", ".join(map(str, row)) + ")" + ("" if c == TRUE else f" if {format_condition(c)}")
                for row, c in self.sorted_rows(rel))
            parts.append(f"{rel}={{{rs}}}")
        return "ConditionalInstance(" + "; ".join(parts) + ")"


def _shape(v):
    return (1, 0) if isinstance(v, Null) else (0, v)


def _canonical(t: ConditionalInstance):
    entries = []
    for rel in t.schema:
        for row, cond in t.rows(rel).items():
            shape = (rel, tuple(_shape(v) for v in row),
                     tuple(sorted(tuple(sorted((_shape(a), _shape(b)) for a, b in c)) for c in cond)))
            entries.append((shape, row, cond))
    entries.sort(key=lambda e: (e[0], row_key(e[1]), condition_key(e[2])))
    names = {}

    def ren(v):
        if isinstance(v, Null):
            if v not in names:
                names[v] = len(names) + 1
            return ("n", names[v])
        return ("c", v)

    out = []
    for shape, row, cond in entries:
        r = tuple(ren(v) for v in row)
        cs = tuple(sorted(tuple(sorted((ren(a), ren(b)) for a, b in c)) for c in sorted(cond, key=_clause_key)))
        out.append((shape[0], r, cs))
    return (tuple(t.schema.items()), tuple(sorted(out)))


# -- substitutions and rep ------------------------------------------------------------

def ground(t: ConditionalInstance, nu: Mapping) -> Instance:
    """nu(T): substitute nulls and keep the tuples whose condition holds."""
    rows = {}
    for rel, rs in t.items():
        rows[rel] = frozenset(tuple(nu[v] if isinstance(v, Null) else v for v in row)
                              for row, c in rs.items() if holds(c, nu))
    return Instance._raw(t.schema, rows)


def cond_rep_contains(t: ConditionalInstance, j: Instance) -> bool:
    """Is there a substitution nu with j extending nu(t)?"""
    from .relmodel import schema_extends

    if not schema_extends(j.schema, t.schema):
        return False
    proj = {}
    for rel in t.schema:
        idx = j.schema.index(rel)
        pos = [idx[a] for a in t.schema[rel]]
        proj[rel] = {tuple(row[p] for p in pos) for row in j.rows(rel)}
    nulls = sorted(t.nulls())
    domain = sorted(j.active_domain() | t.constants(), key=value_key)
    spare = fresh_constants(set(domain), len(nulls), prefix="_v")
    entries = [(rel, row, c) for rel in t.schema for row, c in t.sorted_rows(rel)]
    # check each entry as soon as all of its nulls are bound
    pos_of = {n: k for k, n in enumerate(nulls)}

    def last_null(row, cond):
        ns = [v for v in row if isinstance(v, Null)]
        for c in cond:
            for a, b in c:
                ns.extend(x for x in (a, b) if isinstance(x, Null))
        return max((pos_of[n] for n in ns), default=-1)

    buckets = {}
    for e in entries:
        buckets.setdefault(last_null(e[1], e[2]), []).append(e)

    def ok(k, nu):
        for rel, row, c in buckets.get(k, ()):
            if holds(c, nu) and tuple(nu[v] if isinstance(v, Null) else v for v in row) not in proj[rel]:
                return False
        return True

    if not ok(-1, {}):
        return False

    def rec(k, nu):
        if k == len(nulls):
            return True
        n = nulls[k]
        for v in domain + [spare[k]]:
            nu[n] = v
            if ok(k, nu) and rec(k + 1, nu):
                return True
        del nu[n]
        return False

    return rec(0, {})


# -- conditional chase ------------------------------------------------------------------

def _matches(atoms, t: ConditionalInstance):
    """Matches of the atoms against conditional tuples: (assignment, equalities, condition)."""
    atoms = list(atoms)

    def rec(k, asg, eqs, cond):
        if k == len(atoms):
            yield dict(asg), list(eqs), cond
            return
        atom = atoms[k]
        idx = t.schema.index(atom.rel)
        for row, rc in t.sorted_rows(atom.rel):
            a2 = dict(asg)
            e2 = list(eqs)
            good = True
            for attr, term in atom.bindings:
                val = row[idx[attr]]
                if isinstance(term, Var):
                    if term not in a2:
                        a2[term] = val
                        continue
                    cur = a2[term]
                else:
                    cur = term
                if cur == val:
                    continue
                if not isinstance(cur, Null) and not isinstance(val, Null):
                    good = False
                    break
                e2.append(literal(cur, val))
            if not good:
                continue
            c2 = conj(cond, rc)
            if e2:
                c2 = conj(c2, frozenset({frozenset(e2)}))
            if not c2:
                continue
            yield from rec(k + 1, a2, e2, c2)

    yield from rec(0, {}, [], TRUE)


def _representative(term, eqs):
    if not isinstance(term, Null) or not eqs:
        return term
    uf = _UF()
    for a, b in eqs:
        uf.union(a, b)
    return uf.find(term) if not isinstance(uf.find(term), Null) else term


def _tgd_order(tgds):
    """Tgds by the earliest position of their conclusion relations; cyclic sets are
    ordered by their strongly connected components."""
    g = relation_graph(tgds)
    if nx.is_directed_acyclic_graph(g):
        pos = {r: k for k, r in enumerate(topological_relations(tgds))}
    else:
        cond = nx.condensation(g)
        members = cond.graph["mapping"]
        comps = nx.lexicographical_topological_sort(cond, key=lambda c: min(cond.nodes[c]["members"]))
        rank = {c: k for k, c in enumerate(comps)}
        pos = {r: rank[members[r]] for r in g}
    return sorted(range(len(tgds)), key=lambda n: (min(pos[a.rel] for a in tgds[n].head), n))


MAX_ROUNDS = 64


def chase_conditional(t: ConditionalInstance, p: Procedure) -> ConditionalInstance:
    """One pass in dependency order for acyclic postconditions; cyclic full ones are
    repeated until nothing changes."""
    bad = safe_scope_violations(p, allow_cyclic_full=True)
    if bad:
        raise CondTabError(f"procedure {p.name} is not safe-scope: {'; '.join(bad)}")
    tgds = p.tgds
    cyclic = not is_acyclic(tgds)
    for d in tgds:
        if not compatible(d, t.schema):
            raise CondTabError(f"tgd {d} is not compatible with the schema")
    if cyclic:
        for d in tgds:
            for a in d.head:
                if set(a.attrs) != set(t.schema[a.rel]):
                    # would invent nulls on every round
                    raise Unsupported(f"procedure {p.name}: cyclic tgd {d} leaves attributes of {a.rel} unspecified")
    fresh = NullFactory.above(t.nulls())
    rows = {rel: dict(rs) for rel, rs in t.items()}
    schema = t.schema
    order = _tgd_order(tgds)
    for _ in range(MAX_ROUNDS):
        before = {rel: dict(rs) for rel, rs in rows.items()}
        _chase_pass(tgds, order, schema, rows, fresh)
        if not cyclic or rows == before:
            return ConditionalInstance(schema, rows)
    raise Unsupported(f"procedure {p.name}: conditional chase did not settle within {MAX_ROUNDS} rounds")


def _chase_pass(tgds, order, schema, rows, fresh):
    for n in order:
        d = tgds[n]
        cur = ConditionalInstance(schema, rows)
        naive = cur.naive()
        triggers = list(_matches(d.body, cur))
        for asg, eqs, cond in triggers:
            front = {v: _representative(asg[v], eqs) for v in d.frontier}
            if has_homomorphism(d.head, naive, dict(front)):
                continue
            h = dict(front)
            for atom in d.head:
                row = []
                for attr in schema[atom.rel]:
                    try:
                        term = atom.term(attr)
                    except KeyError:
                        row.append(fresh())
                        continue
                    if isinstance(term, Var):
                        if term not in h:
                            h[term] = fresh()
                        row.append(h[term])
                    else:
                        row.append(term)
                row = tuple(row)
                rs = rows[atom.rel]
                rs[row] = disj(rs[row], cond) if row in rs else cond


def pad_to_schema(t: ConditionalInstance, target: Schema) -> ConditionalInstance:
    """Widen ``t`` to ``target``: new attributes get a fresh null in every tuple;
    new relations start empty."""
    fresh = NullFactory.above(t.nulls())
    merged = {r: set(a) for r, a in t.schema.items()}
    for r, a in target.items():
        merged.setdefault(r, set()).update(a)
    schema = Schema({r: sort_attrs(a) for r, a in merged.items()})
    rows = {}
    for rel in schema:
        if rel not in t.schema:
            rows[rel] = {}
            continue
        old = t.schema[rel]
        new = schema[rel]
        if old == new:
            rows[rel] = dict(t.rows(rel))
            continue
        oidx = {a: k for k, a in enumerate(old)}
        out = {}
        for row, c in t.sorted_rows(rel):
            out[tuple(row[oidx[a]] if a in oidx else fresh() for a in new)] = c
        rows[rel] = out
    return ConditionalInstance(schema, rows)


def extend_schema_conditional(t: ConditionalInstance, p: Procedure):
    from .dynschema import minimal_schema

    if not classify(p).safe_alteration:
        raise CondTabError(f"procedure {p.name} is not a safe schema-alteration")
    r = minimal_schema(p, t.schema)
    if not r.ok:
        return EmptyOutcome(p.name, r.reason)
    return pad_to_schema(t, r.schema)


def outcomes_condtab(i, ps):
    """Positive conditional instance whose minimal members are the minimal dynamic
    outcomes of the sequence, or EmptyOutcome."""
    from .dynschema import minimal_schema

    t = i if isinstance(i, ConditionalInstance) else ConditionalInstance.from_instance(i)
    for p in ps:
        c = classify(p)
        scoped = c.safe_scope or is_full_scope(p)
        if not (scoped or c.safe_alteration):
            raise Unsupported(f"procedure {p.name} is neither safe-scope nor a safe schema-alteration")
        if any(isinstance(d, Egd) for d in p.post):
            raise Unsupported(f"procedure {p.name} has egds in its postcondition")
        if any(not isinstance(d, StructureConstraint) for d in p.pre):
            raise Unsupported(f"procedure {p.name} has a data precondition")
        r = minimal_schema(p, t.schema)
        if not r.ok and r.over:
            # a whole-relation pin on an empty relation does not stop it from growing
            empty = [rel for rel in r.over if not t.rows(rel)]
            unsure = [rel for rel in r.over if t.rows(rel) and all(cd != TRUE for cd in t.rows(rel).values())]
            if unsure:
                raise Unsupported(f"whether {', '.join(unsure)} is empty depends on conditions")
            if len(empty) == len(r.over):
                r = minimal_schema(p, t.schema, ignore_labels=empty)
        if not r.ok:
            return EmptyOutcome(p.name, r.reason)
        t = pad_to_schema(t, r.schema)
        if scoped:
            t = chase_conditional(t, p)
    return t


# -- certain answers ---------------------------------------------------------------------

def naive_certain(t: ConditionalInstance, q: ConjunctiveQuery) -> bool:
    if not compatible(q, t.schema):
        return False
    return has_homomorphism(q.atoms, t.naive())


def certain_boolean(source, q: ConjunctiveQuery, semantics: str = STATIC) -> bool:
    """Does the boolean query hold in every outcome?  ``source`` is a conditional
    instance, a scoped knowledge base, or a pair (instance, procedures)."""
    from .skb import ScopedKnowledgeBase, SkbError, minimal_instance, outcomes_skb

    if q.free:
        raise CondTabError("certain_boolean needs a boolean query")
    if isinstance(source, ConditionalInstance):
        return naive_certain(source, q)
    if isinstance(source, EmptyOutcome):
        return True
    if isinstance(source, ScopedKnowledgeBase):
        if not source.full:
            raise Unsupported("knowledge base has non-full tgds")
        j = minimal_instance(source)
        return compatible(q, j.schema) and bool(eval_cq(q, j))
    i, ps = source
    ps = list(ps)
    if semantics == STATIC:
        for p in ps:
            if not classify(p).safe_scope:
                raise Unsupported(f"procedure {p.name} is not safe-scope")
        if all(t.is_full for p in ps for t in p.tgds):
            try:
                return certain_boolean(outcomes_skb(i, ps), q)
            except SkbError as e:
                raise Unsupported(str(e))
        if not all(compatible(t, i.schema) for p in ps for t in p.tgds):
            return True
    res = outcomes_condtab(i, ps)
    if isinstance(res, EmptyOutcome):
        return True
    return naive_certain(res, q)
