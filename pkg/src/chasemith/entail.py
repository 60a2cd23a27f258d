"""Does every member of rep(K) satisfy a given egd or tgd?"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

from .chase import SUCCESS, budget, chase_full, chase_standard
from .errors import ResourceError, Unsupported
from .lang import (
    ConjunctiveQuery,
    Egd,
    NamedAtom,
    Tgd,
    Var,
    atoms_constants,
    atoms_vars,
    classify_tgd_set,
    compatible,
    has_homomorphism,
    homomorphisms,
    term_key,
)
from .relmodel import Instance, fresh_constants, value_key
from .skb import ScopedKnowledgeBase, set_partitions

VAR_BUDGET = 8
BRANCH_BUDGET = 200000


@dataclass
class EntailmentResult:
    holds: bool
    counterexample: Optional[object] = None
    reason: str = ""

    def __bool__(self):
        return self.holds


# -- shared helpers ----------------------------------------------------------------

def _split(atoms, scope):
    closed = [a for a in atoms if a.rel not in scope]
    opened = [a for a in atoms if a.rel in scope]
    return closed, opened


def _freeze(atoms, asg, schema, fresh_iter):
    """Ground atoms under ``asg``; attributes an atom leaves out get their own fresh constant."""
    facts = {}
    for a in atoms:
        row = []
        for attr in schema[a.rel]:
            try:
                t = a.term(attr)
            except KeyError:
                row.append(next(fresh_iter))
                continue
            row.append(asg[t] if isinstance(t, Var) else t)
        facts.setdefault(a.rel, set()).add(tuple(row))
    return facts


def _fresh_supply(avoid):
    k = 0
    while True:
        k += 64
        for c in fresh_constants(avoid, k)[k - 64:]:
            yield c


def _chase_member(k: ScopedKnowledgeBase, d: Instance):
    """Chase ``d`` with gamma; None when the result cannot lie in rep(k)."""
    flags = classify_tgd_set(k.gamma)
    if flags.full and all(set(a.attrs) == set(d.schema[a.rel]) for t in k.gamma for a in t.head):
        out = chase_full(d, k.gamma)
    else:
        res = chase_standard(d, k.gamma)
        if res.status != SUCCESS:
            return None
        out = res.instance
        for rel in d.schema:
            if rel not in k.scope and out.rows(rel) != d.rows(rel):
                raise Unsupported("chasing gamma invents nulls in relations outside the scope")
    for rel in d.schema:
        if rel not in k.scope and out.rows(rel) != k.base.rows(rel):
            return None
    return out


def _check_gamma(k):
    flags = classify_tgd_set(k.gamma)
    if not (flags.acyclic or flags.weakly_acyclic):
        raise Unsupported("gamma is neither acyclic nor weakly acyclic")


# -- egds ------------------------------------------------------------------------------

def check_egd(k: ScopedKnowledgeBase, e: Egd, var_budget: int = VAR_BUDGET) -> EntailmentResult:
    schema = k.base.schema
    if not compatible(e, schema):
        return EntailmentResult(False, None, "incompatible")
    _check_gamma(k)
    closed, opened = _split(e.body, k.scope)
    domain = sorted(
        k.base.constants() | atoms_constants(e.body) | {c for t in k.gamma for c in atoms_constants(t.body + t.head)}
    )
    for h in sorted(homomorphisms(closed, k.base), key=_asg_order):
        rest = [v for v in atoms_vars(opened) if v not in h]
        if len(rest) > var_budget:
            raise ResourceError(f"egd premise has {len(rest)} open variables (budget {var_budget})", len(rest))
        for asg in _assignments(rest, domain):
            full = dict(h)
            full.update(asg)
            fresh = _fresh_supply(set(domain) | set(full.values()))
            d = k.base.add(_freeze(opened, full, schema, fresh))
            out = _chase_member(k, d)
            if out is None:
                continue
            for g in homomorphisms(e.body, out):
                if g[e.lhs] != g[e.rhs]:
                    return EntailmentResult(False, out, "violated")
    return EntailmentResult(True)


def _asg_order(h):
    return tuple((v.name, value_key(h[v])) for v in sorted(h, key=lambda x: x.name))


def _assignments(variables, domain):
    """Partitions of ``variables``; each block goes to a fresh constant or to a distinct
    constant of ``domain``."""
    if not variables:
        yield {}
        return
    fresh = fresh_constants(domain, len(variables), prefix="_e")
    for part in set_partitions(variables):
        options = [None] + list(domain)
        for choice in itertools.product(options, repeat=len(part)):
            used = [c for c in choice if c is not None]
            if len(used) != len(set(used)):
                continue
            asg = {}
            for n, (block, c) in enumerate(zip(part, choice)):
                val = fresh[n] if c is None else c
                for v in block:
                    asg[v] = val
            yield asg


def skb_satisfies_egd(k: ScopedKnowledgeBase, e: Egd) -> bool:
    return check_egd(k, e).holds


# -- tgds, safe case -------------------------------------------------------------------

def check_tgd_safe(k: ScopedKnowledgeBase, t: Tgd) -> EntailmentResult:
    if not k.safe:
        return check_tgd_general(k, t)
    schema = k.base.schema
    if not compatible(t, schema):
        return EntailmentResult(False, None, "incompatible")
    _check_gamma(k)
    closed, opened = _split(t.body, k.scope)
    avoid = k.base.constants() | atoms_constants(t.body + t.head)
    for h in sorted(homomorphisms(closed, k.base), key=_asg_order):
        rest = [v for v in atoms_vars(opened) if v not in h]
        full = dict(h)
        full.update(zip(rest, fresh_constants(avoid, len(rest), prefix="_t")))
        fresh = _fresh_supply(avoid | set(full.values()))
        d = k.base.add(_freeze(opened, full, schema, fresh))
        out = _chase_member(k, d)
        if out is None:
            continue
        front = {v: full[v] for v in t.frontier}
        if not has_homomorphism(t.head, out, front):
            return EntailmentResult(False, out, "conclusion missing")
    return EntailmentResult(True)


def skb_satisfies_tgd_safe(k: ScopedKnowledgeBase, t: Tgd) -> bool:
    return check_tgd_safe(k, t).holds


# -- tgds, general case: disjunctive chase into a union of CQs with inequalities ----------

@dataclass(frozen=True)
class Disjunct:
    atoms: FrozenSet[NamedAtom]
    head: Tuple
    neq: FrozenSet[FrozenSet]

    def satisfiable(self) -> bool:
        return all(len(p) == 2 for p in self.neq)

    def __str__(self):
        body = ", ".join(sorted(map(str, self.atoms)))
        cond = ", ".join(sorted(" != ".join(sorted(map(str, p))) for p in self.neq))
        return f"({', '.join(map(str, self.head))}) :- {body}" + (f" | {cond}" if cond else "")


@dataclass(frozen=True)
class UcqNeq:
    disjuncts: Tuple[Disjunct, ...]


def match_atoms(patterns, targets, asg=None):
    """Syntactic homomorphisms from pattern atoms into target atoms (terms are opaque)."""
    by_rel = {}
    for a in targets:
        by_rel.setdefault(a.rel, []).append(a)
    for v in by_rel.values():
        v.sort(key=NamedAtom.sort_key)
    patterns = list(patterns)

    def rec(n, cur):
        if n == len(patterns):
            yield dict(cur)
            return
        p = patterns[n]
        for tgt in by_rel.get(p.rel, ()):
            added = []
            ok = True
            for attr, pt in p.bindings:
                try:
                    tt = tgt.term(attr)
                except KeyError:
                    ok = False
                    break
                if isinstance(pt, Var):
                    if pt in cur:
                        if cur[pt] != tt:
                            ok = False
                            break
                    else:
                        cur[pt] = tt
                        added.append(pt)
                elif pt != tt:
                    ok = False
                    break
            if ok:
                yield from rec(n + 1, cur)
            for v in added:
                del cur[v]

    yield from rec(0, dict(asg or {}))


def ucq_contained_in_cq(u: UcqNeq, q: ConjunctiveQuery) -> bool:
    for d in u.disjuncts:
        if not d.satisfiable():
            continue
        start = {}
        ok = True
        for v, term in zip(q.free, d.head):
            if start.setdefault(v, term) != term:
                ok = False
        if not ok:
            return False
        if next(match_atoms(q.atoms, d.atoms, start), None) is None:
            return False
    return True


class _Names:
    def __init__(self, prefix):
        self.prefix = prefix
        self.n = 0

    def __call__(self):
        self.n += 1
        return Var(f"{self.prefix}{self.n}")


def _complete(atom, schema, names):
    have = set(atom.attrs)
    extra = [(a, names()) for a in schema[atom.rel] if a not in have]
    return NamedAtom(atom.rel, list(atom.bindings) + extra) if extra else atom


@dataclass(frozen=True)
class _NormTgd:
    body: Tuple[NamedAtom, ...]
    eqs: Tuple[Tuple, ...]
    head: Tuple[NamedAtom, ...]
    frontier: Tuple[Var, ...]


def _normalize(t: Tgd, idx: int) -> _NormTgd:
    first = {}
    eqs = []
    body = []
    n = 0
    for a in t.body:
        binds = []
        for attr, term in a.bindings:
            n += 1
            v = Var(f"g{idx}_{n}")
            if isinstance(term, Var):
                if term in first:
                    eqs.append((v, first[term]))
                else:
                    first[term] = v
            else:
                eqs.append((v, term))
            binds.append((attr, v))
        body.append(NamedAtom(a.rel, binds))
    head = tuple(a.substitute(first) for a in t.head)
    frontier = tuple(first[v] for v in t.frontier)
    return _NormTgd(tuple(body), tuple(eqs), head, frontier)


def _subst_state(state: Disjunct, var, value) -> Optional[Disjunct]:
    m = {var: value}
    atoms = frozenset(a.substitute(m) for a in state.atoms)
    head = tuple(m.get(x, x) if isinstance(x, Var) else x for x in state.head)
    neq = set()
    for p in state.neq:
        q = frozenset(m.get(x, x) if isinstance(x, Var) else x for x in p)
        if len(q) == 1:
            return None
        if all(not isinstance(x, Var) for x in q):
            continue
        neq.add(q)
    return Disjunct(atoms, head, frozenset(neq))


def _unify_with_row(state: Disjunct, atom: NamedAtom, attrs, row) -> Optional[Disjunct]:
    cur = state
    for attr, val in zip(attrs, row):
        term = atom.term(attr)
        if isinstance(term, Var):
            term = _resolve_term(cur, term)
        if isinstance(term, Var):
            cur = _subst_state(cur, term, val)
            if cur is None:
                return None
        elif term != val:
            return None
    return cur


def _resolve_term(state, term):
    return term


def _state_key(s: Disjunct):
    return (tuple(sorted(str(a) for a in s.atoms)), tuple(map(str, s.head)),
            tuple(sorted(tuple(sorted(map(str, p))) for p in s.neq)))


def _closed_step(state: Disjunct, k: ScopedKnowledgeBase, closed_rels):
    """Branches for the first atom of a closed relation not matching a base tuple, or None."""
    schema = k.base.schema
    for atom in sorted(state.atoms, key=NamedAtom.sort_key):
        if atom.rel not in closed_rels:
            continue
        attrs = schema[atom.rel]
        rows = k.base.sorted_rows(atom.rel)
        if not attrs and rows:
            continue
        if all(not isinstance(x, Var) for x in atom.terms):
            if tuple(atom.term(a) for a in attrs) in k.base.rows(atom.rel):
                continue
        branches = []
        for row in rows:
            nxt = _unify_with_row(state, atom, attrs, row)
            if nxt is not None:
                branches.append(nxt)
        return branches
    return None


def _tgd_step(state: Disjunct, norms, schema, names):
    atoms = list(state.atoms)
    for nt in norms:
        for g in sorted(match_atoms(nt.body, atoms), key=lambda h: tuple(term_key(h[v]) for v in sorted(h, key=lambda x: x.name))):
            pairs = []
            dead = False
            for v, other in nt.eqs:
                a = g[v]
                b = g[other] if isinstance(other, Var) else other
                if a == b:
                    continue
                if not isinstance(a, Var) and not isinstance(b, Var):
                    dead = True
                    break
                if frozenset((a, b)) in state.neq:
                    dead = True
                    break
                pairs.append((a, b))
            if dead:
                continue
            front = {v: g[v] for v in nt.frontier}
            if next(match_atoms(nt.head, atoms, front), None) is not None:
                continue
            asg = dict(front)
            new_atoms = []
            for h_atom in nt.head:
                for v in h_atom.vars():
                    if v not in asg:
                        asg[v] = names()
                new_atoms.append(_complete(h_atom.substitute(asg), schema, names))
            branches = [Disjunct(state.atoms | frozenset(new_atoms), state.head, state.neq)]
            for a, b in pairs:
                branches.append(Disjunct(state.atoms, state.head, state.neq | {frozenset((a, b))}))
            return branches
    return None


def disjunctive_chase(k: ScopedKnowledgeBase, t: Tgd) -> UcqNeq:
    schema = k.base.schema
    names = _Names("u")
    rename = {v: names() for v in atoms_vars(t.body)}
    body = [_complete(a.substitute(rename), schema, names) for a in t.body]
    facts = [NamedAtom(rel, zip(schema[rel], row)) for rel in schema for row in k.base.sorted_rows(rel)]
    start = Disjunct(frozenset(body) | frozenset(facts), tuple(rename[v] for v in t.frontier), frozenset())
    norms = [_normalize(g, n) for n, g in enumerate(k.gamma)]
    closed_rels = {r for r in schema if r not in k.scope}
    cap = budget(BRANCH_BUDGET)
    out = []
    seen = set()
    stack = [start]
    steps = 0
    while stack:
        state = stack.pop()
        key = _state_key(state)
        if key in seen:
            continue
        seen.add(key)
        steps += 1
        if steps > cap:
            raise ResourceError(f"disjunctive chase exceeded {cap} branch states", steps)
        if not state.satisfiable():
            continue
        branches = _closed_step(state, k, closed_rels)
        if branches is None:
            branches = _tgd_step(state, norms, schema, names)
        if branches is None:
            out.append(state)
            continue
        stack.extend(reversed(branches))
    out.sort(key=_state_key)
    return UcqNeq(tuple(out))


def check_tgd_general(k: ScopedKnowledgeBase, t: Tgd) -> EntailmentResult:
    schema = k.base.schema
    if not compatible(t, schema):
        return EntailmentResult(False, None, "incompatible")
    if not classify_tgd_set(k.gamma).weakly_acyclic:
        raise Unsupported("gamma is not weakly acyclic")
    u = disjunctive_chase(k, t)
    q = ConjunctiveQuery(t.frontier, t.head)
    for d in u.disjuncts:
        if not ucq_contained_in_cq(UcqNeq((d,)), q):
            return EntailmentResult(False, d, "no containment mapping")
    return EntailmentResult(True)


def skb_satisfies_tgd_general(k: ScopedKnowledgeBase, t: Tgd) -> bool:
    return check_tgd_general(k, t).holds


def skb_satisfies(k: ScopedKnowledgeBase, d) -> EntailmentResult:
    if isinstance(d, Egd):
        return check_egd(k, d)
    if k.safe:
        return check_tgd_safe(k, d)
    return check_tgd_general(k, d)
