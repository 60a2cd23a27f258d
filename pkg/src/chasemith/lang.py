"""Named atoms, conjunctive queries, dependencies and their semantics."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

import networkx as nx

from .relmodel import Instance, Null, Schema, Value, attr_key, sort_attrs, value_key


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Var({self.name!r})"


Term = Union[Var, Value]


def is_var(t) -> bool:
    return isinstance(t, Var)


def term_key(t):
    if isinstance(t, Var):
        return (2, t.name, 0)
    return value_key(t)


def format_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Null):
        return str(t)
    if t.isdigit() and (t == "0" or not t.startswith("0")):
        return t
    return '"' + t.replace("\\", "\\\\").replace('"', '\\"') + '"'


class NamedAtom:
    """``R(A1: t1, ..., Ak: tk)``; bindings kept sorted by attribute."""

    __slots__ = ("rel", "bindings", "_hash")

    def __init__(self, rel: str, bindings):
        if isinstance(bindings, dict):
            bindings = bindings.items()
        pairs = sorted(((a, t) for a, t in bindings), key=lambda p: attr_key(p[0]))
        attrs = [a for a, _ in pairs]
        if len(set(attrs)) != len(attrs):
            raise ValueError(f"duplicate attribute in atom over {rel}")
        self.rel = rel
        self.bindings = tuple(pairs)
        self._hash = hash((rel, self.bindings))

    @property
    def attrs(self) -> Tuple[str, ...]:
        return tuple(a for a, _ in self.bindings)

    @property
    def terms(self) -> Tuple[Term, ...]:
        return tuple(t for _, t in self.bindings)

    def term(self, attr):
        for a, t in self.bindings:
            if a == attr:
                return t
        raise KeyError(attr)

    def vars(self):
        return [t for t in self.terms if isinstance(t, Var)]

    def substitute(self, mapping) -> "NamedAtom":
        return NamedAtom(self.rel, [(a, mapping.get(t, t) if isinstance(t, Var) else t) for a, t in self.bindings])

    def sort_key(self):
        return (self.rel, tuple((attr_key(a), term_key(t)) for a, t in self.bindings))

    def __eq__(self, other):
        return isinstance(other, NamedAtom) and self.rel == other.rel and self.bindings == other.bindings

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.rel}(" + ", ".join(f"{a}: {format_term(t)}" for a, t in self.bindings) + ")"

    __repr__ = __str__


def atoms_vars(atoms: Iterable[NamedAtom]) -> list:
    """Variables in order of first occurrence."""
    seen = {}
    for atom in atoms:
        for t in atom.terms:
            if isinstance(t, Var) and t not in seen:
                seen[t] = None
    return list(seen)


def atoms_constants(atoms: Iterable[NamedAtom]) -> set:
    return {t for atom in atoms for t in atom.terms if not isinstance(t, Var)}


@dataclass(frozen=True)
class ConjunctiveQuery:
    free: Tuple[Var, ...]
    atoms: Tuple[NamedAtom, ...]

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        body = set(atoms_vars(self.atoms))
        missing = [v for v in self.free if v not in body]
        if missing:
            raise ValueError(f"free variables {missing} do not occur in the query body")

    @property
    def existential(self) -> Tuple[Var, ...]:
        free = set(self.free)
        return tuple(v for v in atoms_vars(self.atoms) if v not in free)

    @property
    def is_boolean(self) -> bool:
        return not self.free

    def __str__(self):
        body = ", ".join(map(str, self.atoms)) or "true"
        if self.free:
            return f"({', '.join(map(str, self.free))}) :- {body}"
        return body


def boolean_cq(atoms) -> ConjunctiveQuery:
    return ConjunctiveQuery((), tuple(atoms))


def full_cq(atoms) -> ConjunctiveQuery:
    """A CQ whose variables are all free (the form used for preservation queries)."""
    atoms = tuple(atoms)
    return ConjunctiveQuery(tuple(atoms_vars(atoms)), atoms)


@dataclass(frozen=True)
class TotalQuery:
    rel: str

    def __str__(self):
        return f"total {self.rel}"


class Tgd:
    """``body -> exists z. head``.  Head variables absent from the body are existential."""

    __slots__ = ("body", "head", "_hash")

    def __init__(self, body, head):
        self.body = tuple(body)
        self.head = tuple(head)
        self._hash = hash((self.body, self.head))

    @property
    def frontier(self) -> Tuple[Var, ...]:
        bv = set(atoms_vars(self.body))
        return tuple(v for v in atoms_vars(self.head) if v in bv)

    @property
    def existential(self) -> Tuple[Var, ...]:
        bv = set(atoms_vars(self.body))
        return tuple(v for v in atoms_vars(self.head) if v not in bv)

    @property
    def is_full(self) -> bool:
        return not self.existential

    @property
    def premise(self) -> ConjunctiveQuery:
        return ConjunctiveQuery(self.frontier, self.body)

    @property
    def conclusion(self) -> ConjunctiveQuery:
        return ConjunctiveQuery(self.frontier, self.head)

    def body_relations(self):
        return {a.rel for a in self.body}

    def head_relations(self):
        return {a.rel for a in self.head}

    def substitute(self, mapping) -> "Tgd":
        return Tgd([a.substitute(mapping) for a in self.body], [a.substitute(mapping) for a in self.head])

    def __eq__(self, other):
        return isinstance(other, Tgd) and self.body == other.body and self.head == other.head

    def __hash__(self):
        return self._hash

    def __str__(self):
        body = ", ".join(map(str, self.body))
        head = ", ".join(map(str, self.head))
        ex = self.existential
        if ex:
            head = "exists " + ", ".join(map(str, ex)) + ". " + head
        return f"{body} -> {head}"

    __repr__ = __str__


class Egd:
    __slots__ = ("body", "lhs", "rhs")

    def __init__(self, body, lhs: Var, rhs: Var):
        self.body = tuple(body)
        self.lhs = lhs
        self.rhs = rhs
        bv = set(atoms_vars(self.body))
        for v in (lhs, rhs):
            if v not in bv:
                raise ValueError(f"egd variable {v} does not occur in the premise")

    @property
    def premise(self) -> ConjunctiveQuery:
        return ConjunctiveQuery((), self.body)

    def __eq__(self, other):
        return isinstance(other, Egd) and (self.body, self.lhs, self.rhs) == (other.body, other.lhs, other.rhs)

    def __hash__(self):
        return hash((self.body, self.lhs, self.rhs))

    def __str__(self):
        return ", ".join(map(str, self.body)) + f" -> {self.lhs} = {self.rhs}"

    __repr__ = __str__


@dataclass(frozen=True)
class StructureConstraint:
    """``R[*]`` when ``attrs`` is None, else ``R[a1, ..., ak]``."""

    rel: str
    attrs: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.attrs is not None:
            if not self.attrs:
                raise ValueError("structure constraint needs at least one attribute")
            object.__setattr__(self, "attrs", sort_attrs(self.attrs))

    @property
    def wildcard(self) -> bool:
        return self.attrs is None

    def __str__(self):
        if self.attrs is None:
            return f"{self.rel}[*]"
        return f"{self.rel}[{', '.join(self.attrs)}]"


Dependency = Union[Tgd, Egd, StructureConstraint]


# -- compatibility -----------------------------------------------------------

def _atoms_of(q):
    if isinstance(q, NamedAtom):
        return (q,)
    if isinstance(q, ConjunctiveQuery):
        return q.atoms
    if isinstance(q, Tgd):
        return q.body + q.head
    if isinstance(q, Egd):
        return q.body
    if isinstance(q, (list, tuple)):
        return tuple(a for x in q for a in _atoms_of(x))
    raise TypeError(f"cannot take atoms of {q!r}")


def compatible(q, s: Schema) -> bool:
    if isinstance(q, TotalQuery):
        return q.rel in s
    if isinstance(q, StructureConstraint):
        return q.rel in s
    for atom in _atoms_of(q):
        if atom.rel not in s:
            return False
        if not set(atom.attrs) <= set(s[atom.rel]):
            return False
    return True


def satisfies_structure(s: Schema, c: StructureConstraint) -> bool:
    if c.rel not in s:
        return False
    return c.attrs is None or set(c.attrs) <= set(s[c.rel])


class IncompatibleError(ValueError):
    pass


# -- homomorphisms -------------------------------------------------------------

def _plan(atoms, bound):
    """Order atoms so that each one shares as many bound variables as possible."""
    remaining = list(atoms)
    bound = set(bound)
    order = []
    while remaining:
        best = max(
            range(len(remaining)),
            key=lambda k: (
                sum(1 for t in remaining[k].terms if not isinstance(t, Var) or t in bound),
                -k,
            ),
        )
        atom = remaining.pop(best)
        order.append(atom)
        bound.update(atom.vars())
    return order


def homomorphisms(atoms: Sequence[NamedAtom], inst: Instance, assignment: Optional[dict] = None) -> Iterator[dict]:
    """All extensions of ``assignment`` mapping every atom into ``inst``.

    Nulls in the instance behave as ordinary values.  Atoms must be compatible
    with the instance schema.
    """
    start = dict(assignment or {})
    plan = _plan(atoms, start)
    compiled = []
    for atom in plan:
        idx = inst.schema.index(atom.rel)
        compiled.append((inst.rows(atom.rel), [(idx[a], t) for a, t in atom.bindings]))

    def rec(k, asg):
        if k == len(compiled):
            yield dict(asg)
            return
        rows, spec = compiled[k]
        for row in rows:
            added = []
            ok = True
            for pos, t in spec:
                v = row[pos]
                if isinstance(t, Var):
                    cur = asg.get(t, _MISSING)
                    if cur is _MISSING:
                        asg[t] = v
                        added.append(t)
                    elif cur != v:
                        ok = False
                        break
                elif t != v:
                    ok = False
                    break
            if ok:
                yield from rec(k + 1, asg)
            for t in added:
                del asg[t]

    yield from rec(0, start)


_MISSING = object()


def has_homomorphism(atoms, inst: Instance, assignment=None) -> bool:
    for _ in homomorphisms(atoms, inst, assignment):
        return True
    return False


def eval_cq(q: ConjunctiveQuery, inst: Instance) -> set:
    if not compatible(q, inst.schema):
        raise IncompatibleError(f"query {q} is not compatible with {inst.schema}")
    return {tuple(h[v] for v in q.free) for h in homomorphisms(q.atoms, inst)}


def eval_total(q: TotalQuery, inst: Instance) -> set:
    if q.rel not in inst.schema:
        raise IncompatibleError(f"relation {q.rel} is not in the schema")
    return set(inst.rows(q.rel))


def evaluate(q, inst: Instance) -> set:
    if isinstance(q, TotalQuery):
        return eval_total(q, inst)
    return eval_cq(q, inst)


def satisfies_dependency(inst: Instance, d) -> bool:
    if isinstance(d, StructureConstraint):
        return satisfies_structure(inst.schema, d)
    if not compatible(d, inst.schema):
        return False
    if isinstance(d, Tgd):
        for h in homomorphisms(d.body, inst):
            if not has_homomorphism(d.head, inst, h):
                return False
        return True
    if isinstance(d, Egd):
        for h in homomorphisms(d.body, inst):
            if h[d.lhs] != h[d.rhs]:
                return False
        return True
    raise TypeError(f"not a dependency: {d!r}")


def satisfies_all(inst: Instance, deps) -> bool:
    return all(satisfies_dependency(inst, d) for d in deps)


# -- classification ------------------------------------------------------------

@dataclass(frozen=True)
class TgdFlags:
    full: bool
    acyclic: bool
    weakly_acyclic: bool


def relation_graph(tgds) -> nx.DiGraph:
    g = nx.DiGraph()
    for t in tgds:
        for a in t.body:
            g.add_node(a.rel)
        for b in t.head:
            g.add_node(b.rel)
            for a in t.body:
                g.add_edge(a.rel, b.rel)
    return g


def is_acyclic(tgds) -> bool:
    return nx.is_directed_acyclic_graph(relation_graph(tgds))


def is_weakly_acyclic(tgds) -> bool:
    g = nx.DiGraph()
    special = set()
    for t in tgds:
        ex = set(t.existential)
        body_pos = {}
        for a in t.body:
            for attr, term in a.bindings:
                if isinstance(term, Var):
                    body_pos.setdefault(term, []).append((a.rel, attr))
        head_pos = {}
        for a in t.head:
            for attr, term in a.bindings:
                if isinstance(term, Var):
                    head_pos.setdefault(term, []).append((a.rel, attr))
        ex_pos = [p for v in ex for p in head_pos.get(v, ())]
        for v in t.frontier:
            for p in body_pos[v]:
                g.add_node(p)
                for q in head_pos.get(v, ()):
                    g.add_edge(p, q)
                for q in ex_pos:
                    g.add_edge(p, q)
                    special.add((p, q))
    for comp in nx.strongly_connected_components(g):
        for p, q in special:
            if p in comp and q in comp:
                return False
    return True


def classify_tgd_set(tgds) -> TgdFlags:
    tgds = list(tgds)
    return TgdFlags(
        full=all(t.is_full for t in tgds),
        acyclic=is_acyclic(tgds),
        weakly_acyclic=is_weakly_acyclic(tgds),
    )


def topological_relations(tgds) -> list:
    """Relations of the dependency graph in a deterministic topological order."""
    return list(nx.lexicographical_topological_sort(relation_graph(tgds)))


# -- canonical renaming --------------------------------------------------------

_PERM_LIMIT = 720


def _shape(atom: NamedAtom):
    return (atom.rel, tuple((attr_key(a), ("c", term_key(t)) if not isinstance(t, Var) else ("v",)) for a, t in atom.bindings))


def _render(atoms, names):
    return tuple(
        (a.rel, tuple((attr, ("v", names[t]) if isinstance(t, Var) else ("c", term_key(t))) for attr, t in a.bindings))
        for a in atoms
    )


def _orderings(atoms):
    groups = {}
    for a in sorted(atoms, key=_shape):
        groups.setdefault(_shape(a), []).append(a)
    blocks = [groups[k] for k in sorted(groups)]
    count = 1
    for b in blocks:
        count *= math.factorial(len(b))
    if count > _PERM_LIMIT:
        yield [a for b in blocks for a in b]
        return
    for combo in itertools.product(*(itertools.permutations(b) for b in blocks)):
        yield [a for block in combo for a in block]


def _number(atoms, names):
    for a in atoms:
        for t in a.terms:
            if isinstance(t, Var) and t not in names:
                names[t] = len(names) + 1


def canonical_tgd(t: Tgd, prefix: str = "x") -> Tgd:
    """Rename variables so that tgds equal up to renaming and atom order coincide."""
    best = None
    for body in _orderings(t.body):
        names = {}
        _number(body, names)
        hnames = dict(names)
        head_order = sorted(
            t.head,
            key=lambda a: (_shape(a), tuple(hnames.get(x, 0) if isinstance(x, Var) else 0 for x in a.terms)),
        )
        _number(head_order, hnames)
        head_sorted = sorted(head_order, key=lambda a: _render([a], hnames))
        key = (_render(sorted(body, key=lambda a: _render([a], hnames)), hnames), _render(head_sorted, hnames))
        if best is None or key < best[0]:
            best = (key, body, head_sorted, hnames)
    _, body, head, names = best
    mapping = {v: Var(f"{prefix}{k}") for v, k in names.items()}
    body = sorted((a.substitute(mapping) for a in body), key=NamedAtom.sort_key)
    head = sorted((a.substitute(mapping) for a in head), key=NamedAtom.sort_key)
    return Tgd(body, head)


def tgd_key(t: Tgd) -> str:
    return str(canonical_tgd(t))


def canonical_tgds(tgds) -> Tuple[Tgd, ...]:
    """Deduplicate by canonical form and return them in a stable order."""
    seen = {}
    for t in tgds:
        c = canonical_tgd(t)
        seen.setdefault(str(c), c)
    return tuple(seen[k] for k in sorted(seen))


def rename_apart(t: Tgd, prefix: str) -> Tgd:
    mapping = {v: Var(f"{prefix}{k}") for k, v in enumerate(atoms_vars(t.body + t.head), 1)}
    return t.substitute(mapping)


def schema_of_atoms(atoms, base: Optional[Schema] = None) -> Schema:
    rels = {r: set(a) for r, a in (base.items() if base else ())}
    for atom in atoms:
        rels.setdefault(atom.rel, set()).update(atom.attrs)
    return Schema(rels)
