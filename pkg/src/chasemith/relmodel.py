"""Named-perspective relational data: schemas, instances, values and nulls.

Attributes are ordered byte-wise, so a tuple stored positionally in schema
order is interchangeable with its attribute->value view.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple, Union


@dataclass(frozen=True, order=True)
class Null:
    """A labeled null.  Rendered as ``_:n<id>``."""

    id: int

    def __str__(self):
        return f"_:n{self.id}"

    def __repr__(self):
        return f"Null({self.id})"


Value = Union[str, Null]


def as_value(v) -> Value:
    if isinstance(v, Null):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not values")
    if isinstance(v, (str, int)):
        return str(v)
    raise TypeError(f"not a value: {v!r}")


def value_key(v):
    """Total order on values: constants before nulls."""
    if isinstance(v, Null):
        return (1, "", v.id)
    return (0, v, 0)


def row_key(row):
    return tuple(value_key(v) for v in row)


def attr_key(a: str) -> bytes:
    return a.encode("utf-8")


def sort_attrs(attrs: Iterable[str]) -> Tuple[str, ...]:
    return tuple(sorted(set(attrs), key=attr_key))


class SchemaError(ValueError):
    pass


class Schema:
    """Immutable map from relation name to its attribute tuple (sorted)."""

    __slots__ = ("_rels", "_index", "_hash")

    def __init__(self, relations: Mapping[str, Iterable[str]] = ()):
        rels = {}
        items = relations.items() if isinstance(relations, Mapping) else relations
        for name, attrs in items:
            attrs = list(attrs)
            if len(set(attrs)) != len(attrs):
                raise SchemaError(f"duplicate attribute in relation {name}")
            rels[name] = sort_attrs(attrs)
        self._rels = dict(sorted(rels.items()))
        self._index = {r: {a: k for k, a in enumerate(at)} for r, at in self._rels.items()}
        self._hash = None

    def __contains__(self, rel):
        return rel in self._rels

    def __getitem__(self, rel) -> Tuple[str, ...]:
        return self._rels[rel]

    def __iter__(self) -> Iterator[str]:
        return iter(self._rels)

    def __len__(self):
        return len(self._rels)

    def get(self, rel, default=None):
        return self._rels.get(rel, default)

    def items(self):
        return self._rels.items()

    def relations(self) -> Tuple[str, ...]:
        return tuple(self._rels)

    def index(self, rel) -> Dict[str, int]:
        return self._index[rel]

    def size(self) -> int:
        return sum(len(a) for a in self._rels.values()) + len(self._rels)

    def with_relation(self, rel, attrs) -> "Schema":
        d = dict(self._rels)
        d[rel] = attrs
        return Schema(d)

    def as_dict(self):
        return {r: list(a) for r, a in self._rels.items()}

    def __eq__(self, other):
        return isinstance(other, Schema) and self._rels == other._rels

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._rels.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{r}({', '.join(a)})" for r, a in self._rels.items())
        return f"Schema({body})"


def schema_extends(s2: Schema, s1: Schema) -> bool:
    """True iff every relation of ``s1`` exists in ``s2`` with at least its attributes."""
    for rel, attrs in s1.items():
        if rel not in s2:
            return False
        if not set(attrs) <= set(s2[rel]):
            return False
    return True


Row = Tuple[Value, ...]


class Instance:
    """Immutable instance.  Rows are stored positionally in schema attribute order."""

    __slots__ = ("schema", "_rows", "_hash")

    def __init__(self, schema: Schema, relations: Mapping[str, Iterable] = None):
        self.schema = schema
        rows = {r: frozenset() for r in schema}
        for rel, tuples in (relations or {}).items():
            if rel not in schema:
                raise SchemaError(f"unknown relation {rel}")
            attrs = schema[rel]
            out = set()
            for t in tuples:
                out.add(_coerce_row(rel, attrs, t))
            rows[rel] = frozenset(out)
        self._rows = rows
        self._hash = None

    @classmethod
    def _raw(cls, schema: Schema, rows: Dict[str, frozenset]) -> "Instance":
        inst = cls.__new__(cls)
        inst.schema = schema
        inst._rows = rows
        inst._hash = None
        return inst

    def rows(self, rel) -> frozenset:
        return self._rows[rel]

    def sorted_rows(self, rel):
        return sorted(self._rows[rel], key=row_key)

    def tuples(self, rel):
        """Named view of a relation as a list of dicts, in canonical order."""
        attrs = self.schema[rel]
        return [dict(zip(attrs, row)) for row in self.sorted_rows(rel)]

    def relations(self):
        return self.schema.relations()

    def items(self):
        return self._rows.items()

    def size(self) -> int:
        return sum(len(r) for r in self._rows.values())

    def active_domain(self) -> set:
        out = set()
        for rows in self._rows.values():
            for row in rows:
                out.update(row)
        return out

    def constants(self) -> set:
        return {v for v in self.active_domain() if not isinstance(v, Null)}

    def nulls(self) -> set:
        return {v for v in self.active_domain() if isinstance(v, Null)}

    def is_ground(self) -> bool:
        return not self.nulls()

    def with_rows(self, rel, rows) -> "Instance":
        d = dict(self._rows)
        d[rel] = frozenset(rows)
        return Instance._raw(self.schema, d)

    def add(self, facts: Mapping[str, Iterable[Row]]) -> "Instance":
        d = dict(self._rows)
        for rel, rows in facts.items():
            d[rel] = d[rel] | frozenset(rows)
        return Instance._raw(self.schema, d)

    def issubset(self, other: "Instance") -> bool:
        if self.schema != other.schema:
            return False
        return all(rows <= other._rows[r] for r, rows in self._rows.items())

    def canonical(self):
        return tuple((r, self.schema[r], tuple(self.sorted_rows(r))) for r in self.schema)

    def __eq__(self, other):
        return isinstance(other, Instance) and self.schema == other.schema and self._rows == other._rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.schema, tuple(sorted((r, hash(v)) for r, v in self._rows.items()))))
        return self._hash

    def __repr__(self):
        parts = []
        for rel in self.schema:
            rows = ", ".join("(" + ", ".join(map(str, row)) + ")" for row in self.sorted_rows(rel))
            parts.append(f"{rel}={{{rows}}}")
        return "Instance(" + "; ".join(parts) + ")"


def _coerce_row(rel, attrs, t) -> Row:
    if isinstance(t, Mapping):
        if set(t) != set(attrs):
            raise SchemaError(f"tuple {dict(t)} does not match attributes {list(attrs)} of {rel}")
        return tuple(as_value(t[a]) for a in attrs)
    t = tuple(t)
    if len(t) != len(attrs):
        raise SchemaError(f"tuple {t} has wrong arity for {rel}")
    return tuple(as_value(v) for v in t)


def instance_extends(j: Instance, i: Instance) -> bool:
    """True iff ``j``'s schema extends ``i``'s and every tuple of ``i`` has a
    tuple of ``j`` agreeing with it on ``i``'s attributes."""
    if not schema_extends(j.schema, i.schema):
        return False
    for rel in i.schema:
        attrs = i.schema[rel]
        if not i.rows(rel):
            continue
        jidx = j.schema.index(rel)
        pos = [jidx[a] for a in attrs]
        proj = {tuple(row[p] for p in pos) for row in j.rows(rel)}
        if not i.rows(rel) <= proj:
            return False
    return True


def project(i: Instance, rel: str, attrs: Sequence[str]) -> set:
    """Restrictions of the tuples of ``rel`` to ``attrs`` (positional, in the order given)."""
    if rel not in i.schema:
        raise SchemaError(f"unknown relation {rel}")
    idx = i.schema.index(rel)
    missing = [a for a in attrs if a not in idx]
    if missing:
        raise SchemaError(f"unknown attribute(s) {missing} of {rel}")
    pos = [idx[a] for a in attrs]
    return {tuple(row[p] for p in pos) for row in i.rows(rel)}


class NullFactory:
    """Deterministic supply of fresh nulls, starting above any null already in use."""

    def __init__(self, start: int = 1):
        self.next = start

    @classmethod
    def above(cls, values: Iterable) -> "NullFactory":
        top = 0
        for v in values:
            if isinstance(v, Null) and v.id > top:
                top = v.id
        return cls(top + 1)

    def __call__(self) -> Null:
        n = Null(self.next)
        self.next += 1
        return n


def fresh_constants(avoid: Iterable, n: int, prefix: str = "_c") -> list:
    """``n`` constants guaranteed not to occur in ``avoid``."""
    avoid = set(avoid)
    out, k = [], 1
    while len(out) < n:
        c = f"{prefix}{k}"
        if c not in avoid:
            out.append(c)
        k += 1
    return out
