"""The .wf workspace language: schema, instance, procedures and goals.

    schema    { relation R(A, B) }
    instance  { R(A: 1, B: "x") }
    procedure p {
        scope    { T[*] }
        pre      { }
        post     { tgd: R(A: x, B: y) -> T(A: x) }
        preserve { total T }
    }
    goal g    { query: T(A: x) }

Preservation queries without a ``(x, y):`` prefix have every variable free; goal
queries without one are boolean.

Lowercase identifiers are variables; constants are quoted or numeric; ``#``
starts a comment.  Nulls (``_:n1``) may appear in instance facts only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from .lang import (
    ConjunctiveQuery,
    Egd,
    NamedAtom,
    StructureConstraint,
    Tgd,
    TotalQuery,
    Var,
    atoms_vars,
    format_term,
)
from .procedures import Procedure
from .relmodel import Instance, Null, Schema, SchemaError

GRAMMAR = r"""
start: _block*
_block: schema_block | instance_block | procedure_block | goal_block

schema_block: "schema" "{" relation_decl* "}"
relation_decl: "relation" NAME "(" [NAME ("," NAME)*] ")"

instance_block: "instance" "{" fact* "}"
fact: NAME "(" [binding ("," binding)*] ")"

procedure_block: "procedure" NAME "{" _section* "}"
_section: scope_sec | pre_sec | post_sec | preserve_sec
scope_sec: "scope" "{" (structure ";"?)* "}"
pre_sec: "pre" "{" (_dep ";"?)* "}"
post_sec: "post" "{" (_dep ";"?)* "}"
preserve_sec: "preserve" "{" (_pres ";"?)* "}"
_pres: total | cq
total: "total" NAME

goal_block: "goal" NAME "{" _goal_body "}"
_goal_body: query_goal | tgd | egd
query_goal: "query" ":" [free] atoms

_dep: tgd | egd | structure
tgd: "tgd" ":" atoms "->" [exists] atoms
exists: "exists" NAME ("," NAME)* "."
egd: "egd" ":" atoms "->" NAME "=" NAME
structure: NAME "[" (STAR | NAME ("," NAME)*) "]"

cq: [free] atoms
free: "(" [NAME ("," NAME)*] ")" ":"
atoms: atom (("," | "&") atom)*
atom: NAME "(" [binding ("," binding)*] ")"
binding: NAME ":" _term
_term: STRING | NUMBER | NULL | NAME

STAR: "*"
NAME: /[A-Za-z_][A-Za-z0-9_]*/
NULL.2: /_:n[0-9]+/
NUMBER: /-?[0-9]+(\.[0-9]+)?/
STRING: /"(\\.|[^"\\])*"/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=True)


class DslError(ValueError):
    def __init__(self, msg, line=None, column=None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass
class Workspace:
    schema: Schema
    instance: Instance
    catalog: List[Procedure] = field(default_factory=list)
    goals: Dict[str, object] = field(default_factory=dict)

    def procedure(self, name) -> Procedure:
        for p in self.catalog:
            if p.name == name:
                return p
        raise KeyError(name)

    def __eq__(self, other):
        return (isinstance(other, Workspace) and self.schema == other.schema and self.instance == other.instance
                and self.catalog == other.catalog and self.goals == other.goals)


def _err(tok, msg):
    line = getattr(tok, "line", None)
    col = getattr(tok, "column", None)
    return DslError(msg, line, col)


def _value(tok: Token, allow_null=False, allow_var=True):
    if tok.type == "STRING":
        return json.loads(tok)
    if tok.type == "NUMBER":
        return str(int(tok)) if "." not in tok else str(tok)
    if tok.type == "NULL":
        if not allow_null:
            raise _err(tok, f"null {tok} is only allowed in instance facts")
        return Null(int(tok[3:]))
    name = str(tok)
    if not allow_var:
        raise _err(tok, f"{name} is not a constant; quote it")
    if not (name[0].islower() or name[0] == "_"):
        raise _err(tok, f"{name} looks like a constant; quote it or start variables in lowercase")
    return Var(name)


def _check_attrs(tok, names):
    seen = set()
    for n in names:
        if n in seen:
            raise _err(tok, f"duplicate attribute {n}")
        seen.add(n)


class _Build(Transformer):
    def __init__(self):
        super().__init__()
        self.relations = {}
        self.facts = []
        self.procedures = []
        self.goals = {}

    # -- terms and atoms
    def binding(self, items):
        name, term = items
        return (name, term)

    def atom(self, items):
        rel, *binds = items
        binds = [b for b in binds if b is not None]
        _check_attrs(rel, [str(a) for a, _ in binds])
        return NamedAtom(str(rel), [(str(a), _value(t)) for a, t in binds]), rel

    def atoms(self, items):
        return list(items)

    def free(self, items):
        return [Var(str(t)) for t in items if t is not None]

    def cq(self, items, default_free=True):
        free, atoms = items
        plain = [a for a, _ in atoms]
        vs = atoms_vars(plain)
        if free is None:
            free = vs if default_free else ()
        for v in free:
            if v not in vs:
                raise _err(atoms[0][1], f"free variable {v} does not occur in the query")
        return ConjunctiveQuery(tuple(free), tuple(plain))

    # -- dependencies
    def exists(self, items):
        return [Var(str(t)) for t in items]

    def tgd(self, items):
        body, ex, head = items
        b = [a for a, _ in body]
        h = [a for a, _ in head]
        bv = set(atoms_vars(b))
        ex = ex or []
        for v in ex:
            if v in bv:
                raise _err(head[0][1], f"existential variable {v} also occurs in the premise")
        for v in atoms_vars(h):
            if v not in bv and v not in ex:
                raise _err(head[0][1], f"conclusion variable {v} is neither in the premise nor declared existential")
        return Tgd(b, h)

    def egd(self, items):
        body, lhs, rhs = items
        b = [a for a, _ in body]
        try:
            return Egd(b, _value(lhs), _value(rhs))
        except ValueError as e:
            raise _err(lhs, str(e))

    def structure(self, items):
        rel, *rest = items
        if len(rest) == 1 and rest[0].type == "STAR":
            return StructureConstraint(str(rel))
        _check_attrs(rel, [str(a) for a in rest])
        return StructureConstraint(str(rel), tuple(str(a) for a in rest))

    def total(self, items):
        return TotalQuery(str(items[0]))

    # -- blocks
    def relation_decl(self, items):
        rel, *attrs = items
        attrs = [str(a) for a in attrs if a is not None]
        _check_attrs(rel, attrs)
        if str(rel) in self.relations:
            raise _err(rel, f"relation {rel} declared twice")
        self.relations[str(rel)] = attrs

    def fact(self, items):
        rel, *binds = items
        binds = [b for b in binds if b is not None]
        _check_attrs(rel, [str(a) for a, _ in binds])
        self.facts.append((rel, {str(a): _value(t, allow_null=True, allow_var=False) for a, t in binds}))

    def scope_sec(self, items):
        return ("scope", items)

    def pre_sec(self, items):
        return ("pre", items)

    def post_sec(self, items):
        return ("post", items)

    def preserve_sec(self, items):
        return ("preserve", items)

    def procedure_block(self, items):
        name, *sections = items
        parts = {}
        for kind, content in sections:
            if kind in parts:
                raise _err(name, f"procedure {name} has two {kind} sections")
            parts[kind] = content
        if any(p.name == str(name) for p in self.procedures):
            raise _err(name, f"procedure {name} defined twice")
        self.procedures.append(Procedure(str(name), **parts))

    def query_goal(self, items):
        # goals are boolean unless they list free variables
        return self.cq(items, default_free=False)

    def goal_block(self, items):
        name, body = items
        if str(name) in self.goals:
            raise _err(name, f"goal {name} defined twice")
        self.goals[str(name)] = body


def parse_spec(text: str) -> Workspace:
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        raise DslError(_describe(e), e.line, e.column) from None
    b = _Build()
    try:
        b.transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, DslError):
            raise e.orig_exc from None
        raise
    schema = Schema(b.relations)
    rows = {}
    for rel, t in b.facts:
        if str(rel) not in schema:
            raise _err(rel, f"unknown relation {rel}")
        attrs = set(schema[str(rel)])
        if set(t) != attrs:
            missing = sorted(attrs - set(t))
            extra = sorted(set(t) - attrs)
            msg = f"fact over {rel}: " + ("missing " + ", ".join(missing) if missing else "") + \
                  ("; " if missing and extra else "") + ("unknown attribute " + ", ".join(extra) if extra else "")
            raise _err(rel, msg)
        rows.setdefault(str(rel), []).append(t)
    try:
        inst = Instance(schema, rows)
    except SchemaError as e:
        raise DslError(str(e)) from None
    return Workspace(schema, inst, b.procedures, b.goals)


def _describe(e) -> str:
    if isinstance(e, UnexpectedCharacters):
        return f"unexpected character {e.char!r}"
    if isinstance(e, UnexpectedEOF):
        return "unexpected end of input"
    if isinstance(e, UnexpectedToken):
        exp = sorted(e.expected)
        return f"unexpected {e.token!r}; expected one of {', '.join(exp[:8])}"
    return str(e)


def load(path) -> Workspace:
    with open(path, encoding="utf-8") as f:
        return parse_spec(f.read())


# -- formatting -------------------------------------------------------------------------

def format_dependency(d) -> str:
    if isinstance(d, Tgd):
        return f"tgd: {d}"
    if isinstance(d, Egd):
        return f"egd: {d}"
    return str(d)


def format_query(q) -> str:
    if isinstance(q, TotalQuery):
        return str(q)
    atoms = ", ".join(map(str, q.atoms))
    if tuple(q.free) == tuple(atoms_vars(q.atoms)):
        return atoms
    return "(" + ", ".join(map(str, q.free)) + "): " + atoms


def format_goal(g) -> str:
    if isinstance(g, ConjunctiveQuery):
        atoms = ", ".join(map(str, g.atoms))
        if g.free:
            atoms = "(" + ", ".join(map(str, g.free)) + "): " + atoms
        return "query: " + atoms
    return format_dependency(g)


def format_procedure(p: Procedure) -> str:
    out = [f"procedure {p.name} {{"]
    out.append("  scope { " + "; ".join(map(str, p.scope)) + " }")
    out.append("  pre { " + "; ".join(map(format_dependency, p.pre)) + " }")
    out.append("  post { " + "; ".join(map(format_dependency, p.post)) + " }")
    out.append("  preserve { " + "; ".join(map(format_query, p.preserve)) + " }")
    out.append("}")
    return "\n".join(out)


def format_workspace(ws: Workspace) -> str:
    out = ["schema {"]
    for rel, attrs in ws.schema.items():
        out.append(f"  relation {rel}({', '.join(attrs)})")
    out.append("}")
    out.append("instance {")
    for rel in ws.schema:
        for row in ws.instance.sorted_rows(rel):
            binds = ", ".join(f"{a}: {format_term(v)}" for a, v in zip(ws.schema[rel], row))
            out.append(f"  {rel}({binds})")
    out.append("}")
    for p in ws.catalog:
        out.append(format_procedure(p))
    for name, g in ws.goals.items():
        out.append(f"goal {name} {{ {format_goal(g)} }}")
    return "\n".join(out) + "\n"
