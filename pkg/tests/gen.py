"""Random generators for small schemas, instances and procedures."""

from chasemith.lang import NamedAtom, StructureConstraint, Tgd, TotalQuery, Var, is_acyclic
from chasemith.procedures import Procedure
from chasemith.relmodel import Instance, Schema

SMALL = Schema({"R": ["A"], "S": ["A"], "T": ["A"], "E": ["A", "B"]})
VARS = [Var("x"), Var("y"), Var("z")]


def random_instance(rng, schema=SMALL, values=("1", "2", "3"), max_tuples=6):
    rows = {}
    n = rng.randint(0, max_tuples)
    rels = list(schema)
    for _ in range(n):
        rel = rng.choice(rels)
        rows.setdefault(rel, set()).add(tuple(rng.choice(values) for _ in schema[rel]))
    return Instance(schema, rows)


def _atom(rng, schema, rel, pool, consts=()):
    binds = []
    for a in schema[rel]:
        if consts and rng.random() < 0.1:
            binds.append((a, rng.choice(consts)))
        else:
            binds.append((a, rng.choice(pool)))
    return NamedAtom(rel, binds)


def random_tgd(rng, schema, heads, consts=()):
    rels = list(schema)
    body = [_atom(rng, schema, rng.choice(rels), VARS, consts) for _ in range(rng.randint(1, 2))]
    bvars = sorted({v for a in body for v in a.vars()}, key=lambda v: v.name)
    if not bvars:
        bvars = [Var("x")]
        body.append(NamedAtom("R", {"A": Var("x")}))
    head = [_atom(rng, schema, rng.choice(heads), bvars)]
    return Tgd(body, head)


def random_safe_procedure(rng, name, schema=SMALL, max_tgds=3, consts=(), prefer=()):
    while True:
        if prefer and rng.random() < 0.7:
            heads = rng.sample(sorted(prefer), min(len(prefer), rng.randint(1, 2)))
        else:
            heads = rng.sample(list(schema), rng.randint(1, 2))
        tgds = [random_tgd(rng, schema, heads, consts) for _ in range(rng.randint(1, max_tgds))]
        if rng.random() < 0.5:
            # chain through one of the conclusion relations
            mid = rng.choice(heads)
            b = _atom(rng, schema, mid, VARS[:2])
            tgds.append(Tgd([b], [_atom(rng, schema, rng.choice(heads), b.vars())]))
            tgds = tgds[-max_tgds:]
        if not is_acyclic(tgds):
            continue
        used = sorted({a.rel for t in tgds for a in t.head})
        return Procedure(
            name,
            scope=[StructureConstraint(r) for r in used],
            post=tgds,
            preserve=[TotalQuery(r) for r in used],
        )


def random_safe_sequence(rng, n, schema=SMALL, consts=()):
    ps = []
    prefer = set()
    for k in range(n):
        p = random_safe_procedure(rng, f"p{k + 1}", schema, consts=consts, prefer=prefer)
        body = {a.rel for t in p.post for a in t.body}
        heads = {a.rel for t in p.post for a in t.head}
        prefer = (body & heads) or body
        ps.append(p)
    return ps


# -- dynamic-schema sequences --------------------------------------------------------

DYN = Schema({"R": ["A"], "E": ["A", "B"]})
# attributes an atom may mention, including ones an alteration can add
DYN_VOCAB = {"R": ["A", "B"], "E": ["A", "B"], "Q": ["A"]}
ALTERATIONS = [("R", ("A", "B")), ("Q", ("A",))]


def random_alteration(rng, name):
    rel, attrs = rng.choice(ALTERATIONS)
    return Procedure(name, post=[StructureConstraint(rel, attrs)])


def _dyn_atom(rng, rel, pool, must=()):
    attrs = [a for a in DYN_VOCAB[rel] if a in must or rng.random() < 0.7] or [DYN_VOCAB[rel][0]]
    return NamedAtom(rel, [(a, rng.choice(pool)) for a in attrs])


def random_dyn_safe(rng, name, rels, cyclic=False):
    """``cyclic`` also admits full tgds whose premise reads the conclusion relation."""
    while True:
        heads = rng.sample(rels, 1)
        tgds = []
        for _ in range(rng.randint(1, 2)):
            body = [_dyn_atom(rng, rng.choice(rels), VARS) for _ in range(rng.randint(1, 2))]
            bvars = sorted({v for a in body for v in a.vars()}, key=lambda v: v.name)
            tgds.append(Tgd(body, [_dyn_atom(rng, heads[0], bvars)]))
        if cyclic or is_acyclic(tgds):
            return Procedure(name, scope=[StructureConstraint(heads[0])], post=tgds,
                             preserve=[TotalQuery(heads[0])])


def random_dyn_sequence(rng, n, cyclic=False):
    """Safe-scope and safe-alteration procedures; at most one alteration."""
    ps = []
    rels = ["R", "E"]
    altered = False
    for k in range(n):
        if not altered and rng.random() < 0.5:
            p = random_alteration(rng, f"a{k + 1}")
            altered = True
            if p.post[0].rel == "Q":
                rels = rels + ["Q"]
        else:
            p = random_dyn_safe(rng, f"p{k + 1}", rels, cyclic)
        ps.append(p)
    return ps
