"""JSON views of instances, knowledge bases, conditional instances and answers.

Every document carries ``"format": "chasemith/1"``; keys are sorted and tuples
appear in canonical order, so equal objects serialize to equal bytes.
"""
from __future__ import annotations

import json

from .lang import ConjunctiveQuery, Egd, Tgd
from .relmodel import Instance, Null

FORMAT = "chasemith/1"


def value_json(v):
    return str(v) if isinstance(v, Null) else v


def schema_json(s):
    return {r: list(a) for r, a in s.items()}


def instance_json(i: Instance) -> dict:
    return {
        "schema": schema_json(i.schema),
        "relations": {r: [[value_json(v) for v in row] for row in i.sorted_rows(r)] for r in i.schema},
    }


def skb_json(k) -> dict:
    from .skb import minimal_instance

    doc = {
        "base": instance_json(k.base),
        "gamma": [str(t) for t in k.gamma],
        "scope": sorted(k.scope),
        "flags": k.flags(),
    }
    if k.full:
        doc["minimal_instance"] = instance_json(minimal_instance(k))
    return doc


def condition_json(dnf):
    from .condtab import _clause_key, _lit_key

    return [[[value_json(a), value_json(b)] for a, b in sorted(c, key=_lit_key)] for c in sorted(dnf, key=_clause_key)]


def conditional_json(t) -> dict:
    return {
        "schema": schema_json(t.schema),
        "relations": {
            r: [{"tuple": [value_json(v) for v in row], "condition": condition_json(c)} for row, c in t.sorted_rows(r)]
            for r in t.schema
        },
    }


def dependency_json(d) -> dict:
    if isinstance(d, Tgd):
        return {"kind": "tgd", "text": str(d)}
    if isinstance(d, Egd):
        return {"kind": "egd", "text": str(d)}
    if isinstance(d, ConjunctiveQuery):
        return {"kind": "query", "text": str(d)}
    return {"kind": "structure", "text": str(d)}


def answer_json(ans) -> dict:
    from .readiness import NoWithinBound, Witness

    o = ans.outcome
    doc = {"outcome": ans.kind, "stats": dict(sorted(ans.stats.items()))}
    if isinstance(o, Witness):
        doc["witness"] = list(o.sequence)
    elif isinstance(o, NoWithinBound):
        doc["bound"] = o.bound
        if o.note:
            doc["note"] = o.note
    else:
        doc["reason"] = o.reason
    return doc


def dumps(payload: dict) -> str:
    doc = {"format": FORMAT}
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False)
