"""Small builders shared by the tests."""
import os

from chasemith.dsl import load, parse_spec
from chasemith.relmodel import Instance, Schema

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")

VISITS = ["facility", "pId", "timestp"]
VISITS_SCHEMA = Schema({"EVisits": VISITS, "LocVisits": VISITS})
EVISITS = [("1234", "33", "070916 12:00"), ("2087", "91", "090916 03:10")]
LOCVISITS = [("1234", "33", "070916 12:00"), ("1222", "33", "020715 07:50")]


def visits_i():
    return Instance(VISITS_SCHEMA, {"EVisits": EVISITS, "LocVisits": LOCVISITS})


def migrated_visits():
    return Instance(VISITS_SCHEMA, {"EVisits": EVISITS, "LocVisits": LOCVISITS + [EVISITS[1]]})


def corpus(name):
    return load(os.path.join(CORPUS, name))


def goal(text):
    """A goal body such as ``tgd: R(A: x) -> T(A: x)`` or ``query: R(A: x)``."""
    return parse_spec("goal g { " + text + " }").goals["g"]


def tgd(text):
    return goal("tgd: " + text)


def egd(text):
    return goal("egd: " + text)


def query(text):
    return goal("query: " + text)


def procedure(text, name="p"):
    return parse_spec(f"procedure {name} {{ {text} }}").catalog[0]


def safe(tgds, name="p"):
    """Safe-scope procedure with the given tgd texts."""
    from chasemith.lang import StructureConstraint, TotalQuery
    from chasemith.procedures import Procedure

    ts = [tgd(t) for t in tgds]
    heads = sorted({a.rel for t in ts for a in t.head})
    return Procedure(name, scope=[StructureConstraint(r) for r in heads], post=ts,
                     preserve=[TotalQuery(r) for r in heads])
