"""Reasoning about data-processing procedures, their outcomes, and data readiness."""
from .dsl import Workspace, load, parse_spec
from .errors import ResourceError, Unsupported
from .lang import ConjunctiveQuery, Egd, NamedAtom, StructureConstraint, Tgd, TotalQuery, Var
from .procedures import Procedure, classify
from .relmodel import Instance, Null, Schema

__all__ = [
    "ConjunctiveQuery",
    "Egd",
    "Instance",
    "NamedAtom",
    "Null",
    "Procedure",
    "ResourceError",
    "Schema",
    "StructureConstraint",
    "Tgd",
    "TotalQuery",
    "Unsupported",
    "Var",
    "Workspace",
    "classify",
    "load",
    "parse_spec",
]
