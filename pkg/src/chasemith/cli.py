"""Command-line front end.

Exit codes: 0 yes / success, 1 a definite no, 2 input error,
3 no witness within the length bound, 4 outside the supported fragment.
"""
from __future__ import annotations

import argparse
import sys

from . import serialize
from .chase import ChaseError
from .condtab import EmptyOutcome, certain_boolean, outcomes_condtab
from .dsl import DslError, format_goal, load
from .dynschema import applicability_trace, dyn_nonempty
from .entail import skb_satisfies
from .errors import ResourceError, Unsupported
from .lang import ConjunctiveQuery, StructureConstraint, compatible, satisfies_dependency
from .oracle import UniverseBound, enumerate_outcomes_seq, oracle_entails
from .procedures import DYNAMIC, STATIC, check_applicability_sequence, classify, is_full_scope
from .readiness import BoundTooSmall, NoWithinBound, UnsupportedGoal, Witness, ready
from .relmodel import SchemaError
from .skb import SkbError, outcomes_skb

OK, NO, INPUT, NOT_WITHIN, UNSUPPORTED = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _names(text):
    return [s for s in (text or "").replace(",", " ").split() if s]


def _sequence(ws, text):
    out = []
    for name in _names(text):
        try:
            out.append(ws.procedure(name))
        except KeyError:
            raise InputError(f"unknown procedure {name}") from None
    return out


def _goal(ws, name, goal_file=None):
    goals = dict(ws.goals)
    if goal_file:
        extra = load(goal_file).goals
        if not extra:
            raise InputError(f"{goal_file} defines no goal")
        if name is None:
            name = next(iter(extra))
        goals.update(extra)
    if name is None:
        raise InputError("no goal given")
    if name not in goals:
        raise InputError(f"unknown goal {name}")
    return goals[name]


def _yes_no(flag, out):
    print("YES" if flag else "NO", file=out)
    return OK if flag else NO


# -- commands ---------------------------------------------------------------------------

def cmd_check(ws, args, out):
    print(f"relations: {len(ws.schema)}  tuples: {ws.instance.size()}", file=out)
    for p in ws.catalog:
        c = classify(p)
        kinds = [k for k, v in (("safe-scope", c.safe_scope), ("safe-alteration", c.safe_alteration)) if v]
        if not kinds and is_full_scope(p):
            kinds = ["full-scope with cyclic tgds (dynamic path only)"]
        line = f"procedure {p.name}: {', '.join(kinds) or 'unclassified'}"
        if c.reasons and not kinds:
            line += " (" + "; ".join(c.reasons) + ")"
        print(line, file=out)
    for name, g in ws.goals.items():
        print(f"goal {name}: {format_goal(g)}", file=out)
    return OK


def cmd_applicability(ws, args, out):
    ps = _sequence(ws, args.seq)
    if args.dynamic:
        trace = applicability_trace(ps, ws.schema)
        for step in trace:
            r = step.result
            print(f"{step.procedure}: " + (str(r.schema) if r.ok else "fails: " + r.reason), file=out)
        return _yes_no(all(s.result.ok for s in trace), out)
    return _yes_no(check_applicability_sequence(ps, ws.schema), out)


def _static_nonempty(i, ps):
    schema = i.schema
    for p in ps:
        if not classify(p).safe_scope:
            raise Unsupported(f"procedure {p.name} is not safe-scope")
        if p.pre and not all(satisfies_dependency(i, d) for d in p.pre):
            return False
        if not all(compatible(t, schema) for t in p.tgds):
            return False
    return True


def cmd_nonempty(ws, args, out):
    ps = _sequence(ws, args.seq)
    if args.semantics == DYNAMIC:
        return _yes_no(dyn_nonempty(ws.instance, ps), out)
    return _yes_no(_static_nonempty(ws.instance, ps), out)


def cmd_apply(ws, args, out):
    ps = _sequence(ws, args.seq)
    if args.semantics == DYNAMIC:
        t = outcomes_condtab(ws.instance, ps)
        if isinstance(t, EmptyOutcome):
            print(serialize.dumps({"kind": "empty", "procedure": t.procedure, "reason": t.reason}), file=out)
            return NO
        print(serialize.dumps({"kind": "conditional", "conditional": serialize.conditional_json(t)}), file=out)
        return OK
    k = outcomes_skb(ws.instance, ps)
    print(serialize.dumps({"kind": "skb", "skb": serialize.skb_json(k)}), file=out)
    return OK


def cmd_entails(ws, args, out):
    ps = _sequence(ws, args.seq)
    d = _goal(ws, args.goal)
    if isinstance(d, (ConjunctiveQuery, StructureConstraint)):
        raise InputError("entails needs a tgd or egd goal; use certain for queries")
    k = outcomes_skb(ws.instance, ps)
    r = skb_satisfies(k, d)
    if args.json:
        doc = {"holds": r.holds, "dependency": serialize.dependency_json(d)}
        if r.counterexample is not None:
            doc["counterexample"] = str(r.counterexample)
        print(serialize.dumps(doc), file=out)
        return OK if r.holds else NO
    code = _yes_no(r.holds, out)
    if r.counterexample is not None:
        print(f"counterexample: {r.counterexample}", file=out)
    return code


def cmd_certain(ws, args, out):
    ps = _sequence(ws, args.seq)
    q = _goal(ws, args.query)
    if not isinstance(q, ConjunctiveQuery):
        raise InputError("certain needs a query goal")
    return _yes_no(certain_boolean((ws.instance, ps), q, args.semantics), out)


def cmd_ready(ws, args, out):
    goal = _goal(ws, args.goal, args.goal_file)
    catalog = _sequence(ws, args.catalog) if args.catalog else list(ws.catalog)
    if isinstance(goal, StructureConstraint):
        raise InputError("structure constraints are not readiness goals")
    ans = ready(ws.instance, catalog, goal, args.max_len, args.semantics, args.threads, args.prove_bound)
    o = ans.outcome
    if args.json:
        print(serialize.dumps(serialize.answer_json(ans)), file=out)
    elif isinstance(o, Witness):
        print("WITNESS " + (" ".join(o.sequence) if o.sequence else "(empty sequence)"), file=out)
    elif isinstance(o, NoWithinBound):
        print(f"NO-WITHIN-BOUND {o.bound if o.bound is not None else ''}".rstrip(), file=out)
        if o.note:
            print(o.note, file=out)
    else:
        print(f"UNSUPPORTED {o.reason}", file=out)
    if isinstance(o, Witness):
        return OK
    if isinstance(o, NoWithinBound):
        return NOT_WITHIN
    assert isinstance(o, UnsupportedGoal)
    return UNSUPPORTED


def _universe(ws, args):
    values = set(ws.instance.active_domain()) | set(_names(args.values))
    return UniverseBound(tuple(values), args.extra_tuples, args.extra_attrs, args.extra_rels)


def cmd_oracle_outcomes(ws, args, out):
    ps = _sequence(ws, args.seq)
    mode = DYNAMIC if args.dynamic else STATIC
    outs = enumerate_outcomes_seq(ws.instance, ps, _universe(ws, args), mode)
    docs = [serialize.instance_json(j) for j in sorted(outs, key=lambda j: j.canonical())]
    print(serialize.dumps({"count": len(docs), "outcomes": docs}), file=out)
    return OK


def cmd_oracle_certain(ws, args, out):
    ps = _sequence(ws, args.seq)
    q = _goal(ws, args.query)
    mode = DYNAMIC if args.dynamic else STATIC
    a = oracle_entails(enumerate_outcomes_seq(ws.instance, ps, _universe(ws, args), mode), q)
    code = _yes_no(a.value, out)
    print(f"outcomes: {a.outcomes}" + (" (vacuous)" if a.vacuous else ""), file=out)
    return code


# -- argument parsing -------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="chasemith", description="Reason about procedures, outcomes and data readiness.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("workspace", help=".wf workspace file")
        p.set_defaults(fn=fn)
        return p

    def semantics(p):
        p.add_argument("--semantics", choices=[STATIC, DYNAMIC], default=STATIC)

    add("check", cmd_check, "validate a workspace and classify its procedures")
    p = add("applicability", cmd_applicability, "can the last procedure of a sequence always be applied")
    p.add_argument("--seq", default="")
    p.add_argument("--dynamic", action="store_true", help="print the minimal-schema fold")
    p = add("nonempty", cmd_nonempty, "does the sequence have outcomes")
    p.add_argument("--seq", default="")
    semantics(p)
    p = add("apply", cmd_apply, "represent the outcomes of a sequence as JSON")
    p.add_argument("--seq", default="")
    semantics(p)
    p = add("entails", cmd_entails, "does every outcome satisfy a tgd or egd goal")
    p.add_argument("--seq", default="")
    p.add_argument("--goal", required=True)
    p.add_argument("--json", action="store_true")
    p = add("certain", cmd_certain, "does a boolean query hold in every outcome")
    p.add_argument("--seq", default="")
    p.add_argument("--query", required=True)
    semantics(p)
    p = add("ready", cmd_ready, "search for a sequence that readies the data for a goal")
    p.add_argument("--goal")
    p.add_argument("--goal-file")
    p.add_argument("--catalog", help="comma-separated procedure names (default: all)")
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prove-bound", action="store_true")
    p.add_argument("--json", action="store_true")
    semantics(p)

    op = sub.add_parser("oracle", help="brute-force enumeration over a bounded universe")
    osub = op.add_subparsers(dest="oracle_command", required=True)
    for name, fn in (("outcomes", cmd_oracle_outcomes), ("certain", cmd_oracle_certain)):
        p = osub.add_parser(name)
        p.add_argument("workspace")
        p.add_argument("--seq", default="")
        p.add_argument("--values", default="", help="extra universe values besides the active domain")
        p.add_argument("--extra-tuples", type=int, default=1)
        p.add_argument("--extra-attrs", type=int, default=0)
        p.add_argument("--extra-rels", type=int, default=0)
        p.add_argument("--dynamic", action="store_true")
        if name == "certain":
            p.add_argument("--query", required=True)
        p.set_defaults(fn=fn)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = _parser().parse_args(argv)
    try:
        ws = load(args.workspace)
        return args.fn(ws, args, out)
    except (DslError, InputError, SchemaError, OSError, BoundTooSmall) as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT
    except (Unsupported, SkbError, ChaseError) as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return UNSUPPORTED
    except ResourceError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
