"""Command-line entry point.

Exit codes: 0 for success or a positive verdict, 1 for a negative verdict
(ill-formed term, invalid derivation, not strongly normalising), 2 for usage
errors.  `--format json` switches to machine-readable output.  Terms are
accepted inline or from a file via `@path`.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bridge
from .deriv import check_derivation, derivation_to_json, load_derivation, nf_type
from .reduction import (
    DEFAULT_BUDGET_NODES,
    DEFAULT_BUDGET_STEPS,
    classify_sn,
    explore_graph,
    normalize,
)
from .subst import substitute
from .syntax import ParseError, parse_sterm, parse_term, term_str
from .terms import check_linear, pos_str
from .transport import certify_sn
from .types import basis_str, strict_str


def _read_arg(text: str) -> str:
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            return fh.read()
    return text


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_check(args) -> int:
    t = parse_term(_read_arg(args.term))
    report = check_linear(t)
    payload = {
        "ok": report.ok,
        "violations": [
            {"position": pos_str(p), "rule": rule, "variable": var}
            for p, rule, var in report.violations
        ],
    }
    lines = ["ok" if report.ok else "not linear"]
    lines += [f"  {pos_str(p)}: {rule} ({var})" for p, rule, var in report.violations]
    _emit(args, payload, "\n".join(lines))
    return 0 if report.ok else 1


def cmd_embed(args) -> int:
    t = bridge.parse_plain(_read_arg(args.term))
    out = bridge.to_resource(t)
    _emit(args, {"term": term_str(out)}, term_str(out))
    return 0


def cmd_project(args) -> int:
    t = parse_term(_read_arg(args.term))
    out = bridge.to_plain(t)
    _emit(args, {"term": bridge.plain_str(out)}, bridge.plain_str(out))
    return 0


def cmd_subst(args) -> int:
    m = parse_term(_read_arg(args.body))
    n = parse_term(_read_arg(args.replacement))
    out = substitute(m, n, args.variable)
    _emit(args, {"term": term_str(out)}, term_str(out))
    return 0


def cmd_reduce(args) -> int:
    t = parse_term(_read_arg(args.term))
    result = normalize(t, strategy=args.strategy, max_steps=args.max_steps)
    trace_lines = []
    current = t
    for step in result.trace:
        from .reduction import reduce_step

        current = reduce_step(current, step)
        trace_lines.append(f"{step.rule} @ {pos_str(step.pos)} : {term_str(current)}")
    payload = {
        "status": result.status,
        "steps": [
            {"rule": s.rule, "position": pos_str(s.pos),
             "equiv_adjustments": [{"axiom": ax, "position": pos_str(p)} for ax, p in s.eps]}
            for s in result.trace
        ],
        "term": term_str(result.term) if result.term is not None else None,
    }
    lines = trace_lines
    if result.status == "nf":
        lines.append(f"normal form: {term_str(result.term)}")
    else:
        lines.append(f"step budget exhausted after {len(result.trace)} steps")
    _emit(args, payload, "\n".join(lines))
    return 0 if result.status == "nf" else 1


def cmd_graph(args) -> int:
    t = parse_term(_read_arg(args.term))
    result = classify_sn(t, budget_nodes=args.budget_nodes, budget_steps=args.budget_steps)
    payload = {"status": result.status}
    if result.graph is not None:
        payload["graph"] = result.graph.to_json()
        if result.status == "sn":
            payload["longest_path"] = result.longest
    if result.cycle is not None:
        payload["cycle"] = [term_str(u) for u in result.cycle]
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        g = result.graph
        print(f"status: {result.status}")
        if g is not None:
            print(f"nodes: {g.node_count}  edges: {g.edge_count}")
        if result.status == "sn":
            print(f"longest path: {result.longest}")
        if result.cycle is not None:
            print("cycle witness:")
            for u in result.cycle:
                print(f"  {term_str(u)}")
    return 0 if result.status == "sn" else 1


def cmd_nf_type(args) -> int:
    t = parse_term(_read_arg(args.term))
    d = nf_type(t)
    payload = derivation_to_json(d)
    text = f"{basis_str(d.basis)} |- {term_str(d.subject)} : {strict_str(d.stype)}"
    _emit(args, payload, text)
    return 0


def cmd_certify_sn(args) -> int:
    t = parse_term(_read_arg(args.term))
    result = certify_sn(t, budget_nodes=args.budget_nodes, budget_steps=args.budget_steps)
    if result.status == "certified":
        d = result.derivation
        payload = {"status": "certified", "derivation": derivation_to_json(d)}
        text = (f"certified: {basis_str(d.basis)} |- {term_str(d.subject)} "
                f": {strict_str(d.stype)}")
        _emit(args, payload, text)
        return 0
    if result.status == "not-sn":
        payload = {"status": "not-sn",
                   "cycle": [term_str(u) for u in result.cycle or ()]}
        _emit(args, payload, "not strongly normalising")
        return 1
    _emit(args, {"status": "unknown"}, "unknown: budget exhausted")
    return 1


def cmd_check_deriv(args) -> int:
    d = load_derivation(args.file)
    errors = check_derivation(d, mode=args.type_eq)
    payload = {"ok": not errors, "errors": errors}
    text = "ok" if not errors else "\n".join(["invalid:"] + [f"  {e}" for e in errors])
    _emit(args, payload, text)
    return 0 if not errors else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcl", description=__doc__)
    parser.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="linearity check")
    p.add_argument("term")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("embed", help="translate a plain lambda term")
    p.add_argument("term")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("project", help="translate back to a plain lambda term")
    p.add_argument("term")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("subst", help="meta-level substitution body[replacement/variable]")
    p.add_argument("body")
    p.add_argument("replacement")
    p.add_argument("variable")
    p.set_defaults(func=cmd_subst)

    p = sub.add_parser("reduce", help="normalise with a strategy")
    p.add_argument("term")
    p.add_argument("--strategy", choices=("lo", "leftmost-outermost", "exhaustive",
                                          "exhaustive-first"), default="leftmost-outermost")
    p.add_argument("--max-steps", type=int, default=1000)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("graph", help="explore the reduction graph and classify SN")
    p.add_argument("term")
    p.add_argument("--budget-nodes", type=int, default=DEFAULT_BUDGET_NODES)
    p.add_argument("--budget-steps", type=int, default=DEFAULT_BUDGET_STEPS)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("nf-type", help="type a normal form")
    p.add_argument("term")
    p.set_defaults(func=cmd_nf_type)

    p = sub.add_parser("certify-sn", help="construct a typing certificate for SN")
    p.add_argument("term")
    p.add_argument("--budget-nodes", type=int, default=DEFAULT_BUDGET_NODES)
    p.add_argument("--budget-steps", type=int, default=DEFAULT_BUDGET_STEPS)
    p.set_defaults(func=cmd_certify_sn)

    p = sub.add_parser("check-deriv", help="validate a derivation file")
    p.add_argument("file")
    p.add_argument("--type-eq", choices=("multiset", "idempotent"), default="multiset")
    p.set_defaults(func=cmd_check_deriv)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
