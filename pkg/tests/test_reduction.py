"""Operational semantics: rules, redex enumeration, strategies, graphs, SN."""

import pytest

from rcl.bridge import parse_plain, to_resource
from rcl.enum_terms import linear_terms
from rcl.reduction import (
    ReductionError,
    classify_sn,
    enumerate_redexes,
    explore_graph,
    longest_path,
    normalize,
    reduce_step,
)
from rcl.syntax import parse_term, term_str
from rcl.terms import (
    alpha_eq,
    alpha_key,
    canonical_key,
    check_linear,
    equiv_class,
    free_vars,
    is_normal_form,
)

OMEGA = to_resource(parse_plain(r"(\x. x x) (\x. x x)"))


# ---------------------------------------------------------------------------
# Individual rules

def _only_step(text, rule=None):
    t = parse_term(text)
    steps = enumerate_redexes(t)
    if rule is not None:
        steps = [s for s in steps if s.rule == rule]
    assert len(steps) >= 1
    return t, steps[0]


def test_beta():
    t, s = _only_step(r"(\x. del x. y) z", "beta")
    assert reduce_step(t, s) == parse_term("del z. y")


def test_gamma1():
    t, s = _only_step(r"dup x as (a,b). \y. a b y", "gamma1")
    assert reduce_step(t, s) == parse_term(r"\y. dup x as (a,b). a b y")


def test_gamma2_gamma3():
    t = parse_term("dup x as (a,b). (a b) y")
    rules = {s.rule for s in enumerate_redexes(t)}
    assert "gamma2" in rules and "gamma3" not in rules

    t = parse_term("dup x as (a,b). y (a b)")
    rules = {s.rule for s in enumerate_redexes(t)}
    assert "gamma3" in rules and "gamma2" not in rules


def test_omega1():
    t, s = _only_step(r"\x. del y. x", "omega1")
    assert reduce_step(t, s) == parse_term(r"del y. \x. x")


def test_omega2():
    t, s = _only_step("(del x. m) n", "omega2")
    assert reduce_step(t, s) == parse_term("del x. m n")


def test_omega3():
    t, s = _only_step("m (del x. n)", "omega3")
    assert reduce_step(t, s) == parse_term("del x. m n")


def test_gamma_omega1():
    t, s = _only_step("dup x as (a,b). del y. a b", "gamma-omega1")
    assert reduce_step(t, s) == parse_term("del y. dup x as (a,b). a b")


def test_gamma_omega2_is_renaming():
    t = parse_term("dup x as (a,b). del a. b v")
    steps = [s for s in enumerate_redexes(t) if s.rule == "gamma-omega2"]
    assert steps
    out = reduce_step(t, steps[0])
    assert alpha_eq(out, parse_term("x v"))


def test_gamma_omega2_via_swap_axiom():
    # the erased variable is the right split; the swap axiom exposes the redex
    t = parse_term("dup x as (a,b). del b. a v")
    steps = [s for s in enumerate_redexes(t) if s.rule == "gamma-omega2"]
    assert steps and steps[0].eps
    out = reduce_step(t, steps[0])
    assert alpha_eq(out, parse_term("x v"))


# ---------------------------------------------------------------------------
# Enumeration

def test_nf_has_no_redexes():
    assert enumerate_redexes(parse_term(r"\x. x")) == []


def test_redexes_cover_the_equivalence_class():
    # the term itself has no direct rule match, only its swap does
    t = parse_term(r"\x. del x. del y. z")
    steps = enumerate_redexes(t)
    assert steps, "the erasure swap exposes an omega1 redex"


def test_enumeration_is_equiv_stable():
    for t in linear_terms(6):
        base = {(s.rule, canonical_key(s.after)) for s in enumerate_redexes(t)}
        for u in equiv_class(t):
            got = {(s.rule, canonical_key(s.after)) for s in enumerate_redexes(u)}
            assert got == base, term_str(u)


def test_reduce_step_rejects_stale():
    t, s = _only_step(r"(\x. x) y")
    with pytest.raises(ReductionError, match="stale"):
        reduce_step(parse_term(r"(\x. x) z"), s)


def test_steps_preserve_wf_and_fv():
    for t in linear_terms(7):
        for s in enumerate_redexes(t):
            after = reduce_step(t, s)
            assert check_linear(after).ok
            assert free_vars(after) == free_vars(t)


# ---------------------------------------------------------------------------
# Normalisation

def test_normalize_examples():
    r = normalize(parse_term(r"(\x. del x. y) z"))
    assert r.status == "nf" and r.term == parse_term("del z. y")
    assert len(r.trace) == 1

    r = normalize(parse_term(r"\x. x"))
    assert r.status == "nf" and len(r.trace) == 0

    r = normalize(OMEGA, max_steps=50)
    assert r.status == "exceeded"


def test_normalize_strategies_agree_here():
    for text in [r"(\x. del x. y) z", "dup x as (a,b). (a b) y",
                 r"(\x. dup x as (y,z). y z) (del u. v)"]:
        t = parse_term(text)
        lo = normalize(t, "leftmost-outermost", 100)
        ex = normalize(t, "exhaustive-first", 2000)
        assert lo.status == ex.status == "nf"
        assert canonical_key(lo.term) == canonical_key(ex.term)


def test_normalize_trace_replays():
    t = parse_term(r"(\x. dup x as (y,z). y z) (del u. v)")
    r = normalize(t)
    current = t
    for step in r.trace:
        current = reduce_step(current, step)
    assert current == r.term


def test_example4_chain():
    start = parse_term("dup u as (u1,u2). dup v as (v1,v2). (del u1. v1) (del u2. v2)")
    g, complete = explore_graph(start)
    assert complete
    displayed = parse_term("dup v as (v1,v2). v1 (del u. v2)")
    assert canonical_key(displayed) in g.nodes


# ---------------------------------------------------------------------------
# SN classification

def test_classify_sn_examples():
    res = classify_sn(parse_term(r"(\x. del x. y) z"))
    assert res.status == "sn" and res.longest == 1

    res = classify_sn(parse_term(r"\x. x"))
    assert res.status == "sn" and res.graph.node_count == 1 and res.longest == 0

    res = classify_sn(OMEGA, budget_nodes=500, budget_steps=2000)
    assert res.status == "non-sn"
    assert res.cycle is not None and len(res.cycle) >= 2


def test_classify_sn_unknown_on_tiny_budget():
    big = to_resource(parse_plain(r"(\x. \y. y) ((\x. x x) (\x. x x))"))
    res = classify_sn(big, budget_nodes=2, budget_steps=3)
    assert res.status in ("unknown", "non-sn")


def test_longest_path_requires_complete_acyclic():
    res = classify_sn(OMEGA, budget_nodes=500, budget_steps=2000)
    with pytest.raises(ReductionError):
        longest_path(res.graph)


def test_graph_json_shape():
    res = classify_sn(parse_term(r"(\x. del x. y) z"))
    data = res.graph.to_json()
    assert set(data) == {"root", "complete", "nodes", "edges"}
    assert data["root"] in data["nodes"]
    for src, es in data["edges"].items():
        for e in es:
            assert e["target"] in data["nodes"]
            assert e["rule"]


def test_sn_graph_edges_all_validate():
    for text in [r"(\x. dup x as (y,z). y z) (del u. v)",
                 r"(\f. \x. f x) (\y. y)" ]:
        t = to_resource(parse_plain(text)) if "\\f" in text else parse_term(text)
        res = classify_sn(t)
        assert res.status == "sn"
        for key, edges in res.graph.edges.items():
            node = res.graph.nodes[key]
            for step, dst in edges:
                after = reduce_step(node, step)
                assert canonical_key(after) == dst
