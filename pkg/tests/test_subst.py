"""The substitution engine: evaluation rules, termination measure, traces."""

import random
from collections import Counter
from itertools import permutations

import pytest

from rcl.enum_terms import linear_terms, sterms_with_sub
from rcl.subst import (
    Sub,
    SubstError,
    check_sterm,
    contains_sub,
    eval_subst,
    make_sub,
    measure,
    mul_multiset,
    multiset_gt,
    replay_trace,
    s_subterm_at,
    sfree_var_list,
    step_subst,
    sub_positions,
    substitute,
    substitute_many,
)
from rcl.syntax import parse_sterm, parse_term, term_str
from rcl.terms import alpha_eq, check_linear, free_vars


# ---------------------------------------------------------------------------
# Syntax and free variables

def test_sterm_parsing():
    s = parse_sterm("x[y/x]")
    assert s == Sub(parse_term("x"), parse_term("y"), "x")
    s = parse_sterm("(del x. y)[z/x]")
    assert isinstance(s, Sub)


def test_sfree_var_list_examples():
    assert sfree_var_list(parse_sterm("(y)[z/y]")) == ["z"]
    assert sfree_var_list(parse_sterm("x")) == ["x"]
    # target removed in place, replacement names appended
    assert sfree_var_list(parse_sterm("(x y)[z w/y]")) == ["x", "z", "w"]
    # an erased variable is free, so it is a legitimate target
    assert sfree_var_list(parse_sterm("(del y. w)[z/y]")) == ["w", "z"]


def test_check_sterm_rejects_bad_nodes():
    # target not free in body
    bad = Sub(parse_term("x"), parse_term("y"), "q")
    assert any("target" in v[1] for v in check_sterm(bad))
    # body and replacement share a variable
    bad = Sub(parse_term("x y"), parse_term("y"), "x")
    assert any("share" in v[1] for v in check_sterm(bad))
    # replacement with its own substitution node
    bad = Sub(parse_term("x"), parse_sterm("y[z/y]"), "x")
    assert any("substitution" in v[1] for v in check_sterm(bad))


def test_enumerated_sterms_are_valid():
    for s in sterms_with_sub(7):
        assert not check_sterm(s)


# ---------------------------------------------------------------------------
# Single steps

def test_step_var_hit():
    assert step_subst(parse_sterm("x[y/x]"), ()) == parse_term("y")


def test_step_era_hit_spreads_free_variables():
    s = parse_sterm("(del x. m)[y z/x]")
    out = step_subst(s, ())
    assert out == parse_term("del y. del z. m")


def test_step_era_hit_closed_replacement():
    s = parse_sterm(r"(del x. m)[(\y. y)/x]")
    assert step_subst(s, ()) == parse_term("m")


def test_step_dup_hit_renames_positionally():
    s = parse_sterm("(dup x as (x1,x2). x1 x2)[y z/x]")
    out = step_subst(s, ())
    # one duplication per free variable of the replacement, outermost first
    assert term_str(out) == "dup y as (y1,y2). dup z as (z1,z2). (x1 x2)[y1 z1/x1][y2 z2/x2]"


def test_step_requires_inner_first():
    s = Sub(parse_sterm("x[y/x]"), parse_term("z"), "q")
    with pytest.raises(SubstError):
        step_subst(s, ())


def test_step_rejects_non_sub_position():
    with pytest.raises(SubstError):
        step_subst(parse_sterm("x[y/x]"), (0,))


# ---------------------------------------------------------------------------
# Measure

def test_measure_clauses():
    assert measure(parse_sterm("x")) == 1
    assert measure(parse_term("del x. y")) == 2
    assert measure(parse_sterm("(x)[y/x]")) == 1  # substitution transparent
    assert measure(parse_term(r"\x. x")) == 2
    assert measure(parse_term("x y")) == 3
    assert measure(parse_term("dup x as (a,b). a b")) == 4


def test_mul_multiset_examples():
    assert mul_multiset(parse_term("del x. y")) == Counter()
    assert mul_multiset(parse_sterm("(x)[y/x]")) == Counter({1: 1})
    # body (x)[y/x] z has node count 3 (the substitution is transparent)
    s = parse_sterm("((x)[y/x] z)[w/z]")
    assert mul_multiset(s) == Counter({1: 1, 3: 1})


def test_multiset_order():
    a, b = Counter([3, 1]), Counter([2, 2, 1])
    assert multiset_gt(a, b)           # 3 dominates the 2s
    assert not multiset_gt(b, a)
    assert not multiset_gt(a, a)       # irreflexive
    assert multiset_gt(Counter([1]), Counter())
    assert not multiset_gt(Counter(), Counter([1]))
    # transitive on a chain
    c = Counter([2, 1, 1, 1])
    assert multiset_gt(b, c) and multiset_gt(a, c)


def _sub_ancestors(pos):
    return [pos[:i] for i in range(len(pos))]


def test_redex_local_measure_decreases_exhaustively():
    # the inequality table: stepping a substitution node, viewed as a term of
    # its own, strictly decreases its multiset -- for every rule, always
    checked = 0
    for s in sterms_with_sub(7):
        for pos in sub_positions(s):
            node = s_subterm_at(s, pos)
            if contains_sub(node.body):
                continue
            local_after = s_subterm_at(step_subst(s, pos), pos)
            assert multiset_gt(mul_multiset(node), mul_multiset(local_after)), term_str(s)
            checked += 1
    assert checked > 1000


def test_global_measure_decreases_outside_substitution_contexts():
    # the whole-term multiset strictly decreases whenever the redex is not
    # nested inside another substitution's body
    checked = 0
    for s in sterms_with_sub(7):
        subs = set(sub_positions(s))
        before = mul_multiset(s)
        for pos in subs:
            node = s_subterm_at(s, pos)
            if contains_sub(node.body):
                continue
            if any(a in subs for a in _sub_ancestors(pos)):
                continue
            after = mul_multiset(step_subst(s, pos))
            assert multiset_gt(before, after), term_str(s)
            checked += 1
    assert checked > 1000


def test_known_measure_growth_under_nested_substitution():
    # documented defect of the published measure: a variable hit whose
    # replacement is compound grows the enclosing substitution's entry
    s = parse_sterm("(x[y z/x])[w/y]")
    before = mul_multiset(s)
    after = mul_multiset(step_subst(s, (0,)))
    assert before == Counter({1: 2}) and after == Counter({3: 1})
    assert not multiset_gt(before, after)
    # evaluation nevertheless terminates with the right result
    out, _ = eval_subst(s)
    assert out == parse_term("w z")


# ---------------------------------------------------------------------------
# Evaluation

def test_eval_subst_examples():
    out, trace = eval_subst(parse_sterm("(del x. y)[z/x]"))
    assert out == parse_term("del z. y")

    out, trace = eval_subst(parse_sterm("x[y/x]"))
    assert out == parse_term("y")
    assert len(trace.steps) == 1 and trace.steps[0].rule == "var"

    out, _ = eval_subst(parse_sterm("(dup x as (y,z). y z)[v/x]"))
    assert alpha_eq(out, parse_term("dup v as (v1,v2). v1 v2"))


def test_eval_result_is_substitution_free_and_linear():
    for s in sterms_with_sub(7):
        out, trace = eval_subst(s)
        assert not contains_sub(out)
        assert check_linear(out).ok
        assert set(sfree_var_list(s)) == free_vars(out)


def test_trace_replay_reproduces_result():
    for s in list(sterms_with_sub(6)):
        out, trace = eval_subst(s)
        assert replay_trace(trace) == out


def test_trace_measures_recorded():
    s = parse_sterm("(dup x as (y,z). y z)[v w/x]")
    _, trace = eval_subst(s)
    # the recorded multisets chain correctly and the first (un-nested) step
    # strictly decreases
    assert Counter(trace.steps[0].mul_before) == mul_multiset(s)
    for a, b in zip(trace.steps, trace.steps[1:]):
        assert a.mul_after == b.mul_before
    assert multiset_gt(Counter(trace.steps[0].mul_before),
                       Counter(trace.steps[0].mul_after))
    assert trace.steps[0].renames  # dup hit records the copy names


def test_eval_confluence_all_orders_small():
    # evaluating in every possible order reaches one alpha-class
    def all_normal_forms(s, limit=2000):
        seen_results = set()
        stack = [s]
        visited = set()
        while stack:
            cur = stack.pop()
            subs = [p for p in sub_positions(cur)
                    if not contains_sub(s_subterm_at(cur, p).body)]
            if not subs:
                from rcl.terms import alpha_key

                seen_results.add(alpha_key(cur))
                continue
            for p in subs:
                nxt = step_subst(cur, p)
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
                if len(visited) > limit:
                    raise AssertionError("state space too large")
        return seen_results

    for s in sterms_with_sub(6):
        assert len(all_normal_forms(s)) == 1, term_str(s)


# ---------------------------------------------------------------------------
# Meta-level substitution

def test_substitute_goldens():
    assert substitute(parse_term("del x. y"), parse_term("z"), "x") == \
        parse_term("del z. y")
    assert substitute(parse_term("x"), parse_term(r"\y. y"), "x") == \
        parse_term(r"\y. y")
    got = substitute(parse_term("dup x as (y,z). y z"), parse_term("del u. v"), "x")
    want = parse_term("dup u as (u1,u2). dup v as (v1,v2). (del u1. v1) (del u2. v2)")
    assert alpha_eq(got, want)


def test_substitute_preserves_free_variables():
    m, n = parse_term("dup x as (y,z). y (w z)"), parse_term("a b")
    out = substitute(m, n, "x")
    assert free_vars(out) == (free_vars(m) - {"x"}) | free_vars(n)
    assert check_linear(out).ok


def test_substitute_precondition_errors():
    from rcl.terms import Abs, Var

    with pytest.raises(SubstError, match="target"):
        substitute(parse_term("x"), parse_term("y"), "q")
    with pytest.raises(SubstError, match="share"):
        substitute(parse_term("x y"), parse_term("y"), "x")
    with pytest.raises(SubstError, match="ill-formed"):
        substitute(parse_term("x"), Abs("q", Var("y")), "x")


def test_substitute_avoids_capture():
    # the replacement's free name collides with a binder in the body
    m = make_sub(parse_term(r"x (\y. y w)"), parse_term("y"), "x")
    assert m.body != parse_term(r"x (\y. y w)")  # binder was renamed apart
    out, _ = eval_subst(m)
    assert check_linear(out).ok
    assert free_vars(out) == {"y", "w"}


def test_substitute_many_permutations():
    m = parse_term("(del x. y) z")
    subs = [(parse_term("a"), "x"), (parse_term("b"), "z")]
    results = set()
    for perm in permutations(subs):
        results.add(substitute_many(m, list(perm)))
    assert len(results) == 1

    m = parse_term("x (y z)")
    subs = [(parse_term("a"), "x"), (parse_term("b c"), "y"), (parse_term("d"), "z")]
    outs = {substitute_many(m, list(p)) for p in permutations(subs)}
    assert len(outs) == 1


def test_substitute_many_singleton_equals_substitute():
    m, n = parse_term("del x. y"), parse_term("z")
    assert substitute_many(m, [(n, "x")]) == substitute(m, n, "x")


def test_substitute_many_rejects_overlapping_replacements():
    m = parse_term("x y")
    with pytest.raises(SubstError):
        substitute_many(m, [(parse_term("a"), "x"), (parse_term("a"), "y")])


def test_commutation_exhaustive_on_enumerated_pairs():
    # terms with two free variables, substituted in both orders
    from rcl.terms import alpha_key

    rng = random.Random(7)
    pool = [t for t in linear_terms(5) if len(free_vars(t)) == 2]
    closed = [t for t in linear_terms(3) if not free_vars(t)]
    assert pool and closed
    for t in pool:
        x1, x2 = sorted(free_vars(t))
        n1, n2 = rng.choice(closed), rng.choice(closed)
        a = substitute_many(t, [(n1, x1), (n2, x2)])
        b = substitute_many(t, [(n2, x2), (n1, x1)])
        assert alpha_key(a) == alpha_key(b), term_str(t)
