"""Term core: parsing, linearity, free variables, alpha, equivalence, shapes."""

import pytest
from hypothesis import given, strategies as st

from rcl.enum_terms import linear_terms
from rcl.syntax import ParseError, parse_term, term_str
from rcl.terms import (
    Abs,
    App,
    Dup,
    Era,
    Var,
    alpha_eq,
    alpha_key,
    alpha_normalise,
    check_linear,
    classify_head_form,
    equiv_canonical,
    equiv_class,
    equiv_class_steps,
    apply_equiv_step,
    free_var_list,
    free_vars,
    is_normal_form,
    size,
)


# ---------------------------------------------------------------------------
# Parsing and printing

def test_parse_examples():
    assert parse_term(r"\x. del x. y") == Abs("x", Era("x", Var("y")))
    assert parse_term("x") == Var("x")
    assert parse_term("dup x as (x1,x2). x1 x2") == \
        Dup("x", "x1", "x2", App(Var("x1"), Var("x2")))


def test_application_left_associative():
    assert parse_term("x y z") == App(App(Var("x"), Var("y")), Var("z"))


def test_binders_extend_right():
    t = parse_term(r"\x. x y")
    assert t == Abs("x", App(Var("x"), Var("y")))
    t = parse_term(r"f \x. x y")
    assert t == App(Var("f"), Abs("x", App(Var("x"), Var("y"))))


def test_parse_errors_have_positions():
    with pytest.raises(ParseError) as e:
        parse_term("(x")
    assert "1:" in str(e.value)
    with pytest.raises(ParseError):
        parse_term("")
    with pytest.raises(ParseError):
        parse_term("x )")


def test_parser_rejects_shadowing():
    with pytest.raises(ParseError, match="shadows"):
        parse_term(r"\x. \x. x x")
    with pytest.raises(ParseError, match="shadows"):
        parse_term(r"(\x. x) (\x. x)")
    with pytest.raises(ParseError, match="bound and free"):
        parse_term(r"(\x. x) x")
    with pytest.raises(ParseError, match="differ"):
        parse_term(r"dup x as (a,a). a a")


@pytest.mark.parametrize("text", [
    r"\x. x", r"\x. del x. y", "dup x as (x1,x2). x1 x2",
    r"(\x. x) y", "x y z", "x (y z)", r"x (\y. y) z",
    "del x. del y. z", r"dup x as (a,b). a (del c. b)",
])
def test_print_parse_round_trip(text):
    t = parse_term(text)
    assert parse_term(term_str(t)) == t


def test_print_parse_round_trip_enumerated():
    for t in linear_terms(6):
        assert parse_term(term_str(t)) == t


# ---------------------------------------------------------------------------
# Free variables

def test_free_var_list_examples():
    assert free_var_list(parse_term("del x. y")) == ["x", "y"]
    assert free_var_list(parse_term("x")) == ["x"]
    assert free_var_list(parse_term("(del x. y) z")) == ["x", "y", "z"]


def test_free_var_list_dup_prepends_source():
    t = parse_term("dup x as (a,b). y a b")
    assert free_var_list(t) == ["x", "y"]


def test_free_var_list_no_duplicates_when_linear():
    for t in linear_terms(7):
        fv = free_var_list(t)
        assert len(fv) == len(set(fv))


# ---------------------------------------------------------------------------
# Linearity

def test_linearity_examples():
    rep = check_linear(Abs("x", Var("y")))
    assert not rep.ok
    assert rep.violations[0][1].startswith("abs")

    rep = check_linear(Abs("x", App(Var("x"), Var("x"))))
    assert not rep.ok
    assert any("app" in v[1] for v in rep.violations)

    assert check_linear(parse_term(r"\x. dup x as (x1,x2). x1 x2")).ok


def test_linearity_era_and_dup_side_conditions():
    assert not check_linear(Era("x", Var("x"))).ok
    assert not check_linear(Dup("x", "a", "b", Var("a"))).ok  # b unused
    assert not check_linear(Dup("x", "a", "a", Var("a"))).ok  # equal splits
    assert not check_linear(Dup("a", "b", "c", App(App(Var("a"), Var("b")), Var("c")))).ok


def _derivable(t) -> bool:
    """Independent rule-by-rule reconstruction of the formation judgment."""
    if isinstance(t, Var):
        return True
    if isinstance(t, Abs):
        return _derivable(t.body) and t.binder in free_vars(t.body)
    if isinstance(t, App):
        return (_derivable(t.fun) and _derivable(t.arg)
                and not (free_vars(t.fun) & free_vars(t.arg)))
    if isinstance(t, Era):
        return _derivable(t.body) and t.erased not in free_vars(t.body)
    if isinstance(t, Dup):
        fv = free_vars(t.body)
        return (_derivable(t.body) and t.left != t.right
                and t.left in fv and t.right in fv
                and t.source not in fv - {t.left, t.right})
    return False


def test_check_linear_matches_independent_checker():
    # enumerated well-formed terms are accepted
    for t in linear_terms(7):
        assert check_linear(t).ok and _derivable(t)
    # and mutations that break side conditions are rejected by both
    bad = [
        Abs("q", parse_term("x y")),
        Era("x", parse_term("x y")),
        Dup("q", "x", "x", parse_term("x y")),
        App(parse_term("x"), parse_term("x")),
        Dup("y", "a", "b", parse_term("a (b y)")),
    ]
    for t in bad:
        assert check_linear(t).ok == _derivable(t) == False


# ---------------------------------------------------------------------------
# Alpha equivalence

def test_alpha_examples():
    assert alpha_eq(parse_term(r"\x. x"), parse_term(r"\y. y"))
    assert not alpha_eq(parse_term(r"\x. x"), parse_term(r"\x. del y. x"))
    assert alpha_eq(parse_term("dup x as (a,b). a b"),
                    parse_term("dup x as (u,v). u v"))


def test_alpha_distinguishes_free_names():
    assert not alpha_eq(Var("x"), Var("y"))
    assert not alpha_eq(parse_term("del x. y"), parse_term("del y. x"))


def test_alpha_key_agrees_with_alpha_eq():
    terms = list(linear_terms(5))
    for a in terms:
        for b in terms:
            assert (alpha_key(a) == alpha_key(b)) == alpha_eq(a, b)


def test_alpha_normalise_is_stable():
    for t in linear_terms(6):
        n = alpha_normalise(t)
        assert alpha_eq(n, t)
        assert alpha_normalise(n) == n


# ---------------------------------------------------------------------------
# Structural equivalence

def test_equiv_class_era_swap():
    got = {term_str(u) for u in equiv_class(parse_term("del x. del y. z"))}
    assert got == {"del x. del y. z", "del y. del x. z"}


def test_equiv_class_singleton():
    assert equiv_class(Var("x")) == [Var("x")]


def test_equiv_class_dup_swap():
    members = equiv_class(parse_term("dup x as (a,b). a b"))
    keys = {alpha_key(u) for u in members}
    assert alpha_key(parse_term("dup x as (b,a). b a")) in keys
    assert alpha_key(parse_term("dup x as (a,b). b a")) in keys


def test_equiv_members_share_wf_fv_and_nf():
    for t in linear_terms(7):
        base_fv = free_vars(t)
        base_nf = is_normal_form(t)
        for u in equiv_class(t):
            assert check_linear(u).ok
            assert free_vars(u) == base_fv
            assert is_normal_form(u) == base_nf


def test_equiv_steps_replay():
    t = parse_term("dup x as (a,b). dup y as (c,d). (a c) (b d)")
    for u, steps in equiv_class_steps(t):
        v = t
        for step in steps:
            v = apply_equiv_step(v, step)
        assert v == u


def test_equiv_canonical_examples():
    assert equiv_canonical(parse_term("del y. del x. z")) == \
        equiv_canonical(parse_term("del x. del y. z"))
    c = equiv_canonical(parse_term("del y. del x. z"))
    assert term_str(c) == "del x. del y. z"


def test_equiv_canonical_idempotent_and_constant_on_class():
    for t in linear_terms(6):
        c = equiv_canonical(t)
        assert equiv_canonical(c) == c
        for u in equiv_class(t):
            assert equiv_canonical(u) == c


# ---------------------------------------------------------------------------
# Head forms

def test_head_form_examples():
    hf = classify_head_form(parse_term(r"(\x. x) y"))
    assert hf.tag == "AbsApp" and len(hf.spine) == 1

    hf = classify_head_form(parse_term("x y z"))
    assert hf.tag == "Var" and [term_str(s) for s in hf.spine] == ["y", "z"]

    hf = classify_head_form(parse_term("(dup x as (a,b). a b) y"))
    assert hf.tag == "DupApp" and len(hf.spine) == 1


def test_head_form_total_and_reassembles():
    seen_tags = set()
    for t in linear_terms(7):
        hf = classify_head_form(t)
        assert hf.tag in ("Abs", "Var", "Era", "AbsApp", "DupApp", "EraApp")
        assert hf.reassemble() == t
        seen_tags.add(hf.tag)
    assert seen_tags == {"Abs", "Var", "Era", "AbsApp", "DupApp", "EraApp"}


# ---------------------------------------------------------------------------
# Normal forms

def test_nf_examples():
    assert is_normal_form(parse_term(r"\x. del x. y"))
    assert not is_normal_form(parse_term(r"(\x. x) y"))
    assert is_normal_form(parse_term("dup x as (a,b). (a) (b)"))
    assert not is_normal_form(parse_term(r"dup x as (a,b). \y. a b y"))


def test_nf_erasure_cases():
    assert is_normal_form(parse_term("del x. y"))
    assert is_normal_form(parse_term("del x. del y. z"))
    # abstraction over an erasure of another variable is a redex
    assert not is_normal_form(parse_term(r"\x. del y. x y"))
    # erasure of the binder itself is fine only over a non-erasure body
    assert is_normal_form(parse_term(r"\x. del x. y"))
    assert not is_normal_form(parse_term(r"\x. del x. del y. z"))


def test_size():
    assert size(Var("x")) == 1
    assert size(parse_term(r"\x. del x. y")) == 3
    assert size(parse_term("dup x as (a,b). a b")) == 4


@given(st.integers(min_value=0, max_value=100))
def test_alpha_key_deterministic(seed):
    import random

    rng = random.Random(seed)
    terms = list(linear_terms(5))
    t = rng.choice(terms)
    assert alpha_key(t) == alpha_key(t)
