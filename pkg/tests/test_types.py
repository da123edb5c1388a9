"""Strict/intersection types, bases, and their concrete syntax."""

import pytest
from hypothesis import given, strategies as st

from rcl.types import (
    Arrow,
    Atom,
    TOP,
    TypeSyntaxError,
    arrow,
    basis,
    basis_get,
    basis_meet,
    basis_top,
    inter,
    inter_from_json,
    inter_str,
    inter_to_json,
    inter_union,
    parse_inter,
    parse_strict,
    singleton,
    strict_str,
    type_eq,
)

a, b, c = Atom("a"), Atom("b"), Atom("c")


def test_type_eq_top_neutral():
    s = singleton(a)
    assert type_eq(inter_union(s, TOP), s, "multiset")
    assert type_eq(inter_union(s, TOP), s, "idempotent")


def test_type_eq_idempotence_modes():
    ss = inter([a, a])
    assert not type_eq(ss, singleton(a), "multiset")
    assert type_eq(ss, singleton(a), "idempotent")


def test_type_eq_commutative():
    assert type_eq(inter([a, b]), inter([b, a]))


def test_idempotent_mode_is_recursive():
    t1 = singleton(arrow([a, a], b))
    t2 = singleton(arrow([a], b))
    assert not type_eq(t1, t2, "multiset")
    assert type_eq(t1, t2, "idempotent")


def test_basis_meet_pointwise():
    g = basis({"x": singleton(a)})
    d = basis({"x": singleton(b)})
    assert basis_get(basis_meet([g, d]), "x") == inter([a, b])


def test_basis_meet_top_neutral():
    g = basis({"x": inter([a, b]), "y": singleton(c)})
    assert basis_meet([basis_top(g), g]) == g


def test_basis_meet_example_recomposition():
    # Top & (t -> s) & t collapses to (t -> s) & t
    arr = arrow([Atom("t")], Atom("s"))
    w = basis({"v": TOP})
    d1 = basis({"v": singleton(arr)})
    d2 = basis({"v": singleton(Atom("t"))})
    met = basis_meet([w, d1, d2])
    assert basis_get(met, "v") == inter([arr, Atom("t")])


def test_basis_meet_requires_equal_domains():
    with pytest.raises(ValueError):
        basis_meet([basis({"x": TOP}), basis({"y": TOP})])


def test_parse_type_syntax():
    assert parse_strict("a") == a
    assert parse_strict("a -> b") == arrow([a], b)
    assert parse_strict("a & b -> c") == arrow([a, b], c)     # & binds tighter
    assert parse_strict("a -> b -> c") == arrow([a], arrow([b], c))
    assert parse_strict("Top -> a") == arrow([], a)
    assert parse_inter("(a -> b) & c") == inter([arrow([a], b), c])
    assert parse_inter("Top") == TOP
    with pytest.raises(TypeSyntaxError):
        parse_strict("a & b")  # not strict
    with pytest.raises(TypeSyntaxError):
        parse_inter("a ->")


def test_print_parse_round_trip():
    samples = ["a", "a -> b", "a & b -> c", "(a -> b) & c", "Top",
               "Top -> a", "(a & b -> c) & a -> b"]
    for text in samples:
        t = parse_inter(text)
        assert parse_inter(inter_str(t)) == t


def test_json_round_trip():
    samples = ["a", "a -> b", "(a -> b) & c & c", "Top -> a"]
    for text in samples:
        t = parse_inter(text)
        assert inter_from_json(inter_to_json(t)) == t


_atoms = st.sampled_from([a, b, c])


def _strict_strategy():
    return st.recursive(
        _atoms,
        lambda inner: st.builds(lambda dom, cod: arrow(dom, cod),
                                st.lists(inner, max_size=3), inner),
        max_leaves=8,
    )


@given(st.lists(_strict_strategy(), max_size=4), st.lists(_strict_strategy(), max_size=4))
def test_inter_union_is_commutative(xs, ys):
    assert inter_union(inter(xs), inter(ys)) == inter_union(inter(ys), inter(xs))


@given(st.lists(_strict_strategy(), max_size=4))
def test_inter_is_canonical(xs):
    once = inter(xs)
    assert inter(once) == once
