"""Strict and intersection types, bases, and their operations.

A strict type is an atom or an arrow whose codomain is strict; an
intersection type is a finite multiset of strict types (empty = Top, the
neutral element).  Intersection is commutative and associative, so
intersections are kept as canonically sorted tuples; the optional idempotent
comparison mode identifies sigma&sigma with sigma.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Arrow:
    dom: "Inter"
    cod: "Strict"


Strict = Union[Atom, Arrow]
Inter = tuple[Strict, ...]

TOP: Inter = ()


class TypeSyntaxError(Exception):
    pass


def type_key(s: Strict) -> str:
    match s:
        case Atom(name):
            return f"a:{name}"
        case Arrow(dom, cod):
            inner = ",".join(type_key(d) for d in dom)
            return f"({inner})>{type_key(cod)}"
    raise TypeError(f"not a strict type: {s!r}")


def inter(parts) -> Inter:
    """Canonical (sorted) intersection of strict types."""
    return tuple(sorted(parts, key=type_key))


def inter_union(*parts: Inter) -> Inter:
    merged: list[Strict] = []
    for p in parts:
        merged.extend(p)
    return inter(merged)


def arrow(dom, cod: Strict) -> Arrow:
    return Arrow(inter(dom), cod)


def singleton(s: Strict) -> Inter:
    return (s,)


def _idem_strict(s: Strict) -> Strict:
    match s:
        case Atom(_):
            return s
        case Arrow(dom, cod):
            return Arrow(_idem_inter(dom), _idem_strict(cod))
    raise TypeError(f"not a strict type: {s!r}")


def _idem_inter(a: Inter) -> Inter:
    dedup = {type_key(x): x for x in (_idem_strict(s) for s in a)}
    return inter(dedup.values())


def type_eq(a: Inter, b: Inter, mode: str = "multiset") -> bool:
    """Intersection equality: permutation equality, or set equality after
    recursive deduplication in idempotent mode."""
    if mode == "multiset":
        return inter(a) == inter(b)
    if mode == "idempotent":
        return _idem_inter(a) == _idem_inter(b)
    raise ValueError(f"unknown type equality mode {mode!r}")


# ---------------------------------------------------------------------------
# Bases

Basis = tuple[tuple[str, Inter], ...]  # sorted by variable name


def basis(mapping: dict[str, Inter]) -> Basis:
    return tuple(sorted(mapping.items()))


def basis_dict(g: Basis) -> dict[str, Inter]:
    return dict(g)


def basis_domain(g: Basis) -> frozenset[str]:
    return frozenset(x for x, _ in g)


def basis_get(g: Basis, x: str) -> Inter:
    for y, a in g:
        if y == x:
            return a
    raise KeyError(x)


def basis_remove(g: Basis, *names: str) -> Basis:
    return tuple((y, a) for y, a in g if y not in names)


def basis_extend(g: Basis, x: str, a: Inter) -> Basis:
    if any(y == x for y, _ in g):
        raise ValueError(f"{x!r} already declared")
    return basis({**basis_dict(g), x: a})


def basis_join(g: Basis, d: Basis) -> Basis:
    """Disjoint union of contexts (basis extension for disjoint domains)."""
    overlap = basis_domain(g) & basis_domain(d)
    if overlap:
        raise ValueError(f"domains overlap: {sorted(overlap)}")
    return basis({**basis_dict(g), **basis_dict(d)})


def basis_meet(bases: list[Basis]) -> Basis:
    """Pointwise intersection of equal-domain bases."""
    if not bases:
        return ()
    dom = basis_domain(bases[0])
    for g in bases[1:]:
        if basis_domain(g) != dom:
            raise ValueError("bases intersection requires equal domains")
    out: dict[str, Inter] = {}
    for x in dom:
        out[x] = inter_union(*(basis_get(g, x) for g in bases))
    return basis(out)


def basis_top(g: Basis) -> Basis:
    """The constant-Top basis on the same domain."""
    return tuple((x, TOP) for x, _ in g)


# ---------------------------------------------------------------------------
# Concrete syntax: atoms `a, b, ...`, `->` right-associative, `&` for
# intersection (binding tighter than the arrow), `Top` for the empty one.

_TYPE_TOKEN = re.compile(r"->|[&()]|[a-zA-Z][a-zA-Z0-9_']*|\S")


def parse_inter(text: str) -> Inter:
    tokens = _TYPE_TOKEN.findall(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_ty() -> Inter:
        left = parse_parts()
        if peek() == "->":
            advance()
            right = parse_ty()
            if len(right) != 1:
                raise TypeSyntaxError("arrow codomain must be a strict type")
            return singleton(Arrow(left, right[0]))
        return left

    def parse_parts() -> Inter:
        parts = list(parse_part())
        while peek() == "&":
            advance()
            parts.extend(parse_part())
        return inter(parts)

    def parse_part() -> Inter:
        tok = peek()
        if tok == "(":
            advance()
            t = parse_ty()
            if peek() != ")":
                raise TypeSyntaxError("expected ')'")
            advance()
            return t
        if tok is None or not tok[0].isalpha():
            raise TypeSyntaxError(f"expected a type, found {tok!r}")
        advance()
        if tok == "Top":
            return TOP
        return singleton(Atom(tok))

    t = parse_ty()
    if peek() is not None:
        raise TypeSyntaxError(f"unexpected {peek()!r} after type")
    return t


def parse_strict(text: str) -> Strict:
    t = parse_inter(text)
    if len(t) != 1:
        raise TypeSyntaxError("expected a strict type")
    return t[0]


def strict_str(s: Strict) -> str:
    match s:
        case Atom(name):
            return name
        case Arrow(dom, cod):
            return f"{_dom_str(dom)} -> {strict_str(cod)}"
    raise TypeError(f"not a strict type: {s!r}")


def _dom_str(a: Inter) -> str:
    if not a:
        return "Top"
    parts = []
    for s in a:
        text = strict_str(s)
        parts.append(f"({text})" if isinstance(s, Arrow) else text)
    return " & ".join(parts)


def inter_str(a: Inter) -> str:
    return _dom_str(a)


def basis_str(g: Basis) -> str:
    return ", ".join(f"{x}:{inter_str(a)}" for x, a in g)


# ---------------------------------------------------------------------------
# JSON encoding: atom = string, arrow = {"dom": [...], "cod": ...}, Top = []

def strict_to_json(s: Strict):
    match s:
        case Atom(name):
            return name
        case Arrow(dom, cod):
            return {"dom": [strict_to_json(d) for d in dom], "cod": strict_to_json(cod)}
    raise TypeError(f"not a strict type: {s!r}")


def inter_to_json(a: Inter) -> list:
    return [strict_to_json(s) for s in a]


def strict_from_json(data) -> Strict:
    if isinstance(data, str):
        return Atom(data)
    if isinstance(data, dict) and set(data) == {"dom", "cod"}:
        return Arrow(inter_from_json(data["dom"]), strict_from_json(data["cod"]))
    raise TypeSyntaxError(f"bad strict type encoding: {data!r}")


def inter_from_json(data) -> Inter:
    if not isinstance(data, list):
        raise TypeSyntaxError(f"bad intersection encoding: {data!r}")
    return inter(strict_from_json(d) for d in data)


def atom_supply():
    """Deterministic supply of distinct atom names: a, b, ..., z, a1, b1, ..."""
    letters = "abcdefghijklmnopqrstuvwxyz"
    round_no = 0
    idx = 0

    def next_atom() -> Atom:
        nonlocal round_no, idx
        name = letters[idx] + (str(round_no) if round_no else "")
        idx += 1
        if idx == len(letters):
            idx = 0
            round_no += 1
        return Atom(name)

    return next_atom
