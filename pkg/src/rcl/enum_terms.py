"""Exhaustive small-scope enumeration of terms for property sweeps.

Terms are generated with globally unique names (frees and binders drawn from
one counter), one representative per renaming class: free variables appear
in free-list order, and every binder choice yields a structurally distinct
term.  Sizes are node counts; substitution nodes count one plus both sides.
"""

from __future__ import annotations

from typing import Iterator

from .bridge import PAbs, PApp, PVar, PlainTerm
from .subst import STerm, Sub
from .terms import Abs, App, Dup, Era, Term, Var


def plain_terms(max_size: int, free_names: tuple[str, ...] = ("x", "y", "z")
                ) -> Iterator[PlainTerm]:
    """All plain lambda terms up to the size bound over the given free names,
    binders uniquely named."""

    def gen(n: int, base: int, names: tuple[str, ...]):
        if n == 1:
            for x in names:
                yield PVar(x), 0
            return
        b = f"b{base}"
        for body, k in gen(n - 1, base + 1, names + (b,)):
            yield PAbs(b, body), k + 1
        for i in range(1, n - 1):
            for fun, kf in gen(i, base, names):
                for arg, ka in gen(n - 1 - i, base + kf, names):
                    yield PApp(fun, arg), kf + ka

    for n in range(1, max_size + 1):
        for t, _ in gen(n, 0, free_names):
            yield t


def _nm(k: int) -> str:
    return f"n{k}"


def _gen_linear(n: int, base: int):
    """Well-formed terms of exactly size n.

    Yields (term, ids_consumed, free_list); names n{base}... are consumed
    left to right, so sibling subtrees never clash.
    """
    if n == 1:
        v = _nm(base)
        yield Var(v), 1, (v,)
        return
    for body, used, fv in _gen_linear(n - 1, base):
        # abstraction: bind any one free variable
        for i in range(len(fv)):
            yield Abs(fv[i], body), used, fv[:i] + fv[i + 1:]
        # erasure: introduce a fresh unused variable
        x = _nm(base + used)
        yield Era(x, body), used + 1, (x,) + fv
        # duplication: bind an ordered pair of free variables
        if len(fv) >= 2:
            x = _nm(base + used)
            for i in range(len(fv)):
                for j in range(len(fv)):
                    if i != j:
                        rest = tuple(v for k, v in enumerate(fv) if k != i and k != j)
                        yield Dup(x, fv[i], fv[j], body), used + 1, (x,) + rest
    for i in range(1, n - 1):
        for fun, uf, fvf in _gen_linear(i, base):
            for arg, ua, fva in _gen_linear(n - 1 - i, base + uf):
                yield App(fun, arg), uf + ua, fvf + fva


def linear_terms(max_size: int, min_size: int = 1) -> Iterator[Term]:
    """All well-formed terms (one per renaming class) within the size bounds."""
    for n in range(min_size, max_size + 1):
        for t, _, _ in _gen_linear(n, 0):
            yield t


def closed_linear_terms(max_size: int) -> Iterator[Term]:
    for n in range(1, max_size + 1):
        for t, _, fv in _gen_linear(n, 0):
            if not fv:
                yield t


def _gen_sterms(n: int, base: int):
    """Valid substitution terms of exactly size n; like _gen_linear plus a
    substitution node whose replacement is substitution free."""
    if n == 1:
        v = _nm(base)
        yield Var(v), 1, (v,), False
        return
    for body, used, fv, has_sub in _gen_sterms(n - 1, base):
        for i in range(len(fv)):
            yield Abs(fv[i], body), used, fv[:i] + fv[i + 1:], has_sub
        x = _nm(base + used)
        yield Era(x, body), used + 1, (x,) + fv, has_sub
        if len(fv) >= 2:
            x = _nm(base + used)
            for i in range(len(fv)):
                for j in range(len(fv)):
                    if i != j:
                        rest = tuple(v for k, v in enumerate(fv) if k != i and k != j)
                        yield Dup(x, fv[i], fv[j], body), used + 1, (x,) + rest, has_sub
    for i in range(1, n - 1):
        for fun, uf, fvf, sf in _gen_sterms(i, base):
            for arg, ua, fva, sa in _gen_sterms(n - 1 - i, base + uf):
                yield App(fun, arg), uf + ua, fvf + fva, sf or sa
    # substitution node: body[replacement/target]
    for bs in range(1, n - 1):
        rs = n - 1 - bs
        for body, ub, fvb, _ in _gen_sterms(bs, base):
            for target_i in range(len(fvb)):
                for repl, ur, fvr in _gen_linear(rs, base + ub):
                    rest = fvb[:target_i] + fvb[target_i + 1:]
                    yield Sub(body, repl, fvb[target_i]), ub + ur, rest + fvr, True


def sterms_with_sub(max_size: int) -> Iterator[STerm]:
    """All valid substitution terms up to the size bound that contain at
    least one substitution node."""
    for n in range(1, max_size + 1):
        for t, _, _, has_sub in _gen_sterms(n, 0):
            if has_sub:
                yield t
