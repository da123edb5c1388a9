"""Translation between ordinary lambda terms and the resource-control language.

`to_resource` inserts an erasure for every vacuous abstraction and a
duplication (with fresh split names) for every variable shared between the
two sides of an application.  `to_plain` drops erasures and collapses
duplications by renaming both split names back to the source, so the two maps
form a retraction: `to_plain(to_resource(t))` is alpha-equal to `t`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .terms import Abs, App, Dup, Era, Term, Var, barendregt_violations, fresh_supply, freshen


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PAbs:
    binder: str
    body: "PlainTerm"


@dataclass(frozen=True)
class PApp:
    fun: "PlainTerm"
    arg: "PlainTerm"


PlainTerm = Union[PVar, PAbs, PApp]


def plain_free_list(t: PlainTerm) -> list[str]:
    """Free variables in occurrence order (with repetitions)."""
    match t:
        case PVar(name):
            return [name]
        case PAbs(binder, body):
            return [x for x in plain_free_list(body) if x != binder]
        case PApp(fun, arg):
            return plain_free_list(fun) + plain_free_list(arg)
    raise TypeError(f"not a plain term: {t!r}")


def plain_free_vars(t: PlainTerm) -> set[str]:
    return set(plain_free_list(t))


def plain_all_names(t: PlainTerm) -> set[str]:
    match t:
        case PVar(name):
            return {name}
        case PAbs(binder, body):
            return plain_all_names(body) | {binder}
        case PApp(fun, arg):
            return plain_all_names(fun) | plain_all_names(arg)
    raise TypeError(f"not a plain term: {t!r}")


def plain_rename_free(t: PlainTerm, old: str, new: str) -> PlainTerm:
    match t:
        case PVar(name):
            return PVar(new) if name == old else t
        case PAbs(binder, body):
            return t if binder == old else PAbs(binder, plain_rename_free(body, old, new))
        case PApp(fun, arg):
            return PApp(plain_rename_free(fun, old, new), plain_rename_free(arg, old, new))
    raise TypeError(f"not a plain term: {t!r}")


def plain_alpha_eq(a: PlainTerm, b: PlainTerm) -> bool:
    def go(a: PlainTerm, b: PlainTerm, ea: dict[str, int], eb: dict[str, int], depth: int) -> bool:
        match a, b:
            case PVar(x), PVar(y):
                return ea.get(x, x) == eb.get(y, y)
            case PAbs(xa, ba), PAbs(xb, bb):
                return go(ba, bb, {**ea, xa: depth}, {**eb, xb: depth}, depth + 1)
            case PApp(fa, aa), PApp(fb, ab):
                return go(fa, fb, ea, eb, depth) and go(aa, ab, ea, eb, depth)
            case _:
                return False

    return go(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Embeddings

def to_resource(t: PlainTerm) -> Term:
    """Image of a plain term; always a well-formed linear term.

    Shared variables are split at the application where the sharing occurs,
    first variable in occurrence order first, renaming before recursing; a
    vacuous binder inserts an erasure over the whole body.
    """
    # one postorder pass computes every node's free-variable list; renamings
    # are carried as maps, so the source tree is never rewritten
    fv: dict[int, list[str]] = {}
    stack: list[tuple[PlainTerm, bool]] = [(t, False)]
    while stack:
        node, done = stack.pop()
        if id(node) in fv:
            continue
        if type(node) is PVar:
            fv[id(node)] = [node.name]
        elif done:
            if type(node) is PAbs:
                b = node.binder
                fv[id(node)] = [x for x in fv[id(node.body)] if x != b]
            else:
                fv[id(node)] = fv[id(node.fun)] + fv[id(node.arg)]
        else:
            stack.append((node, True))
            if type(node) is PAbs:
                stack.append((node.body, False))
            elif type(node) is PApp:
                stack.append((node.arg, False))
                stack.append((node.fun, False))
            else:
                raise TypeError(f"not a plain term: {node!r}")

    supply: list = [None]  # built lazily: most terms never split a variable
    binders: list[str] = []

    def fresh(base: str) -> str:
        if supply[0] is None:
            supply[0] = fresh_supply(set(plain_all_names(t)))
        return supply[0](base)

    def go(node: PlainTerm, ren: dict[str, str]) -> Term:
        if type(node) is PVar:
            return Var(ren.get(node.name, node.name))
        if type(node) is PAbs:
            binder, body = node.binder, node.body
            binders.append(binder)
            if binder in fv[id(body)]:
                return Abs(binder, go(body, ren))
            return Abs(binder, Era(binder, go(body, ren)))
        fun, arg = node.fun, node.arg
        arg_cur = {ren.get(y, y) for y in fv[id(arg)]}
        for orig in fv[id(fun)]:
            cur = ren.get(orig, orig)
            if cur in arg_cur:
                x1 = fresh(cur)
                x2 = fresh(cur)
                binders.append(x1)
                binders.append(x2)
                return Dup(cur, x1, x2,
                           go_app(fun, arg, {**ren, orig: x1}, {**ren, orig: x2}))
        return App(go(fun, ren), go(arg, ren))

    def go_app(fun: PlainTerm, arg: PlainTerm, ren_fun: dict[str, str],
               ren_arg: dict[str, str]) -> Term:
        # the application node just split one variable; look for the next
        arg_cur = {ren_arg.get(y, y) for y in fv[id(arg)]}
        for orig in fv[id(fun)]:
            cur = ren_fun.get(orig, orig)
            if cur in arg_cur:
                x1 = fresh(cur)
                x2 = fresh(cur)
                binders.append(x1)
                binders.append(x2)
                return Dup(cur, x1, x2,
                           go_app(fun, arg, {**ren_fun, orig: x1}, {**ren_arg, orig: x2}))
        return App(go(fun, ren_fun), go(arg, ren_arg))

    root_fv = set(fv[id(t)])
    result = go(t, {})
    if len(set(binders)) < len(binders) or root_fv & set(binders):
        # source binders may repeat; stored terms keep all binders distinct
        result = freshen(result)
    return result


def to_plain(m: Term) -> PlainTerm:
    """Erasures dropped, duplications collapsed onto their source name."""

    def go(m: Term, ren: dict[str, str]) -> PlainTerm:
        match m:
            case Var(name):
                return PVar(ren.get(name, name))
            case Abs(binder, body):
                return PAbs(binder, go(body, ren))
            case App(fun, arg):
                return PApp(go(fun, ren), go(arg, ren))
            case Era(_, body):
                return go(body, ren)
            case Dup(source, left, right, body):
                s = ren.get(source, source)
                return go(body, {**ren, left: s, right: s})
        raise TypeError(f"not a term: {m!r}")

    return go(m, {})


# ---------------------------------------------------------------------------
# Concrete syntax

_PLAIN_TOKEN = re.compile(r"[a-zA-Z][a-zA-Z0-9_']*|[\\.()]|\S")


class PlainParseError(Exception):
    pass


def parse_plain(text: str) -> PlainTerm:
    tokens = _PLAIN_TOKEN.findall(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def advance() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def expect(tok: str) -> None:
        got = peek()
        if got != tok:
            raise PlainParseError(f"expected {tok!r}, found {got!r}")
        advance()

    def term() -> PlainTerm:
        if peek() == "\\":
            advance()
            binder = advance()
            if not binder[0].isalpha():
                raise PlainParseError(f"expected identifier, found {binder!r}")
            expect(".")
            return PAbs(binder, term())
        return application()

    def application() -> PlainTerm:
        t = atom()
        while True:
            nxt = peek()
            if nxt == "\\":
                return PApp(t, term())
            if nxt is None or nxt in (")", "."):
                return t
            t = PApp(t, atom())

    def atom() -> PlainTerm:
        nxt = peek()
        if nxt == "(":
            advance()
            t = term()
            expect(")")
            return t
        if nxt is not None and nxt[0].isalpha():
            return PVar(advance())
        raise PlainParseError(f"expected a term, found {nxt!r}")

    t = term()
    if peek() is not None:
        raise PlainParseError(f"unexpected {peek()!r} after term")
    return t


def plain_str(t: PlainTerm) -> str:
    match t:
        case PVar(name):
            return name
        case PAbs(binder, body):
            return f"\\{binder}. {plain_str(body)}"
        case PApp(fun, arg):
            fun_s = plain_str(fun) if isinstance(fun, (PVar, PApp)) else f"({plain_str(fun)})"
            arg_s = plain_str(arg) if isinstance(arg, PVar) else f"({plain_str(arg)})"
            return f"{fun_s} {arg_s}"
    raise TypeError(f"not a plain term: {t!r}")
