"""Typing derivations: validation, normal-form typing, forward transport
along reduction, backward expansion across redexes, and the strong
normalisation certifier.

A derivation node carries its rule, basis, subject and strict type.  For the
two context-splitting rules with argument premises (application and the
substitution rule) the node records which premise is the throwaway witness:
the witness's types are forgotten (its basis contributes only Top entries)
but it guarantees the argument is typeable.  The whole system is syntax
directed, so checking is a local schema test plus domain correspondence at
every node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .subst import STerm, Sub, contains_sub, sfree_vars
from .terms import Abs, App, Dup, Era, Path, Term, Var, is_normal_form
from .types import (
    Arrow,
    Basis,
    Inter,
    Strict,
    TOP,
    atom_supply,
    basis,
    basis_dict,
    basis_domain,
    basis_get,
    basis_join,
    basis_meet,
    basis_remove,
    basis_top,
    inter,
    inter_from_json,
    inter_to_json,
    inter_union,
    singleton,
    strict_from_json,
    strict_to_json,
    type_eq,
)

AX, ARR_I, ARR_E, CONT, THIN, SUBST = "Ax", "ArrI", "ArrE", "Cont", "Thin", "Subst"


class DerivError(Exception):
    pass


class TransportError(DerivError):
    pass


class ExpandError(DerivError):
    pass


@dataclass(frozen=True)
class Derivation:
    rule: str
    basis: Basis
    subject: STerm
    stype: Strict
    premises: tuple["Derivation", ...] = ()
    witness: Optional[int] = None  # index into premises of the throwaway slot

    @property
    def major(self) -> "Derivation":
        return self.premises[0]

    def arg_premises(self) -> tuple["Derivation", ...]:
        return self.premises[1:]

    def witness_premise(self) -> "Derivation":
        assert self.witness is not None
        return self.premises[self.witness]

    def main_args(self) -> tuple["Derivation", ...]:
        return tuple(p for i, p in enumerate(self.premises)
                     if i >= 1 and i != self.witness)

    def judgment(self) -> tuple[Basis, Strict]:
        return (self.basis, self.stype)


# ---------------------------------------------------------------------------
# Smart constructors (used by all builders; validation is the checker's job,
# but these compute conclusions so builders cannot desynchronise)

def mk_ax(x: str, s: Strict) -> Derivation:
    return Derivation(AX, basis({x: singleton(s)}), Var(x), s)


def mk_arri(p: Derivation, x: str) -> Derivation:
    dom = basis_get(p.basis, x)
    return Derivation(ARR_I, basis_remove(p.basis, x), Abs(x, p.subject),
                      Arrow(dom, p.stype), (p,))


def mk_thin(p: Derivation, x: str) -> Derivation:
    if x in basis_domain(p.basis):
        raise DerivError(f"thinning a declared variable {x!r}")
    return Derivation(THIN, basis_join(p.basis, basis({x: TOP})),
                      Era(x, p.subject), p.stype, (p,))


def mk_cont(p: Derivation, source: str, left: str, right: str) -> Derivation:
    merged = inter_union(basis_get(p.basis, left), basis_get(p.basis, right))
    g = basis_remove(p.basis, left, right)
    if source in basis_domain(g):
        raise DerivError(f"contraction source {source!r} already declared")
    return Derivation(CONT, basis_join(g, basis({source: merged})),
                      Dup(source, left, right, p.subject), p.stype, (p,))


def _delta(witness: Derivation, mains: tuple[Derivation, ...]) -> Basis:
    return basis_meet([basis_top(witness.basis)] + [p.basis for p in mains])


def mk_arre(major: Derivation, witness: Derivation,
            mains: tuple[Derivation, ...]) -> Derivation:
    if not isinstance(major.stype, Arrow):
        raise DerivError("application head is not typed at an arrow")
    want = inter(p.stype for p in mains)
    if major.stype.dom != want:
        raise DerivError("arrow domain does not match argument premise types")
    conclusion = basis_join(major.basis, _delta(witness, mains))
    return Derivation(ARR_E, conclusion, App(major.subject, witness.subject),
                      major.stype.cod, (major, witness) + tuple(mains), witness=1)


def mk_subst(major: Derivation, x: str, witness: Derivation,
             mains: tuple[Derivation, ...]) -> Derivation:
    want = inter(p.stype for p in mains)
    if basis_get(major.basis, x) != want:
        raise DerivError("substituted variable type does not match premises")
    conclusion = basis_join(basis_remove(major.basis, x), _delta(witness, mains))
    return Derivation(SUBST, conclusion, Sub(major.subject, witness.subject, x),
                      major.stype, (major, witness) + tuple(mains), witness=1)


def rebuild_arg_node(node: Derivation, major: Derivation,
                     args: tuple[Derivation, ...], witness: int) -> Derivation:
    """ArrE/Subst node with the given premises, conclusion recomputed."""
    mains = tuple(p for i, p in enumerate(args, start=1) if i != witness)
    wit = args[witness - 1]
    if node.rule == ARR_E:
        d = mk_arre(major, wit, mains) if witness == 1 else None
        if d is None:
            conclusion = basis_join(major.basis, _delta(wit, mains))
            d = Derivation(ARR_E, conclusion, App(major.subject, args[0].subject),
                           major.stype.cod, (major,) + args, witness=witness)
        return d
    assert node.rule == SUBST
    x = node.subject.target  # type: ignore[union-attr]
    if witness == 1:
        return mk_subst(major, x, wit, mains)
    conclusion = basis_join(basis_remove(major.basis, x), _delta(wit, mains))
    return Derivation(SUBST, conclusion, Sub(major.subject, args[0].subject, x),
                      major.stype, (major,) + args, witness=witness)


# ---------------------------------------------------------------------------
# Checking

def check_derivation(d: Derivation, mode: str = "multiset") -> list[str]:
    """Empty list iff every node instantiates its rule schema and the basis
    domain equals the subject's free variables."""
    errors: list[str] = []

    def ieq(a: Inter, b: Inter) -> bool:
        return type_eq(a, b, mode)

    def seq(a: Strict, b: Strict) -> bool:
        return type_eq(singleton(a), singleton(b), mode)

    def fail(path: Path, msg: str) -> None:
        errors.append(f"{'.'.join(map(str, path)) or 'root'}: {msg}")

    def walk(d: Derivation, path: Path) -> None:
        if basis_domain(d.basis) != sfree_vars(d.subject):
            fail(path, "basis domain differs from the subject's free variables")
        names = [x for x, _ in d.basis]
        if len(names) != len(set(names)):
            fail(path, "duplicate declaration in basis")

        match d.rule:
            case "Ax":
                if d.premises:
                    fail(path, "axiom with premises")
                if not isinstance(d.subject, Var):
                    fail(path, "axiom subject is not a variable")
                elif d.basis != basis({d.subject.name: singleton(d.stype)}):
                    if not (len(d.basis) == 1 and d.basis[0][0] == d.subject.name
                            and ieq(d.basis[0][1], singleton(d.stype))):
                        fail(path, "axiom basis must declare exactly the variable at its strict type")
            case "ArrI":
                if len(d.premises) != 1:
                    fail(path, "abstraction rule needs one premise")
                elif not isinstance(d.subject, Abs):
                    fail(path, "abstraction subject expected")
                elif not isinstance(d.stype, Arrow):
                    fail(path, "abstraction must be typed at an arrow")
                else:
                    p = d.premises[0]
                    x = d.subject.binder
                    if p.subject != d.subject.body:
                        fail(path, "premise subject is not the body")
                    if x not in basis_domain(p.basis):
                        fail(path, "binder missing from premise basis")
                    else:
                        if not ieq(basis_get(p.basis, x), d.stype.dom):
                            fail(path, "arrow domain differs from binder type")
                        if not _basis_eq(basis_remove(p.basis, x), d.basis, mode):
                            fail(path, "conclusion basis must drop exactly the binder")
                    if not seq(p.stype, d.stype.cod):
                        fail(path, "arrow codomain differs from premise type")
            case "Thin":
                if len(d.premises) != 1 or not isinstance(d.subject, Era):
                    fail(path, "thinning shape mismatch")
                else:
                    p = d.premises[0]
                    x = d.subject.erased
                    if p.subject != d.subject.body:
                        fail(path, "premise subject is not the body")
                    if not seq(p.stype, d.stype):
                        fail(path, "thinning must preserve the type")
                    if x in basis_domain(p.basis):
                        fail(path, "erased variable already declared")
                    elif not _basis_eq(d.basis, basis({**basis_dict(p.basis), x: TOP}), mode):
                        fail(path, "conclusion basis must add the erased variable at Top")
            case "Cont":
                if len(d.premises) != 1 or not isinstance(d.subject, Dup):
                    fail(path, "contraction shape mismatch")
                else:
                    p = d.premises[0]
                    z, a, b = d.subject.source, d.subject.left, d.subject.right
                    if p.subject != d.subject.body:
                        fail(path, "premise subject is not the body")
                    if not seq(p.stype, d.stype):
                        fail(path, "contraction must preserve the type")
                    dom_p = basis_domain(p.basis)
                    if a not in dom_p or b not in dom_p:
                        fail(path, "split names missing from premise basis")
                    else:
                        merged = inter_union(basis_get(p.basis, a), basis_get(p.basis, b))
                        want = basis_join(basis_remove(p.basis, a, b), basis({z: merged}))
                        if not _basis_eq(d.basis, want, mode):
                            fail(path, "conclusion basis must merge the split types")
            case "ArrE" | "Subst":
                _check_arg_node(d, path, fail, mode)
            case _:
                fail(path, f"unknown rule {d.rule!r}")

        if d.rule != SUBST and isinstance(d.subject, Sub):
            fail(path, "substitution subject outside the substitution rule")
        for i, p in enumerate(d.premises):
            walk(p, path + (i,))

    def _check_arg_node(d: Derivation, path: Path, fail, mode: str) -> None:
        if len(d.premises) < 2:
            fail(path, "argument witness premise is mandatory")
            return
        if d.witness is None or not (1 <= d.witness < len(d.premises)):
            fail(path, "missing or out-of-range witness index")
            return
        major = d.premises[0]
        args = d.premises[1:]
        wit = d.premises[d.witness]
        mains = d.main_args()
        if d.rule == ARR_E:
            if not isinstance(d.subject, App):
                fail(path, "application subject expected")
                return
            fun, arg = d.subject.fun, d.subject.arg
            if not isinstance(major.stype, Arrow):
                fail(path, "head premise is not typed at an arrow")
                return
            if not ieq_mode(major.stype.dom, inter(p.stype for p in mains), mode):
                fail(path, "arrow domain differs from argument premise types")
            if not type_eq(singleton(major.stype.cod), singleton(d.stype), mode):
                fail(path, "conclusion type differs from arrow codomain")
            removed = major.basis
        else:
            if not isinstance(d.subject, Sub):
                fail(path, "substitution subject expected")
                return
            fun, arg = d.subject.body, d.subject.replacement
            x = d.subject.target
            if contains_sub(arg):
                fail(path, "replacement must be substitution free")
            if x not in basis_domain(major.basis):
                fail(path, "target missing from body premise basis")
                return
            if not ieq_mode(basis_get(major.basis, x), inter(p.stype for p in mains), mode):
                fail(path, "target type differs from argument premise types")
            if not type_eq(singleton(major.stype), singleton(d.stype), mode):
                fail(path, "substitution must preserve the type")
            removed = basis_remove(major.basis, x)
            for i, p in enumerate(args):
                if _uses_subst_rule(p):
                    fail(path + (i + 1,), "argument premise uses the substitution rule")
        if major.subject != fun:
            fail(path, "head premise subject mismatch")
        doms = {basis_domain(p.basis) for p in args}
        if len(doms) != 1:
            fail(path, "argument premises must share one domain")
        for i, p in enumerate(args):
            if p.subject != arg:
                fail(path + (i + 1,), "argument premise subject mismatch")
        try:
            want = basis_join(removed, _delta(wit, mains))
        except ValueError as e:
            fail(path, f"conclusion basis ill-formed: {e}")
            return
        if not _basis_eq(d.basis, want, mode):
            fail(path, "conclusion basis differs from the context-splitting schema")

    def ieq_mode(a: Inter, b: Inter, mode: str) -> bool:
        return type_eq(a, b, mode)

    walk(d, ())
    return errors


def _uses_subst_rule(d: Derivation) -> bool:
    return d.rule == SUBST or any(_uses_subst_rule(p) for p in d.premises)


def _basis_eq(a: Basis, b: Basis, mode: str) -> bool:
    if mode == "multiset":
        return a == b
    da, db = basis_dict(a), basis_dict(b)
    if set(da) != set(db):
        return False
    return all(type_eq(da[x], db[x], mode) for x in da)


def require_valid(d: Derivation, context: str = "derivation") -> None:
    errors = check_derivation(d)
    if errors:
        raise DerivError(f"invalid {context}: {errors[0]}")


# ---------------------------------------------------------------------------
# JSON encoding

def derivation_to_json(d: Derivation) -> dict:
    from .syntax import term_str

    node = {
        "rule": d.rule,
        "ctx": [{"var": x, "type": inter_to_json(a)} for x, a in d.basis],
        "term": term_str(d.subject),
        "type": strict_to_json(d.stype),
        "premises": [derivation_to_json(p) for p in d.premises],
    }
    if d.witness is not None:
        node["witness_index"] = d.witness
    return node


def derivation_from_json(data: dict) -> Derivation:
    from .syntax import parse_sterm

    if not isinstance(data, dict):
        raise DerivError("derivation node must be an object")
    try:
        rule = data["rule"]
        ctx = basis({entry["var"]: inter_from_json(entry["type"]) for entry in data["ctx"]})
        subject = parse_sterm(data["term"])
        stype = strict_from_json(data["type"])
        premises = tuple(derivation_from_json(p) for p in data.get("premises", []))
    except (KeyError, TypeError) as e:
        raise DerivError(f"bad derivation encoding: {e}") from e
    witness = data.get("witness_index")
    return Derivation(rule, ctx, subject, stype, premises, witness)


def load_derivation(path: str) -> Derivation:
    with open(path, "r", encoding="utf-8") as fh:
        return derivation_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Normal-form typing

def _spine(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def nf_type(t: Term) -> Derivation:
    """A valid derivation for any normal form, built by structural recursion:
    spine heads get the arrow type that consumes their argument types."""
    if not is_normal_form(t):
        raise DerivError("nf_type requires a normal form")
    fresh_atom = atom_supply()

    def build(t: Term) -> Derivation:
        match t:
            case Var(x):
                return mk_ax(x, fresh_atom())
            case Abs(x, Era(y, body)) if y == x:
                return mk_arri(mk_thin(build(body), x), x)
            case Abs(x, body):
                return mk_arri(build(body), x)
            case Era(x, body):
                return mk_thin(build(body), x)
            case Dup(_, _, _, _) | App(_, _):
                return build_spine(t, [])
        raise DerivError(f"not a term: {t!r}")

    def build_spine(t: Term, tail: list[Strict]) -> Derivation:
        head, args = _spine(t)
        arg_ds = [build(a) for a in args]
        if isinstance(head, Var):
            result: Strict = fresh_atom()
            for s in reversed(tail):
                result = Arrow(singleton(s), result)
            for ad in reversed(arg_ds):
                result = Arrow(singleton(ad.stype), result)
            d = mk_ax(head.name, result)
        elif isinstance(head, Dup):
            pairs: list[tuple[str, str, str]] = []
            bottom: Term = head
            while isinstance(bottom, Dup):
                pairs.append((bottom.source, bottom.left, bottom.right))
                bottom = bottom.body
            d = build_spine(bottom, [ad.stype for ad in arg_ds] + tail)
            for source, left, right in reversed(pairs):
                d = mk_cont(d, source, left, right)
        else:
            raise DerivError("spine head of a normal form must be a variable or duplications")
        for ad in arg_ds:
            d = mk_arre(d, ad, (ad,))
        return d

    return build(t)
