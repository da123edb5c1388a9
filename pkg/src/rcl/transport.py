"""Derivation surgery: typing transported forward along reduction steps,
restored backward across redex contraction, and the SN certifier built on
both directions.

Forward transport mirrors each evaluation rule of the substitution operator
at the derivation level (a substitution node is pushed toward the leaves
until it disappears), and permutes thinning/contraction nodes for the
non-beta rules.  Backward expansion runs the same transformations in
reverse; the beta case additionally needs a typing of the argument, supplied
by an oracle, for the case where the argument's types were forgotten.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .deriv import (
    ARR_E,
    ARR_I,
    AX,
    CONT,
    SUBST,
    THIN,
    Derivation,
    DerivError,
    ExpandError,
    TransportError,
    mk_arre,
    mk_arri,
    mk_ax,
    mk_cont,
    mk_subst,
    mk_thin,
    nf_type,
    rebuild_arg_node,
)
from .reduction import (
    DEFAULT_BUDGET_NODES,
    DEFAULT_BUDGET_STEPS,
    ReductionStep,
    _step_sort_key,
    classify_sn,
    enumerate_redexes,
)
from .subst import (
    STerm,
    Sub,
    _step_local,
    contains_sub,
    make_sub,
    s_all_names,
    s_replace_at,
    s_subterm_at,
    sub_positions,
)
from .terms import (
    Abs,
    App,
    Dup,
    Era,
    Path,
    Term,
    Var,
    all_names,
    apply_equiv_step,
    free_var_list,
    fresh_supply,
    is_normal_form,
    subterm_at,
)
from .types import basis, basis_get, basis_domain, inter, type_key

Oracle = Callable[[Term], Optional[Derivation]]


# ---------------------------------------------------------------------------
# Structural helpers

def align_to(d: Derivation, target: STerm, mapping: dict[str, str]) -> Derivation:
    """The same derivation over an alpha-variant subject; `mapping` renames
    the free names of d's subject onto target's."""
    new_basis = basis({mapping.get(x, x): a for x, a in d.basis})
    sub = d.subject
    match d.rule:
        case "Ax":
            if not isinstance(target, Var):
                raise DerivError("alignment shape mismatch at a variable")
            return Derivation(AX, new_basis, target, d.stype)
        case "ArrI":
            if not (isinstance(sub, Abs) and isinstance(target, Abs)):
                raise DerivError("alignment shape mismatch at an abstraction")
            inner = align_to(d.premises[0], target.body,
                             {**mapping, sub.binder: target.binder})
            return mk_arri(inner, target.binder)
        case "Thin":
            if not (isinstance(sub, Era) and isinstance(target, Era)):
                raise DerivError("alignment shape mismatch at an erasure")
            inner = align_to(d.premises[0], target.body, mapping)
            return mk_thin(inner, mapping.get(sub.erased, sub.erased))
        case "Cont":
            if not (isinstance(sub, Dup) and isinstance(target, Dup)):
                raise DerivError("alignment shape mismatch at a duplication")
            m2 = {**mapping, sub.left: target.left, sub.right: target.right}
            inner = align_to(d.premises[0], target.body, m2)
            return mk_cont(inner, mapping.get(sub.source, sub.source),
                           target.left, target.right)
        case "ArrE":
            if not (isinstance(sub, App) and isinstance(target, App)):
                raise DerivError("alignment shape mismatch at an application")
            major = align_to(d.premises[0], target.fun, mapping)
            args = tuple(align_to(p, target.arg, mapping) for p in d.premises[1:])
            return rebuild_arg_node(d, major, args, d.witness or 1)
        case "Subst":
            if not (isinstance(sub, Sub) and isinstance(target, Sub)):
                raise DerivError("alignment shape mismatch at a substitution")
            m2 = {**mapping, sub.target: target.target}
            major = align_to(d.premises[0], target.body, m2)
            args = tuple(align_to(p, target.replacement, mapping) for p in d.premises[1:])
            return rebuild_arg_node(d, major, args, d.witness or 1)
    raise DerivError(f"unknown rule {d.rule!r}")


def at_path(d: Derivation, pos: Path, f: Callable[[Derivation], Derivation]) -> Derivation:
    """Apply f to the derivation node(s) addressing pos in the subject; every
    argument premise shares the subject, so descending into an argument
    transforms all of them."""
    if not pos:
        return f(d)
    i, rest = pos[0], pos[1:]
    match d.rule, i:
        case ("ArrI", 0):
            return mk_arri(at_path(d.premises[0], rest, f), d.subject.binder)
        case ("Thin", 0):
            return mk_thin(at_path(d.premises[0], rest, f), d.subject.erased)
        case ("Cont", 0):
            s = d.subject
            return mk_cont(at_path(d.premises[0], rest, f), s.source, s.left, s.right)
        case ("ArrE", 0) | ("Subst", 0):
            major = at_path(d.premises[0], rest, f)
            return rebuild_arg_node(d, major, d.premises[1:], d.witness or 1)
        case ("ArrE", 1) | ("Subst", 1):
            args = tuple(at_path(p, rest, f) for p in d.premises[1:])
            return rebuild_arg_node(d, d.premises[0], args, d.witness or 1)
    raise DerivError(f"cannot descend to {pos} at a {d.rule} node")


def _match_types(pool: list[Derivation], want) -> list[Derivation]:
    """Pick one premise per required strict type (multiset matching); the
    chosen premises are removed from the pool."""
    chosen: list[Derivation] = []
    for s in want:
        key = type_key(s)
        for i, w in enumerate(pool):
            if type_key(w.stype) == key:
                chosen.append(pool.pop(i))
                break
        else:
            raise TransportError("argument typings do not cover the required types")
    return chosen


def _reusable_match(pool: list[Derivation], want) -> list[Derivation]:
    """Like _match_types but premises may be reused (witness branches only)."""
    chosen = []
    for s in want:
        key = type_key(s)
        for w in pool:
            if type_key(w.stype) == key:
                chosen.append(w)
                break
        else:
            raise TransportError("no argument typing at the required type")
    return chosen


# ---------------------------------------------------------------------------
# Substitution lemma: push a substitution node through to the leaves

def subst_lemma_apply(d: Derivation, x: str, ws: list[Derivation],
                      avoid: frozenset[str] | set[str] = frozenset()) -> Derivation:
    """From a derivation of M (with x at the intersection of the main
    witnesses' types) and typings of N, a derivation of M with N substituted.

    ws[0] is the throwaway witness; ws[1:] carry the types making up x's
    intersection type."""
    if not ws:
        raise DerivError("the witness premise is mandatory")
    n = ws[0].subject
    if any(w.subject != n for w in ws):
        raise DerivError("argument premises must share one subject")
    if not isinstance(n, (Var, Abs, App, Era, Dup)) or contains_sub(n):
        raise DerivError("replacement must be substitution free")
    m = d.subject
    if contains_sub(m):
        raise DerivError("substitution lemma applies to substitution-free subjects")
    if basis_get(d.basis, x) != inter(w.stype for w in ws[1:]):
        raise DerivError("x's type must be the intersection of the main premise types")
    s0 = make_sub(m, n, x, avoid)
    if s0 != Sub(m, n, x):
        raise TransportError("inputs violate the naming convention; freshen first")
    deriv = mk_subst(d, x, ws[0], tuple(ws[1:]))
    return _push_all(deriv, s0, avoid)


def _push_all(deriv: Derivation, s0: STerm,
              avoid: frozenset[str] | set[str]) -> Derivation:
    """Run the substitution evaluation loop, transforming the derivation in
    lockstep (same scheduling and fresh-name stream as eval_subst)."""
    used = s_all_names(s0) | set(avoid)
    fresh = fresh_supply(used)
    current = s0
    while True:
        subs = sub_positions(current)
        if not subs:
            break
        pick = None
        for p in subs:
            node = s_subterm_at(current, p)
            assert isinstance(node, Sub)
            if not contains_sub(node.body):
                pick = p
                break
        assert pick is not None
        node = s_subterm_at(current, pick)
        assert isinstance(node, Sub)
        rule, local = _step_local(node, fresh, used)
        deriv = at_path(deriv, pick, lambda nd: _push_case(nd, rule, local))
        current = s_replace_at(current, pick, local)
    if deriv.subject != current:
        raise TransportError("derivation lost track of the subject during the push")
    return deriv


def _push_case(nd: Derivation, rule: str, local: STerm) -> Derivation:
    """One evaluation rule mirrored on the typing derivation."""
    if nd.rule != SUBST:
        raise TransportError(f"expected a substitution node, found {nd.rule}")
    assert isinstance(nd.subject, Sub)
    x = nd.subject.target
    major = nd.premises[0]
    wit = nd.witness_premise()
    mains = list(nd.main_args())

    if rule == "var":
        if len(mains) != 1:
            raise TransportError("variable hit requires a single main premise")
        return mains[0]

    if rule == "abs":
        assert isinstance(local, Abs)
        inner = mk_subst(major.premises[0], x, wit, tuple(mains))
        return mk_arri(inner, local.binder)

    if rule == "app-left":
        inner = mk_subst(major.premises[0], x, wit, tuple(mains))
        return rebuild_arg_node(major, inner, major.premises[1:], major.witness or 1)

    if rule == "app-right":
        return _push_app_right(nd, major, wit, mains, x)

    if rule == "era-other":
        assert isinstance(local, Era)
        inner = mk_subst(major.premises[0], x, wit, tuple(mains))
        return mk_thin(inner, local.erased)

    if rule == "era-hit":
        if mains:
            raise TransportError("erasure hit requires the target typed at Top")
        d0 = major.premises[0]
        names = [y for y, _ in _peel_eras(local)]
        for y in reversed(names):
            d0 = mk_thin(d0, y)
        return d0

    if rule == "dup-other":
        assert isinstance(local, Dup)
        inner = mk_subst(major.premises[0], x, wit, tuple(mains))
        return mk_cont(inner, local.source, local.left, local.right)

    if rule == "dup-hit":
        return _push_dup_hit(nd, major, wit, mains, local)

    raise TransportError(f"unknown evaluation rule {rule!r}")


def _peel_eras(t: STerm) -> list[tuple[str, STerm]]:
    out = []
    while isinstance(t, Era):
        out.append((t.erased, t.body))
        t = t.body
    return out


def _push_app_right(nd: Derivation, major: Derivation, wit: Derivation,
                    mains: list[Derivation], x: str) -> Derivation:
    arg_premises = list(major.premises[1:])
    w_idx = (major.witness or 1) - 1
    pool = list(mains)
    new_args: list[Optional[Derivation]] = [None] * len(arg_premises)
    for i, q in enumerate(arg_premises):
        if i == w_idx:
            continue
        need = basis_get(q.basis, x)
        group = _match_types(pool, need)
        new_args[i] = mk_subst(q, x, wit, tuple(group))
    if pool:
        raise TransportError("argument typings left over after the split")
    new_args[w_idx] = _push_witness_branch(arg_premises, new_args, w_idx, x, wit, mains)
    return rebuild_arg_node(major, major.premises[0],
                            tuple(new_args), major.witness or 1)  # type: ignore[arg-type]


def _push_witness_branch(arg_premises: list[Derivation],
                         new_args: list[Optional[Derivation]], w_idx: int,
                         x: str, wit: Derivation,
                         mains: list[Derivation]) -> Derivation:
    q0 = arg_premises[w_idx]
    transformed = [p for i, p in enumerate(new_args) if i != w_idx and p is not None]
    # prefer an alias of a sibling: the witness's types are forgotten anyway
    for i, q in enumerate(arg_premises):
        if i != w_idx and q == q0 and new_args[i] is not None:
            return new_args[i]  # type: ignore[return-value]
    if transformed:
        return transformed[0]
    # the argument is typed by the witness alone; rebuild it from what we hold
    need = basis_get(q0.basis, x)
    if not need:
        return mk_subst(q0, x, wit, ())
    available = [wit] + mains
    if isinstance(q0.subject, Var) and q0.subject.name == x:
        return mk_subst(mk_ax(x, wit.stype), x, wit, (wit,))
    try:
        found = _reusable_match(available, need)
    except TransportError as e:
        raise TransportError(
            "cannot transport through an argument typed only by its witness: "
            f"{e}") from e
    return mk_subst(q0, x, wit, tuple(found))


def _push_dup_hit(nd: Derivation, major: Derivation, wit: Derivation,
                  mains: list[Derivation], local: STerm) -> Derivation:
    renames: list[tuple[str, str, str]] = []
    t = local
    while isinstance(t, Dup):
        renames.append((t.source, t.left, t.right))
        t = t.body
    assert isinstance(t, Sub) and isinstance(t.body, Sub)
    core_outer, core_inner = t, t.body
    n1, n2 = core_inner.replacement, core_outer.replacement
    assert isinstance(nd.subject, Sub) and isinstance(nd.subject.body, Dup)
    dup = nd.subject.body
    a, b = dup.left, dup.right
    p = major.premises[0]
    alpha = basis_get(p.basis, a)
    beta = basis_get(p.basis, b)
    pool = list(mains)
    g1 = _match_types(pool, alpha)
    g2 = _match_types(pool, beta)
    if pool:
        raise TransportError("argument typings left over after the dup split")
    map1 = {y: y1 for y, y1, _ in renames}
    map2 = {y: y2 for y, _, y2 in renames}
    wit1 = align_to(wit, n1, map1)
    wit2 = align_to(wit, n2, map2)
    s1 = mk_subst(p, a, wit1, tuple(align_to(w, n1, map1) for w in g1))
    s2 = mk_subst(s1, b, wit2, tuple(align_to(w, n2, map2) for w in g2))
    d = s2
    for source, left, right in reversed(renames):
        d = mk_cont(d, source, left, right)
    return d


# ---------------------------------------------------------------------------
# Forward transport

def transport_forward(d: Derivation, step: ReductionStep) -> Derivation:
    """Same basis and type, subject rewritten by the step."""
    if d.subject != step.before:
        raise TransportError("derivation subject differs from the step's start term")
    term = step.before
    for eps in step.eps:
        d = at_path(d, eps[1], lambda nd: _eps_case(nd, eps[0]))
        term = apply_equiv_step(term, eps)
    avoid = frozenset(all_names(term))
    redex = subterm_at(term, step.pos)
    d = at_path(d, step.pos, lambda nd: _forward_case(nd, step.rule, redex, avoid))
    if d.subject != step.after:
        raise TransportError("transport result does not match the step's target term")
    return d


def _eps_case(nd: Derivation, axiom: str) -> Derivation:
    match axiom, nd.subject:
        case "eps1", Era(x, Era(y, _)):
            inner = nd.premises[0]
            return mk_thin(mk_thin(inner.premises[0], x), y)
        case "eps2", Dup(x, a, b, _):
            return mk_cont(nd.premises[0], x, b, a)
        case "eps3", Dup(x, a, b, Dup(a2, u, v, _)) if a == a2:
            p = nd.premises[0].premises[0]
            return mk_cont(mk_cont(p, a, b, v), x, a, u)
        case "eps4", Dup(x, a, b, Dup(y, u, v, _)):
            p = nd.premises[0].premises[0]
            return mk_cont(mk_cont(p, x, a, b), y, u, v)
    raise TransportError(f"axiom {axiom} does not match the derivation subject")


def _forward_case(nd: Derivation, rule: str, redex: Term,
                  avoid: frozenset[str]) -> Derivation:
    match rule:
        case "beta":
            assert isinstance(redex, App) and isinstance(redex.fun, Abs)
            major = nd.premises[0]
            if major.rule != ARR_I:
                raise TransportError("beta transport needs an abstraction premise")
            body_d = major.premises[0]
            ws = [nd.witness_premise()] + list(nd.main_args())
            return subst_lemma_apply(body_d, redex.fun.binder, ws, avoid)
        case "gamma1":
            inner = nd.premises[0]  # ArrI
            s = nd.subject
            return mk_arri(mk_cont(inner.premises[0], s.source, s.left, s.right),
                           inner.subject.binder)
        case "gamma2":
            inner = nd.premises[0]  # ArrE
            s = nd.subject
            new_major = mk_cont(inner.premises[0], s.source, s.left, s.right)
            return rebuild_arg_node(inner, new_major, inner.premises[1:],
                                    inner.witness or 1)
        case "gamma3":
            inner = nd.premises[0]  # ArrE
            s = nd.subject
            args = tuple(mk_cont(q, s.source, s.left, s.right)
                         for q in inner.premises[1:])
            return rebuild_arg_node(inner, inner.premises[0], args, inner.witness or 1)
        case "omega1":
            inner = nd.premises[0]  # Thin
            s = nd.subject
            assert isinstance(s, Abs) and isinstance(s.body, Era)
            return mk_thin(mk_arri(inner.premises[0], s.binder), s.body.erased)
        case "omega2":
            major = nd.premises[0]  # Thin
            s = nd.subject
            assert isinstance(s, App) and isinstance(s.fun, Era)
            rebuilt = rebuild_arg_node(nd, major.premises[0], nd.premises[1:],
                                       nd.witness or 1)
            return mk_thin(rebuilt, s.fun.erased)
        case "omega3":
            s = nd.subject
            assert isinstance(s, App) and isinstance(s.arg, Era)
            x = s.arg.erased
            args = tuple(q.premises[0] for q in nd.premises[1:])
            rebuilt = rebuild_arg_node(nd, nd.premises[0], args, nd.witness or 1)
            return mk_thin(rebuilt, x)
        case "gamma-omega1":
            inner = nd.premises[0]  # Thin
            s = nd.subject
            assert isinstance(s, Dup) and isinstance(s.body, Era)
            return mk_thin(mk_cont(inner.premises[0], s.source, s.left, s.right),
                           s.body.erased)
        case "gamma-omega2":
            s = nd.subject
            assert isinstance(s, Dup) and isinstance(s.body, Era) and s.body.erased == s.left
            thin = nd.premises[0]
            inner = thin.premises[0]
            from .terms import rename_free

            target = rename_free(inner.subject, s.right, s.source)
            return align_to(inner, target, {s.right: s.source})
    raise TransportError(f"unknown rule {rule!r}")


# ---------------------------------------------------------------------------
# Backward expansion

def expand_step(d_after: Derivation, step: ReductionStep,
                oracle: Optional[Oracle] = None) -> Derivation:
    """From a derivation of the step's target, a derivation of its source
    with the same judgment; beta expansion may consult the oracle for a
    typing of the argument."""
    if d_after.subject != step.after:
        raise ExpandError("derivation subject differs from the step's target term")
    term = step.before
    for eps in step.eps:
        term = apply_equiv_step(term, eps)
    avoid = frozenset(all_names(term))
    redex = subterm_at(term, step.pos)
    d = at_path(d_after, step.pos,
                lambda nd: _backward_case(nd, step.rule, redex, avoid, oracle))
    for eps in reversed(step.eps):
        d = at_path(d, eps[1], lambda nd: _eps_case(nd, eps[0]))
    if d.subject != step.before:
        raise ExpandError("expansion result does not match the step's source term")
    return d


def _backward_case(nd: Derivation, rule: str, redex: Term,
                   avoid: frozenset[str], oracle: Optional[Oracle]) -> Derivation:
    match rule:
        case "beta":
            return _beta_expand(nd, redex, avoid, oracle)
        case "gamma1":
            assert isinstance(redex, Dup)
            inner = nd.premises[0]  # Cont under ArrI
            binder = nd.subject.binder
            return mk_cont(mk_arri(inner.premises[0], binder),
                           redex.source, redex.left, redex.right)
        case "gamma2":
            assert isinstance(redex, Dup)
            major = nd.premises[0]  # Cont
            rebuilt = rebuild_arg_node(nd, major.premises[0], nd.premises[1:],
                                       nd.witness or 1)
            return mk_cont(rebuilt, redex.source, redex.left, redex.right)
        case "gamma3":
            assert isinstance(redex, Dup)
            args = tuple(q.premises[0] for q in nd.premises[1:])
            rebuilt = rebuild_arg_node(nd, nd.premises[0], args, nd.witness or 1)
            return mk_cont(rebuilt, redex.source, redex.left, redex.right)
        case "omega1":
            assert isinstance(redex, Abs) and isinstance(redex.body, Era)
            inner = nd.premises[0]  # ArrI under Thin
            return mk_arri(mk_thin(inner.premises[0], redex.body.erased), redex.binder)
        case "omega2":
            assert isinstance(redex, App) and isinstance(redex.fun, Era)
            inner = nd.premises[0]  # ArrE under Thin
            new_major = mk_thin(inner.premises[0], redex.fun.erased)
            return rebuild_arg_node(inner, new_major, inner.premises[1:],
                                    inner.witness or 1)
        case "omega3":
            assert isinstance(redex, App) and isinstance(redex.arg, Era)
            inner = nd.premises[0]  # ArrE under Thin
            x = redex.arg.erased
            args = tuple(mk_thin(q, x) for q in inner.premises[1:])
            return rebuild_arg_node(inner, inner.premises[0], args, inner.witness or 1)
        case "gamma-omega1":
            assert isinstance(redex, Dup) and isinstance(redex.body, Era)
            inner = nd.premises[0]  # Cont under Thin
            return mk_cont(mk_thin(inner.premises[0], redex.body.erased),
                           redex.source, redex.left, redex.right)
        case "gamma-omega2":
            assert isinstance(redex, Dup) and isinstance(redex.body, Era)
            aligned = align_to(nd, redex.body.body, {redex.source: redex.right})
            return mk_cont(mk_thin(aligned, redex.left),
                           redex.source, redex.left, redex.right)
    raise ExpandError(f"unknown rule {rule!r}")


def _beta_expand(nd: Derivation, redex: Term, avoid: frozenset[str],
                 oracle: Optional[Oracle]) -> Derivation:
    assert isinstance(redex, App) and isinstance(redex.fun, Abs)
    lam, n_term = redex.fun, redex.arg
    x, m = lam.binder, lam.body
    s0 = make_sub(m, n_term, x, avoid)
    if s0 != Sub(m, n_term, x):
        raise ExpandError("redex violates the naming convention; freshen first")
    # replay the evaluation to collect intermediate states
    used = s_all_names(s0) | set(avoid)
    fresh = fresh_supply(used)
    states: list[STerm] = [s0]
    steps: list[tuple[str, Path, STerm]] = []
    current = s0
    while True:
        subs = sub_positions(current)
        if not subs:
            break
        pick = None
        for p in subs:
            node = s_subterm_at(current, p)
            assert isinstance(node, Sub)
            if not contains_sub(node.body):
                pick = p
                break
        assert pick is not None
        node = s_subterm_at(current, pick)
        assert isinstance(node, Sub)
        rule, local = _step_local(node, fresh, used)
        steps.append((rule, pick, local))
        current = s_replace_at(current, pick, local)
        states.append(current)
    if nd.subject != current:
        raise ExpandError("contractum derivation does not match the evaluated redex")
    d = nd
    for i in range(len(steps) - 1, -1, -1):
        rule, pick, local = steps[i]
        pre_local = s_subterm_at(states[i], pick)
        assert isinstance(pre_local, Sub)
        d = at_path(d, pick, lambda down: _unapply_case(down, rule, pre_local, oracle))
    if d.subject != s0:
        raise ExpandError("rewind did not restore the substitution term")
    major = d.premises[0]
    return mk_arre(mk_arri(major, x), d.witness_premise(), d.main_args())


def _unapply_case(nd: Derivation, rule: str, pre: Sub,
                  oracle: Optional[Oracle]) -> Derivation:
    x = pre.target
    n_term = pre.replacement

    if rule == "var":
        return mk_subst(mk_ax(x, nd.stype), x, nd, (nd,))

    if rule == "abs":
        inner = nd.premises[0]  # Subst under ArrI
        _expect(inner, SUBST, "abstraction rewind")
        binder = nd.subject.binder
        return mk_subst(mk_arri(inner.premises[0], binder), x,
                        inner.witness_premise(), inner.main_args())

    if rule == "app-left":
        inner = nd.premises[0]  # Subst in head position
        _expect(inner, SUBST, "application rewind")
        rebuilt = rebuild_arg_node(nd, inner.premises[0], nd.premises[1:],
                                   nd.witness or 1)
        return mk_subst(rebuilt, x, inner.witness_premise(), inner.main_args())

    if rule == "app-right":
        w_idx = (nd.witness or 1) - 1
        arg_premises = list(nd.premises[1:])
        peeled: list[Derivation] = []
        collected: list[Derivation] = []
        root_wit: Optional[Derivation] = None
        for i, q in enumerate(arg_premises):
            _expect(q, SUBST, "argument rewind")
            peeled.append(q.premises[0])
            if i == w_idx:
                root_wit = q.witness_premise()
            else:
                collected.extend(q.main_args())
        rebuilt = rebuild_arg_node(nd, nd.premises[0], tuple(peeled), nd.witness or 1)
        assert root_wit is not None
        return mk_subst(rebuilt, x, root_wit, tuple(collected))

    if rule == "era-other":
        inner = nd.premises[0]
        _expect(inner, SUBST, "erasure rewind")
        return mk_subst(mk_thin(inner.premises[0], nd.subject.erased), x,
                        inner.witness_premise(), inner.main_args())

    if rule == "era-hit":
        names = free_var_list(n_term)
        d0 = nd
        for _ in names:
            _expect(d0, THIN, "erasure-hit rewind")
            d0 = d0.premises[0]
        w0 = oracle(n_term) if oracle is not None else None
        if w0 is None:
            raise ExpandError("beta expansion requires a typing of the erased argument")
        if w0.subject != n_term:
            w0 = align_to(w0, n_term, {})
        return mk_subst(mk_thin(d0, x), x, w0, ())

    if rule == "dup-other":
        inner = nd.premises[0]
        _expect(inner, SUBST, "duplication rewind")
        s = nd.subject
        return mk_subst(mk_cont(inner.premises[0], s.source, s.left, s.right), x,
                        inner.witness_premise(), inner.main_args())

    if rule == "dup-hit":
        assert isinstance(pre.body, Dup)
        a, b = pre.body.left, pre.body.right
        renames: list[tuple[str, str, str]] = []
        d0 = nd
        for _ in free_var_list(n_term):
            _expect(d0, CONT, "duplication-hit rewind")
            s = d0.subject
            assert isinstance(s, Dup)
            renames.append((s.source, s.left, s.right))
            d0 = d0.premises[0]
        _expect(d0, SUBST, "duplication-hit rewind")
        s2 = d0
        s1 = s2.premises[0]
        _expect(s1, SUBST, "duplication-hit rewind")
        map1inv = {y1: y for y, y1, _ in renames}
        map2inv = {y2: y for y, _, y2 in renames}
        p = s1.premises[0]
        wit_u = align_to(s1.witness_premise(), n_term, map1inv)
        g1 = tuple(align_to(w, n_term, map1inv) for w in s1.main_args())
        g2 = tuple(align_to(w, n_term, map2inv) for w in s2.main_args())
        return mk_subst(mk_cont(p, x, a, b), x, wit_u, g1 + g2)

    raise ExpandError(f"unknown evaluation rule {rule!r}")


def _expect(d: Derivation, rule: str, what: str) -> None:
    if d.rule != rule:
        raise ExpandError(f"{what}: expected a {rule} node, found {d.rule}")


# ---------------------------------------------------------------------------
# Strong-normalisation certificates

@dataclass(frozen=True)
class CertifyResult:
    status: str  # 'certified' | 'not-sn' | 'unknown'
    derivation: Optional[Derivation] = None
    cycle: Optional[tuple[Term, ...]] = None


def certify_sn(t: Term, budget_nodes: int = DEFAULT_BUDGET_NODES,
               budget_steps: int = DEFAULT_BUDGET_STEPS,
               memo: Optional[dict[Term, Derivation]] = None) -> CertifyResult:
    """Certificate construction: normal forms are typed directly; otherwise
    type the contractum of the first redex and expand backward, recursing on
    beta arguments for their typings.

    A memo table may be passed in to share certificates across calls; shared
    reducts then keep their derivations.
    """
    sn = classify_sn(t, budget_nodes, budget_steps)
    if sn.status == "non-sn":
        return CertifyResult("not-sn", cycle=sn.cycle)
    if sn.status == "unknown":
        return CertifyResult("unknown")

    if memo is None:
        memo = {}
    budget = [budget_steps]

    def build(term: Term) -> Optional[Derivation]:
        if term in memo:
            return memo[term]
        if budget[0] <= 0:
            raise _BudgetExhausted()
        budget[0] -= 1
        if is_normal_form(term):
            d = nf_type(term)
        else:
            steps = enumerate_redexes(term)
            step = min(steps, key=_step_sort_key)
            d_after = build(step.after)
            assert d_after is not None
            d = expand_step(d_after, step, oracle=build)
        memo[term] = d
        return d

    try:
        d = build(t)
    except _BudgetExhausted:
        return CertifyResult("unknown")
    assert d is not None
    return CertifyResult("certified", derivation=d)


class _BudgetExhausted(Exception):
    pass
