"""Explicit substitution: the term language extended with `M[N/x]` nodes.

The substitution operator is evaluated by eight atomic rules (variable hit,
descent under each constructor, erasure hit, duplication hit).  Evaluation
always terminates — witnessed by a node-count measure whose multiset strictly
decreases on every step — and is confluent, so `M[N/x]` has a unique
substitution-free normal form.  That normal form *defines* substitution on
plain terms (`substitute`).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .terms import (
    Abs,
    App,
    Dup,
    Era,
    Path,
    Term,
    TermError,
    Var,
    all_names,
    bound_vars,
    check_linear,
    free_var_list,
    free_vars,
    freshen,
    fresh_supply,
    pos_str,
)


@dataclass(frozen=True)
class Sub:
    """`body[replacement/target]`; the replacement is substitution-free."""

    body: "STerm"
    replacement: Term
    target: str


STerm = Union[Term, Sub]

SUB_RULES = ("var", "abs", "app-left", "app-right",
             "era-other", "era-hit", "dup-other", "dup-hit")


class SubstError(TermError):
    pass


# ---------------------------------------------------------------------------
# Free variables and validity

def sfree_var_list(s: STerm) -> list[str]:
    """Ordered free variables; a substitution removes its target in place and
    appends the replacement's variables."""
    match s:
        case Var(name):
            return [name]
        case Abs(binder, body):
            return [x for x in sfree_var_list(body) if x != binder]
        case App(fun, arg):
            return sfree_var_list(fun) + sfree_var_list(arg)
        case Era(erased, body):
            return [erased] + sfree_var_list(body)
        case Dup(source, left, right, body):
            rest = [x for x in sfree_var_list(body) if x != left and x != right]
            return [source] + rest
        case Sub(body, replacement, target):
            rest = [x for x in sfree_var_list(body) if x != target]
            return rest + free_var_list(replacement)
    raise TypeError(f"not a term: {s!r}")


def sfree_vars(s: STerm) -> frozenset[str]:
    return frozenset(sfree_var_list(s))


def contains_sub(s: STerm) -> bool:
    match s:
        case Sub(_, _, _):
            return True
        case Var(_):
            return False
        case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
            return contains_sub(body)
        case App(fun, arg):
            return contains_sub(fun) or contains_sub(arg)
    raise TypeError(f"not a term: {s!r}")


def check_sterm(s: STerm) -> list[tuple[Path, str, str]]:
    """Violations of the formation rules for substitution terms."""
    violations: list[tuple[Path, str, str]] = []

    def walk(s: STerm, pos: Path) -> None:
        match s:
            case Var(_):
                pass
            case Abs(binder, body):
                if binder not in sfree_vars(body):
                    violations.append((pos, "abs: binder not free in body", binder))
                walk(body, pos + (0,))
            case App(fun, arg):
                for x in sorted(sfree_vars(fun) & sfree_vars(arg)):
                    violations.append((pos, "app: free variables overlap", x))
                walk(fun, pos + (0,))
                walk(arg, pos + (1,))
            case Era(erased, body):
                if erased in sfree_vars(body):
                    violations.append((pos, "era: erased variable occurs in body", erased))
                walk(body, pos + (0,))
            case Dup(source, left, right, body):
                fv = sfree_vars(body)
                if left == right:
                    violations.append((pos, "dup: split names equal", left))
                if left not in fv:
                    violations.append((pos, "dup: left split unused in body", left))
                if right not in fv:
                    violations.append((pos, "dup: right split unused in body", right))
                if source in fv - {left, right}:
                    violations.append((pos, "dup: source already free in body", source))
                walk(body, pos + (0,))
            case Sub(body, replacement, target):
                if contains_sub(replacement):
                    violations.append((pos, "sub: replacement contains a substitution", target))
                else:
                    rep = check_linear(replacement)
                    for vpos, rule, var in rep.violations:
                        violations.append((pos + (1,) + vpos, rule, var))
                if target not in sfree_vars(body):
                    violations.append((pos, "sub: target not free in body", target))
                overlap = (sfree_vars(body) - {target}) & sfree_vars(replacement)
                for x in sorted(overlap):
                    violations.append((pos, "sub: body and replacement share a variable", x))
                walk(body, pos + (0,))
            case _:
                raise TypeError(f"not a term: {s!r}")

    walk(s, ())
    return violations


def require_valid_sterm(s: STerm) -> None:
    violations = check_sterm(s)
    if violations:
        pos, rule, var = violations[0]
        raise SubstError(f"invalid substitution term at {pos_str(pos)}: {rule} ({var})")


def s_all_names(s: STerm) -> set[str]:
    match s:
        case Sub(body, replacement, target):
            return s_all_names(body) | all_names(replacement) | {target}
        case Var(x):
            return {x}
        case Abs(x, body):
            return s_all_names(body) | {x}
        case App(fun, arg):
            return s_all_names(fun) | s_all_names(arg)
        case Era(x, body):
            return s_all_names(body) | {x}
        case Dup(x, l, r, body):
            return s_all_names(body) | {x, l, r}
    raise TypeError(f"not a term: {s!r}")


# ---------------------------------------------------------------------------
# Measure

def measure(s: STerm) -> int:
    """Node count of the underlying term; substitution nodes are transparent."""
    match s:
        case Var(_):
            return 1
        case App(fun, arg):
            return measure(fun) + measure(arg) + 1
        case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
            return measure(body) + 1
        case Sub(body, _, _):
            return measure(body)
    raise TypeError(f"not a term: {s!r}")


def mul_multiset(s: STerm) -> Counter[int]:
    """One measure entry per substitution node."""
    match s:
        case Var(_):
            return Counter()
        case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
            return mul_multiset(body)
        case App(fun, arg):
            return mul_multiset(fun) + mul_multiset(arg)
        case Sub(body, _, _):
            return Counter({measure(body): 1}) + mul_multiset(body)
    raise TypeError(f"not a term: {s!r}")


def multiset_gt(a: Counter[int], b: Counter[int]) -> bool:
    """Strict Dershowitz-Manna order on finite multisets of naturals."""
    extra_a = a - b
    extra_b = b - a
    if not extra_a:
        return False
    top = max(extra_a)
    return all(y < top for y in extra_b)


# ---------------------------------------------------------------------------
# Positions over substitution terms

def s_subterm_at(s: STerm, pos: Path) -> STerm:
    for i in pos:
        match s, i:
            case (Abs(_, body) | Era(_, body) | Dup(_, _, _, body)), 0:
                s = body
            case App(fun, _), 0:
                s = fun
            case App(_, arg), 1:
                s = arg
            case Sub(body, _, _), 0:
                s = body
            case Sub(_, replacement, _), 1:
                s = replacement
            case _:
                raise SubstError(f"no subterm at {pos}")
    return s


def s_replace_at(s: STerm, pos: Path, new: STerm) -> STerm:
    if not pos:
        return new
    i, rest = pos[0], pos[1:]
    match s, i:
        case Abs(binder, body), 0:
            return Abs(binder, s_replace_at(body, rest, new))
        case App(fun, arg), 0:
            return App(s_replace_at(fun, rest, new), arg)
        case App(fun, arg), 1:
            return App(fun, s_replace_at(arg, rest, new))
        case Era(erased, body), 0:
            return Era(erased, s_replace_at(body, rest, new))
        case Dup(source, left, right, body), 0:
            return Dup(source, left, right, s_replace_at(body, rest, new))
        case Sub(body, replacement, target), 0:
            return Sub(s_replace_at(body, rest, new), replacement, target)
    raise SubstError(f"no subterm at {pos}")


def sub_positions(s: STerm, pos: Path = ()) -> list[Path]:
    """Positions of substitution nodes, in preorder."""
    out: list[Path] = []
    match s:
        case Sub(body, _, _):
            out.append(pos)
            out.extend(sub_positions(body, pos + (0,)))
        case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
            out.extend(sub_positions(body, pos + (0,)))
        case App(fun, arg):
            out.extend(sub_positions(fun, pos + (0,)))
            out.extend(sub_positions(arg, pos + (1,)))
    return out


# ---------------------------------------------------------------------------
# Evaluation

def era_stack(names: list[str], body: STerm) -> STerm:
    for x in reversed(names):
        body = Era(x, body)
    return body


def dup_cascade(triples: list[tuple[str, str, str]], body: STerm) -> STerm:
    for source, left, right in reversed(triples):
        body = Dup(source, left, right, body)
    return body


@dataclass(frozen=True)
class SubstStep:
    rule: str
    pos: Path
    mul_before: tuple[int, ...]
    mul_after: tuple[int, ...]
    renames: tuple[tuple[str, str, str], ...] = ()  # dup-hit: (var, copy1, copy2)


@dataclass(frozen=True)
class SubstTrace:
    start: STerm
    steps: tuple[SubstStep, ...]
    result: Term


def _mul_key(s: STerm) -> tuple[int, ...]:
    return tuple(sorted(mul_multiset(s).elements()))


def _rename_copy(n: Term, mapping: dict[str, str], avoid: set[str]) -> Term:
    """Copy of n with free variables renamed; binders refreshed to keep all
    names in the enclosing term distinct."""
    def go(t: Term) -> Term:
        match t:
            case Var(x):
                return Var(mapping.get(x, x))
            case Abs(x, body):
                return Abs(x, go(body))
            case App(fun, arg):
                return App(go(fun), go(arg))
            case Era(x, body):
                return Era(mapping.get(x, x), go(body))
            case Dup(s, l, r, body):
                return Dup(mapping.get(s, s), l, r, go(body))
        raise TypeError(f"not a term: {t!r}")

    renamed = go(n)
    if set(bound_vars(renamed)) & avoid:
        return freshen(renamed, avoid=avoid)
    return renamed


def _step_local(node: Sub, fresh: Callable[[str], str],
                used: set[str]) -> tuple[str, STerm]:
    """Apply the evaluation rule matching the head of the node's body."""
    body, n, x = node.body, node.replacement, node.target
    match body:
        case Sub(_, _, _):
            raise SubstError("inner substitution must be evaluated first")
        case Var(name):
            if name != x:
                raise SubstError(f"target {x!r} does not match variable {name!r}")
            return "var", n
        case Abs(binder, inner):
            return "abs", Abs(binder, Sub(inner, n, x))
        case App(fun, arg):
            if x in sfree_vars(fun):
                return "app-left", App(Sub(fun, n, x), arg)
            if x in sfree_vars(arg):
                return "app-right", App(fun, Sub(arg, n, x))
            raise SubstError(f"target {x!r} not free in either side of application")
        case Era(erased, inner):
            if erased == x:
                return "era-hit", era_stack(free_var_list(n), inner)
            return "era-other", Era(erased, Sub(inner, n, x))
        case Dup(source, left, right, inner):
            if source != x:
                return "dup-other", Dup(source, left, right, Sub(inner, n, x))
            fv_n = free_var_list(n)
            renames = tuple((y, fresh(y), fresh(y)) for y in fv_n)
            map1 = {y: y1 for y, y1, _ in renames}
            map2 = {y: y2 for y, _, y2 in renames}
            own_binders = set(bound_vars(n))
            n1 = _rename_copy(n, map1, used - own_binders)  # first copy may keep n's binders
            used.update(all_names(n1))
            n2 = _rename_copy(n, map2, used)
            used.update(all_names(n2))
            core = Sub(Sub(inner, n1, left), n2, right)
            return "dup-hit", dup_cascade(list(renames), core)

    raise TypeError(f"not a term: {body!r}")


def step_subst(s: STerm, pos: Path) -> STerm:
    """Apply one evaluation rule at the substitution node addressed by pos."""
    node = s_subterm_at(s, pos)
    if not isinstance(node, Sub):
        raise SubstError(f"no substitution node at {pos_str(pos)}")
    used = s_all_names(s)
    fresh = fresh_supply(used)
    _, result = _step_local(node, fresh, used)
    return s_replace_at(s, pos, result)


def eval_subst(s: STerm, avoid: frozenset[str] | set[str] = frozenset(),
               _checked: bool = False) -> tuple[Term, SubstTrace]:
    """Evaluate all substitution nodes, innermost first; returns the unique
    substitution-free result together with a replayable trace.

    Fresh names avoid `avoid` in addition to the names of s, so results can be
    spliced into an enclosing term without clashes.
    """
    if not _checked:
        require_valid_sterm(s)
    used = s_all_names(s) | set(avoid)
    fresh = fresh_supply(used)
    current = s
    steps: list[SubstStep] = []
    while True:
        subs = sub_positions(current)
        if not subs:
            break
        # innermost first: a node whose body holds no further substitution
        pick: Optional[Path] = None
        for p in subs:
            node = s_subterm_at(current, p)
            assert isinstance(node, Sub)
            if not contains_sub(node.body):
                pick = p
                break
        assert pick is not None
        node = s_subterm_at(current, pick)
        assert isinstance(node, Sub)
        before = _mul_key(current)
        rule, local = _step_local(node, fresh, used)
        renames: tuple[tuple[str, str, str], ...] = ()
        if rule == "dup-hit":
            renames = _extract_renames(node, local)
        current = s_replace_at(current, pick, local)
        steps.append(SubstStep(rule, pick, before, _mul_key(current), renames))
    assert not contains_sub(current)
    return current, SubstTrace(start=s, steps=tuple(steps), result=current)


def _extract_renames(node: Sub, result: STerm) -> tuple[tuple[str, str, str], ...]:
    out: list[tuple[str, str, str]] = []
    t = result
    while isinstance(t, Dup):
        out.append((t.source, t.left, t.right))
        t = t.body
    return tuple(out)


def replay_trace(trace: SubstTrace, avoid: frozenset[str] | set[str] = frozenset()) -> Term:
    """Re-run the recorded steps from the start term; must reach the result."""
    current = trace.start
    used = s_all_names(trace.start) | set(avoid)
    fresh = fresh_supply(used)
    for step in trace.steps:
        node = s_subterm_at(current, step.pos)
        if not isinstance(node, Sub):
            raise SubstError(f"trace step at {pos_str(step.pos)} does not address a substitution")
        rule, local = _step_local(node, fresh, used)
        if rule != step.rule:
            raise SubstError(f"trace mismatch at {pos_str(step.pos)}: {rule} != {step.rule}")
        current = s_replace_at(current, step.pos, local)
    if contains_sub(current):
        raise SubstError("trace replay did not eliminate all substitutions")
    return current  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Substitution on plain terms

def make_sub(m: Term, n: Term, x: str, avoid: frozenset[str] | set[str] = frozenset(),
             _checked: bool = False) -> Sub:
    """Build a valid substitution node, alpha-renaming binders where needed."""
    if not _checked:
        for t, label in ((m, "body"), (n, "replacement")):
            rep = check_linear(t)
            if not rep.ok:
                pos, rule, var = rep.violations[0]
                raise SubstError(f"{label} is ill-formed: {rule} ({var})")
        if x not in free_vars(m):
            raise SubstError(f"target {x!r} not free in body")
        shared = (free_vars(m) - {x}) & free_vars(n)
        if shared:
            raise SubstError(f"body and replacement share variables: {sorted(shared)}")
    n_names = all_names(n)
    if set(bound_vars(m)) & n_names:
        m = freshen(m, avoid=n_names | set(avoid))
    if set(bound_vars(n)) & all_names(m):
        n = freshen(n, avoid=all_names(m) | set(avoid))
    return Sub(m, n, x)


def substitute_traced(m: Term, n: Term, x: str,
                      avoid: frozenset[str] | set[str] = frozenset(),
                      _checked: bool = False) -> tuple[Term, SubstTrace]:
    """Substitution together with the evaluation trace that produced it."""
    return eval_subst(make_sub(m, n, x, avoid, _checked), avoid, _checked)


def substitute(m: Term, n: Term, x: str,
               avoid: frozenset[str] | set[str] = frozenset(),
               _checked: bool = False) -> Term:
    """Meta-level substitution: the normal form of `m[n/x]`."""
    result, _ = substitute_traced(m, n, x, avoid, _checked)
    return result


def substitute_many(m: Term, pairs: list[tuple[Term, str]]) -> Term:
    """Simultaneous substitution; any evaluation order gives the same result."""
    names = [x for _, x in pairs]
    if len(set(names)) != len(names):
        raise SubstError("duplicate substitution targets")
    fv = free_vars(m)
    for i, (n_i, x_i) in enumerate(pairs):
        if x_i not in fv:
            raise SubstError(f"target {x_i!r} not free in body")
        for n_j, _ in pairs[i + 1:]:
            if free_vars(n_i) & free_vars(n_j):
                raise SubstError("replacement free variables overlap")
    result = m
    for n_i, x_i in pairs:
        result = substitute(result, n_i, x_i)
    return result
