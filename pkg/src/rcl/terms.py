"""Core term language: variables, abstraction, application, erasure, duplication.

A term is *linear*: every free variable occurs exactly once, `del x. M`
records a variable that is present but unused, and `dup x as (x1,x2). M`
splits one variable into two fresh occurrences.  The AST itself is
unconstrained; `check_linear` decides whether a tree is a well-formed term,
and everything downstream assumes it is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Era:
    """`del x. M` — x is free in the whole but must not occur in M."""

    erased: str
    body: "Term"


@dataclass(frozen=True)
class Dup:
    """`dup x as (left,right). M` — left/right are bound in M, x is free."""

    source: str
    left: str
    right: str
    body: "Term"


Term = Union[Var, Abs, App, Era, Dup]

Path = tuple[int, ...]


class TermError(Exception):
    """Raised on ill-formed input where an operation requires a linear term."""


# ---------------------------------------------------------------------------
# Free variables

def free_var_list(t: Term) -> list[str]:
    """Ordered list of free variables.

    Erasure and duplication prepend the introduced name; abstraction and
    duplication remove the bound names in place.
    """
    match t:
        case Var(name):
            return [name]
        case Abs(binder, body):
            return [x for x in free_var_list(body) if x != binder]
        case App(fun, arg):
            return free_var_list(fun) + free_var_list(arg)
        case Era(erased, body):
            return [erased] + free_var_list(body)
        case Dup(source, left, right, body):
            rest = [x for x in free_var_list(body) if x != left and x != right]
            return [source] + rest
    raise TypeError(f"not a term: {t!r}")


def free_vars(t: Term) -> frozenset[str]:
    return frozenset(free_var_list(t))


def bound_vars(t: Term) -> list[str]:
    match t:
        case Var(_):
            return []
        case Abs(binder, body):
            return [binder] + bound_vars(body)
        case App(fun, arg):
            return bound_vars(fun) + bound_vars(arg)
        case Era(_, body):
            return bound_vars(body)
        case Dup(_, left, right, body):
            return [left, right] + bound_vars(body)
    raise TypeError(f"not a term: {t!r}")


def all_names(t: Term) -> set[str]:
    return set(free_var_list(t)) | set(bound_vars(t))


# ---------------------------------------------------------------------------
# Linearity (well-formedness)

@dataclass(frozen=True)
class LinearityReport:
    ok: bool
    violations: tuple[tuple[Path, str, str], ...]  # (position, rule, variable)


def check_linear(t: Term) -> LinearityReport:
    """Decide well-formedness; every violation names the failed side condition."""
    violations: list[tuple[Path, str, str]] = []

    def walk(t: Term, pos: Path) -> None:
        match t:
            case Var(_):
                pass
            case Abs(binder, body):
                if binder not in free_vars(body):
                    violations.append((pos, "abs: binder not free in body", binder))
                walk(body, pos + (0,))
            case App(fun, arg):
                overlap = free_vars(fun) & free_vars(arg)
                for x in sorted(overlap):
                    violations.append((pos, "app: free variables overlap", x))
                walk(fun, pos + (0,))
                walk(arg, pos + (1,))
            case Era(erased, body):
                if erased in free_vars(body):
                    violations.append((pos, "era: erased variable occurs in body", erased))
                walk(body, pos + (0,))
            case Dup(source, left, right, body):
                fv = free_vars(body)
                if left == right:
                    violations.append((pos, "dup: split names equal", left))
                if left not in fv:
                    violations.append((pos, "dup: left split unused in body", left))
                if right not in fv:
                    violations.append((pos, "dup: right split unused in body", right))
                if source in fv - {left, right}:
                    violations.append((pos, "dup: source already free in body", source))
                walk(body, pos + (0,))
            case _:
                raise TypeError(f"not a term: {t!r}")

    walk(t, ())
    return LinearityReport(ok=not violations, violations=tuple(violations))


def is_linear(t: Term) -> bool:
    return check_linear(t).ok


def require_linear(t: Term) -> None:
    rep = check_linear(t)
    if not rep.ok:
        pos, rule, var = rep.violations[0]
        raise TermError(f"ill-formed term at {pos_str(pos)}: {rule} ({var})")


def barendregt_violations(t: Term) -> list[str]:
    """Names that are bound twice, or both bound and free."""
    bound = bound_vars(t)
    seen: set[str] = set()
    bad: list[str] = []
    for x in bound:
        if x in seen and x not in bad:
            bad.append(x)
        seen.add(x)
    for x in free_var_list(t):
        if x in seen and x not in bad:
            bad.append(x)
    return bad


# ---------------------------------------------------------------------------
# Positions

def subterm_at(t: Term, pos: Path) -> Term:
    for i in pos:
        match t, i:
            case (Abs(_, body) | Era(_, body) | Dup(_, _, _, body)), 0:
                t = body
            case App(fun, _), 0:
                t = fun
            case App(_, arg), 1:
                t = arg
            case _:
                raise TermError(f"no subterm at {pos}")
    return t


def replace_at(t: Term, pos: Path, new: Term) -> Term:
    if not pos:
        return new
    i, rest = pos[0], pos[1:]
    match t, i:
        case Abs(binder, body), 0:
            return Abs(binder, replace_at(body, rest, new))
        case App(fun, arg), 0:
            return App(replace_at(fun, rest, new), arg)
        case App(fun, arg), 1:
            return App(fun, replace_at(arg, rest, new))
        case Era(erased, body), 0:
            return Era(erased, replace_at(body, rest, new))
        case Dup(source, left, right, body), 0:
            return Dup(source, left, right, replace_at(body, rest, new))
    raise TermError(f"no subterm at {pos}")


def positions(t: Term) -> Iterator[tuple[Path, Term]]:
    """All (path, subterm) pairs in preorder."""
    stack: list[tuple[Path, Term]] = [((), t)]
    while stack:
        pos, s = stack.pop()
        yield pos, s
        match s:
            case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
                stack.append((pos + (0,), body))
            case App(fun, arg):
                stack.append((pos + (1,), arg))
                stack.append((pos + (0,), fun))


def pos_str(pos: Path) -> str:
    return ".".join(str(i) for i in pos) if pos else "root"


# ---------------------------------------------------------------------------
# Alpha conversion

def rename_free(t: Term, old: str, new: str) -> Term:
    """Rename the free occurrences of `old` to `new` (no capture checks)."""
    match t:
        case Var(name):
            return Var(new) if name == old else t
        case Abs(binder, body):
            return t if binder == old else Abs(binder, rename_free(body, old, new))
        case App(fun, arg):
            return App(rename_free(fun, old, new), rename_free(arg, old, new))
        case Era(erased, body):
            return Era(new if erased == old else erased,
                       body if erased == old else rename_free(body, old, new))
        case Dup(source, left, right, body):
            source2 = new if source == old else source
            if old in (left, right):
                return Dup(source2, left, right, body)
            return Dup(source2, left, right, rename_free(body, old, new))
    raise TypeError(f"not a term: {t!r}")


def alpha_eq(a: Term, b: Term) -> bool:
    """Equality up to consistent renaming of bound names."""

    def go(a: Term, b: Term, ea: dict[str, int], eb: dict[str, int], depth: int) -> bool:
        match a, b:
            case Var(x), Var(y):
                return ea.get(x, x) == eb.get(y, y)
            case Abs(xa, ba), Abs(xb, bb):
                return go(ba, bb, {**ea, xa: depth}, {**eb, xb: depth}, depth + 1)
            case App(fa, aa), App(fb, ab):
                return go(fa, fb, ea, eb, depth) and go(aa, ab, ea, eb, depth)
            case Era(xa, ba), Era(xb, bb):
                if ea.get(xa, xa) != eb.get(xb, xb):
                    return False
                return go(ba, bb, ea, eb, depth)
            case Dup(sa, la, ra, ba), Dup(sb, lb, rb, bb):
                if ea.get(sa, sa) != eb.get(sb, sb):
                    return False
                return go(ba, bb, {**ea, la: depth, ra: depth + 1},
                          {**eb, lb: depth, rb: depth + 1}, depth + 2)
            case _:
                return False

    return go(a, b, {}, {}, 0)


def alpha_key(t: Term) -> str:
    """Canonical string key: equal iff terms are alpha-equal."""
    parts: list[str] = []
    env: dict[str, object] = {}
    counter = [0]

    def bind(x: str) -> object:
        counter[0] += 1
        old = env.get(x)
        env[x] = counter[0]
        return old

    def unbind(x: str, old: object) -> None:
        if old is None:
            del env[x]
        else:
            env[x] = old

    def name(x: str) -> str:
        got = env.get(x)
        return f"v{got}" if got is not None else f"f:{x}"

    def go(t: Term) -> None:
        kind = type(t)
        if kind is Var:
            parts.append(name(t.name))
        elif kind is App:
            parts.append("(@")
            go(t.fun)
            parts.append(" ")
            go(t.arg)
            parts.append(")")
        elif kind is Abs:
            old = bind(t.binder)
            parts.append("(\\")
            go(t.body)
            parts.append(")")
            unbind(t.binder, old)
        elif kind is Era:
            parts.append("(del ")
            parts.append(name(t.erased))
            parts.append(".")
            go(t.body)
            parts.append(")")
        elif kind is Dup:
            parts.append("(dup ")
            parts.append(name(t.source))
            parts.append(".")
            old_l = bind(t.left)
            old_r = bind(t.right)
            go(t.body)
            parts.append(")")
            unbind(t.right, old_r)
            unbind(t.left, old_l)
        else:
            raise TypeError(f"not a term: {t!r}")

    go(t)
    return "".join(parts)


def fresh_supply(used: set[str]):
    """Deterministic fresh names: base plus the least unused numeric suffix.

    Mutates `used` so callers can interleave their own claims with the supply.
    """

    def fresh(base: str) -> str:
        stem = base.rstrip("0123456789") or "v"
        k = 1
        while f"{stem}{k}" in used:
            k += 1
        name = f"{stem}{k}"
        used.add(name)
        return name

    return fresh


def freshen(t: Term, avoid: set[str] | None = None) -> Term:
    """Alpha-rename so all binders are distinct and disjoint from free/avoid names."""
    avoid = set(avoid or ())
    fresh = fresh_supply(all_names(t) | avoid)
    free = free_vars(t)
    taken: set[str] = set(free) | avoid  # binder names claimed so far, globally

    def claim(x: str) -> str:
        x2 = x if x not in taken else fresh(x)
        taken.add(x2)
        return x2

    def go(t: Term, env: dict[str, str]) -> Term:
        match t:
            case Var(x):
                return Var(env.get(x, x))
            case Abs(x, body):
                x2 = claim(x)
                return Abs(x2, go(body, {**env, x: x2}))
            case App(fun, arg):
                return App(go(fun, env), go(arg, env))
            case Era(x, body):
                return Era(env.get(x, x), go(body, env))
            case Dup(s, l, r, body):
                l2 = claim(l)
                r2 = claim(r)
                return Dup(env.get(s, s), l2, r2, go(body, {**env, l: l2, r: r2}))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


def alpha_normalise(t: Term) -> Term:
    """Rename binders to a canonical scheme determined only by the alpha-class."""
    free = free_vars(t)
    counter = [0]

    def next_name() -> str:
        while True:
            counter[0] += 1
            name = f"v{counter[0]}"
            if name not in free:
                return name

    def go(t: Term, env: dict[str, str]) -> Term:
        match t:
            case Var(x):
                return Var(env.get(x, x))
            case Abs(x, body):
                x2 = next_name()
                return Abs(x2, go(body, {**env, x: x2}))
            case App(fun, arg):
                return App(go(fun, env), go(arg, env))
            case Era(x, body):
                return Era(env.get(x, x), go(body, env))
            case Dup(s, l, r, body):
                l2 = next_name()
                r2 = next_name()
                return Dup(env.get(s, s), l2, r2, go(body, {**env, l: l2, r: r2}))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


# ---------------------------------------------------------------------------
# Structural equivalence

EQUIV_AXIOMS = ("eps1", "eps2", "eps3", "eps4")

EquivStep = tuple[str, Path]  # (axiom, position)

DEFAULT_CLASS_CAP = 10_000


class EquivCapError(TermError):
    """The structural-equivalence class exceeded the configured cap."""


def _axiom_results(t: Term) -> Iterator[tuple[str, Term]]:
    """Axiom applications at the root of t (each axiom is self-inverse)."""
    match t:
        case Era(x, Era(y, m)):
            yield "eps1", Era(y, Era(x, m))
        case _:
            pass
    match t:
        case Dup(x, a, b, body):
            yield "eps2", Dup(x, b, a, body)
            match body:
                case Dup(y, u, v, m):
                    if a == y:
                        # reassociate a splitting cascade: swap b with u
                        yield "eps3", Dup(x, y, u, Dup(y, b, v, m))
                    if x not in (u, v) and y not in (a, b):
                        yield "eps4", Dup(y, u, v, Dup(x, a, b, m))
                case _:
                    pass
        case _:
            pass


def _has_equiv_redex(t: Term) -> bool:
    # the swap axiom applies to every duplication; erasures only when adjacent
    kind = type(t)
    if kind is Var:
        return False
    if kind is Dup:
        return True
    if kind is Era:
        return type(t.body) is Era or _has_equiv_redex(t.body)
    if kind is App:
        return _has_equiv_redex(t.fun) or _has_equiv_redex(t.arg)
    return _has_equiv_redex(t.body)


def iter_equiv_class_steps(t: Term, cap: int = DEFAULT_CLASS_CAP
                           ) -> Iterator[tuple[Term, tuple[EquivStep, ...]]]:
    """Lazily yield the structural-equivalence class, one member per
    alpha-class, each with the axiom applications that produce it from t."""
    yield (t, ())
    if not _has_equiv_redex(t):
        # no adjacent erasures and no duplication anywhere: singleton class
        return
    visited: set[Term] = {t}
    seen_alpha: set[str] = {alpha_key(t)}
    queue: list[tuple[Term, tuple[EquivStep, ...]]] = [(t, ())]
    head = 0
    while head < len(queue):
        u, steps = queue[head]
        head += 1
        for pos, sub in positions(u):
            for axiom, new_sub in _axiom_results(sub):
                v = replace_at(u, pos, new_sub)
                if v in visited:
                    continue
                if len(visited) >= cap:
                    raise EquivCapError(f"equivalence class exceeds cap {cap}")
                visited.add(v)
                entry = (v, steps + ((axiom, pos),))
                queue.append(entry)
                k = alpha_key(v)
                if k not in seen_alpha:
                    seen_alpha.add(k)
                    yield entry


def equiv_class_steps(t: Term, cap: int = DEFAULT_CLASS_CAP) -> list[tuple[Term, tuple[EquivStep, ...]]]:
    return list(iter_equiv_class_steps(t, cap))


def equiv_class(t: Term, cap: int = DEFAULT_CLASS_CAP) -> list[Term]:
    return [u for u, _ in equiv_class_steps(t, cap)]


def apply_equiv_step(t: Term, step: EquivStep) -> Term:
    axiom, pos = step
    sub = subterm_at(t, pos)
    for ax, result in _axiom_results(sub):
        if ax == axiom:
            return replace_at(t, pos, result)
    raise TermError(f"axiom {axiom} does not apply at {pos_str(pos)}")


_canon_cache: dict[str, tuple[str, Term]] = {}


def _canonicalise(t: Term, cap: int) -> tuple[str, Term]:
    tkey = alpha_key(t)
    hit = _canon_cache.get(tkey)
    if hit is not None:
        return hit
    if not _has_equiv_redex(t):
        entry = (tkey, alpha_normalise(t))
    else:
        best_key = tkey
        best = t
        for u in equiv_class(t, cap):
            ukey = alpha_key(u)
            if ukey < best_key:
                best_key, best = ukey, u
        entry = (best_key, alpha_normalise(best))
    if len(_canon_cache) > 500_000:
        _canon_cache.clear()
    _canon_cache[tkey] = entry
    return entry


def equiv_canonical(t: Term, cap: int = DEFAULT_CLASS_CAP) -> Term:
    """Deterministic representative of the structural-equivalence class."""
    return _canonicalise(t, cap)[1]


def canonical_key(t: Term, cap: int = DEFAULT_CLASS_CAP) -> str:
    """Hash key identifying the term up to structural equivalence and alpha."""
    return _canonicalise(t, cap)[0]


# ---------------------------------------------------------------------------
# Head forms

HEAD_TAGS = ("Abs", "Var", "Era", "AbsApp", "DupApp", "EraApp")


@dataclass(frozen=True)
class HeadForm:
    tag: str
    head: Term
    spine: tuple[Term, ...]

    def reassemble(self) -> Term:
        t = self.head
        for arg in self.spine:
            t = App(t, arg)
        return t


def classify_head_form(t: Term) -> HeadForm:
    """Exactly one of six shapes; reassembling reproduces the input."""
    spine: list[Term] = []
    head = t
    while isinstance(head, App):
        spine.append(head.arg)
        head = head.fun
    spine.reverse()
    n = len(spine)
    match head:
        case Var(_):
            tag = "Var"
        case Abs(_, _):
            tag = "Abs" if n == 0 else "AbsApp"
        case Era(_, _):
            tag = "Era" if n == 0 else "EraApp"
        case Dup(_, _, _, _):
            tag = "DupApp"
        case _:
            raise TypeError(f"not a term: {head!r}")
    return HeadForm(tag, head, tuple(spine))


# ---------------------------------------------------------------------------
# Normal forms

def _spine_parts(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def _dup_stack_nf(t: Term) -> bool:
    # Splitting operators piled on an application; each must pair one name
    # from each side of the application, otherwise a split can still be
    # pushed inward (possibly after re-association of the stack).
    pairs: list[tuple[str, str]] = []
    while isinstance(t, Dup):
        pairs.append((t.left, t.right))
        t = t.body
    if not isinstance(t, App):
        return False
    if not _is_mnf(t):
        return False
    left_fv = free_vars(t.fun)
    right_fv = free_vars(t.arg)
    for a, b in pairs:
        straddles = (a in left_fv and b in right_fv) or (b in left_fv and a in right_fv)
        if not straddles:
            return False
    return True


def _is_mnf(t: Term) -> bool:
    match t:
        case Var(_):
            return True
        case Abs(binder, Era(erased, body)) if erased == binder:
            return _is_mnf(body)
        case Abs(_, body):
            return not isinstance(body, Era) and _is_mnf(body)
        case Era(_, _):
            return False
        case Dup(_, _, _, _):
            return _dup_stack_nf(t)
        case App(_, _):
            head, args = _spine_parts(t)
            if not all(_is_mnf(a) for a in args):
                return False
            if isinstance(head, Var):
                return True
            if isinstance(head, Dup):
                return _dup_stack_nf(head)
            return False
    raise TypeError(f"not a term: {t!r}")


def _is_enf(t: Term) -> bool:
    return isinstance(t, Era) and (_is_mnf(t.body) or _is_enf(t.body))


def is_normal_form(t: Term) -> bool:
    return _is_mnf(t) or _is_enf(t)


def size(t: Term) -> int:
    """Node count; agrees with the termination measure on substitution-free terms."""
    match t:
        case Var(_):
            return 1
        case App(fun, arg):
            return size(fun) + size(arg) + 1
        case Abs(_, body) | Era(_, body) | Dup(_, _, _, body):
            return size(body) + 1
    raise TypeError(f"not a term: {t!r}")
