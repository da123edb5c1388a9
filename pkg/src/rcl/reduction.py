"""Operational semantics: rewrite rules, redex enumeration modulo structural
equivalence, strategies, reduction-graph exploration and SN classification.

Rules fall into four groups: the beta step (which calls the substitution
engine), the gamma group pushing duplications inward, the omega group pulling
erasures outward, and the two interaction rules.  Reduction is closed under
structural equivalence, so redexes are enumerated over the whole equivalence
class of a term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .subst import substitute
from .terms import (
    Abs,
    App,
    Dup,
    Era,
    EquivStep,
    Path,
    Term,
    TermError,
    Var,
    all_names,
    alpha_key,
    apply_equiv_step,
    barendregt_violations,
    canonical_key,
    check_linear,
    equiv_canonical,
    iter_equiv_class_steps,
    free_vars,
    is_normal_form,
    positions,
    pos_str,
    rename_free,
    replace_at,
    subterm_at,
    DEFAULT_CLASS_CAP,
)

RULES = ("beta", "gamma1", "gamma2", "gamma3",
         "omega1", "omega2", "omega3", "gamma-omega1", "gamma-omega2")

_RULE_INDEX = {r: i for i, r in enumerate(RULES)}

DEFAULT_BUDGET_NODES = 50_000
DEFAULT_BUDGET_STEPS = 250_000


class ReductionError(TermError):
    pass


@dataclass(frozen=True)
class ReductionStep:
    """One rule application, after an optional structural pre-adjustment."""

    rule: str
    eps: tuple[EquivStep, ...]
    pos: Path
    before: Term
    after: Term

    def describe(self) -> str:
        eps = "".join(f"{ax}@{pos_str(p)};" for ax, p in self.eps)
        prefix = f"[{eps}] " if eps else ""
        return f"{prefix}{self.rule} @ {pos_str(self.pos)}"


def _match_rule(sub: Term, used: set[str]) -> Iterator[tuple[str, Term]]:
    """Rule applications available at the root of sub."""
    match sub:
        case App(Abs(x, m), n):
            # the enclosing term is well-formed, so the redex parts are too
            yield "beta", substitute(m, n, x, avoid=frozenset(used), _checked=True)
        case _:
            pass
    match sub:
        case Dup(x, a, b, Abs(y, m)):
            yield "gamma1", Abs(y, Dup(x, a, b, m))
        case Dup(x, a, b, App(m, n)):
            arg_fv = free_vars(n)
            fun_fv = free_vars(m)
            if a not in arg_fv and b not in arg_fv:
                yield "gamma2", App(Dup(x, a, b, m), n)
            if a not in fun_fv and b not in fun_fv:
                yield "gamma3", App(m, Dup(x, a, b, n))
        case Abs(x, Era(y, m)) if y != x:
            yield "omega1", Era(y, Abs(x, m))
        case _:
            pass
    match sub:
        case App(Era(x, m), n):
            yield "omega2", Era(x, App(m, n))
        case _:
            pass
    match sub:
        case App(m, Era(x, n)):
            yield "omega3", Era(x, App(m, n))
        case _:
            pass
    match sub:
        case Dup(x, a, b, Era(y, m)):
            if y == a:
                # the right split is simply renamed to the source
                yield "gamma-omega2", rename_free(m, b, x)
            elif y != b:
                yield "gamma-omega1", Era(y, Dup(x, a, b, m))
        case _:
            pass


def contract_at(u: Term, pos: Path, rule: str) -> Term:
    """The whole term after contracting the redex of the given rule at pos."""
    sub = subterm_at(u, pos)
    used = all_names(u)
    for r, result in _match_rule(sub, used):
        if r == rule:
            return replace_at(u, pos, result)
    raise ReductionError(f"rule {rule} does not apply at {pos_str(pos)}")


def enumerate_redexes(t: Term, cap: int = DEFAULT_CLASS_CAP,
                      limit: Optional[int] = None) -> list[ReductionStep]:
    """All steps available from any member of the structural-equivalence
    class of t, deduplicated by (rule, equivalence class of the result).

    With `limit`, stops as soon as that many steps are found (no
    deduplication); useful for existence checks.
    """
    if barendregt_violations(t):
        raise ReductionError(f"term violates the naming convention: {barendregt_violations(t)}")
    steps: list[ReductionStep] = []
    seen: set[tuple[str, str]] = set()
    used = all_names(t)  # the axioms permute operators, never names
    for u, eps in iter_equiv_class_steps(t, cap):
        for pos, sub in positions(u):
            for rule, result in _match_rule(sub, used):
                after = replace_at(u, pos, result)
                if limit is not None:
                    steps.append(ReductionStep(rule, eps, pos, t, after))
                    if len(steps) >= limit:
                        return steps
                    continue
                key = (rule, canonical_key(after, cap))
                if key in seen:
                    continue
                seen.add(key)
                steps.append(ReductionStep(rule, eps, pos, t, after))
    return steps


def reduce_step(t: Term, step: ReductionStep) -> Term:
    """Apply a previously enumerated step; stale steps are rejected."""
    if step.before != t:
        raise ReductionError("stale step: it was enumerated from a different term")
    u = t
    for eps in step.eps:
        u = apply_equiv_step(u, eps)
    after = contract_at(u, step.pos, step.rule)
    if after != step.after:
        raise ReductionError("stale step: contraction no longer matches")
    rep = check_linear(after)
    if not rep.ok:
        raise ReductionError(f"step produced an ill-formed term: {rep.violations[0]}")
    if free_vars(after) != free_vars(t):
        raise ReductionError("step did not preserve free variables")
    return after


def _step_sort_key(s: ReductionStep):
    return (s.pos, _RULE_INDEX[s.rule], len(s.eps))


@dataclass(frozen=True)
class NormalizeResult:
    status: str  # 'nf' | 'exceeded'
    term: Optional[Term]
    trace: tuple[ReductionStep, ...]


def normalize(t: Term, strategy: str = "leftmost-outermost",
              max_steps: int = 1000, cap: int = DEFAULT_CLASS_CAP) -> NormalizeResult:
    if strategy in ("leftmost-outermost", "lo"):
        return _normalize_lo(t, max_steps, cap)
    if strategy in ("exhaustive-first", "exhaustive"):
        return _normalize_bfs(t, max_steps, cap)
    raise ValueError(f"unknown strategy {strategy!r}")


def _normalize_lo(t: Term, max_steps: int, cap: int) -> NormalizeResult:
    trace: list[ReductionStep] = []
    current = t
    for _ in range(max_steps):
        steps = enumerate_redexes(current, cap)
        if not steps:
            return NormalizeResult("nf", current, tuple(trace))
        step = min(steps, key=_step_sort_key)
        current = reduce_step(current, step)
        trace.append(step)
    if not enumerate_redexes(current, cap):
        return NormalizeResult("nf", current, tuple(trace))
    return NormalizeResult("exceeded", None, tuple(trace))


def _normalize_bfs(t: Term, max_steps: int, cap: int) -> NormalizeResult:
    start_key = canonical_key(t, cap)
    queue: list[tuple[Term, tuple[ReductionStep, ...]]] = [(t, ())]
    seen = {start_key}
    applied = 0
    while queue:
        current, trace = queue.pop(0)
        steps = enumerate_redexes(current, cap)
        if not steps:
            return NormalizeResult("nf", current, trace)
        for step in sorted(steps, key=lambda s: (_RULE_INDEX[s.rule], s.pos, len(s.eps))):
            if applied >= max_steps:
                return NormalizeResult("exceeded", None, trace)
            applied += 1
            after = reduce_step(current, step)
            key = canonical_key(after, cap)
            if key not in seen:
                seen.add(key)
                queue.append((after, trace + (step,)))
    return NormalizeResult("exceeded", None, ())


# ---------------------------------------------------------------------------
# Reduction graphs

@dataclass
class ReductionGraph:
    root: str
    nodes: dict[str, Term]  # canonical key -> canonical representative
    edges: dict[str, list[tuple[ReductionStep, str]]]
    complete: bool

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(es) for es in self.edges.values())

    def to_json(self) -> dict:
        from .syntax import term_str

        return {
            "root": self.root,
            "complete": self.complete,
            "nodes": {k: term_str(v) for k, v in self.nodes.items()},
            "edges": {
                k: [
                    {
                        "rule": step.rule,
                        "position": pos_str(step.pos),
                        "equiv_adjustments": [
                            {"axiom": ax, "position": pos_str(p)} for ax, p in step.eps
                        ],
                        "target": dst,
                    }
                    for step, dst in es
                ]
                for k, es in self.edges.items()
            },
        }


@dataclass(frozen=True)
class SNResult:
    status: str  # 'sn' | 'non-sn' | 'unknown'
    graph: Optional[ReductionGraph]
    cycle: Optional[tuple[Term, ...]]  # path of representatives ending in a repeat
    longest: Optional[int] = None


_expansion_cache: dict[str, tuple[Term, list[tuple[ReductionStep, str, Term]]]] = {}


def _expand_node(key: str, rep: Term, cap: int) -> list[tuple[ReductionStep, str, Term]]:
    """Outgoing steps of a canonical representative, with canonicalised
    targets; representatives recur across graphs, so results are cached."""
    hit = _expansion_cache.get(key)
    if hit is not None:
        return hit[1]
    out = []
    for step in enumerate_redexes(rep, cap):
        after_rep = equiv_canonical(step.after, cap)
        out.append((step, alpha_key(after_rep), after_rep))
    if len(_expansion_cache) > 200_000:
        _expansion_cache.clear()
    _expansion_cache[key] = (rep, out)
    return out


def explore_graph(t: Term, budget_nodes: int = DEFAULT_BUDGET_NODES,
                  budget_steps: int = DEFAULT_BUDGET_STEPS,
                  cap: int = DEFAULT_CLASS_CAP) -> tuple[ReductionGraph, bool]:
    """Explore the quotient graph; second component is False when a budget
    was exhausted before the frontier emptied."""
    root_rep = equiv_canonical(t, cap)
    root = alpha_key(root_rep)
    nodes: dict[str, Term] = {root: root_rep}
    edges: dict[str, list[tuple[ReductionStep, str]]] = {}
    frontier = [root]
    steps_used = 0
    complete = True
    while frontier:
        key = frontier.pop()
        rep = nodes[key]
        out: list[tuple[ReductionStep, str]] = []
        for step, after_key, after_rep in _expand_node(key, rep, cap):
            steps_used += 1
            if steps_used > budget_steps:
                complete = False
                frontier = []
                break
            out.append((step, after_key))
            if after_key not in nodes:
                if len(nodes) >= budget_nodes:
                    complete = False
                    frontier = []
                    break
                nodes[after_key] = after_rep
                frontier.append(after_key)
        edges[key] = out
    for key in nodes:
        edges.setdefault(key, [])
    return ReductionGraph(root, nodes, edges, complete), complete


def _find_cycle(g: ReductionGraph) -> Optional[list[str]]:
    """Path of node keys from the root whose last entry closes a cycle."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {k: 0 for k in g.nodes}
    parent: dict[str, Optional[str]] = {g.root: None}
    stack: list[tuple[str, int]] = [(g.root, 0)]
    color[g.root] = GREY
    while stack:
        node, i = stack[-1]
        succs = g.edges.get(node, [])
        if i < len(succs):
            stack[-1] = (node, i + 1)
            _, nxt = succs[i]
            if color[nxt] == GREY:
                path = [nxt]
                cur: Optional[str] = node
                while cur is not None and cur != nxt:
                    path.append(cur)
                    cur = parent.get(cur)
                path.append(nxt)
                path.reverse()
                return path
            if color[nxt] == WHITE:
                color[nxt] = GREY
                parent[nxt] = node
                stack.append((nxt, 0))
        else:
            color[node] = BLACK
            stack.pop()
    return None


def classify_sn(t: Term, budget_nodes: int = DEFAULT_BUDGET_NODES,
                budget_steps: int = DEFAULT_BUDGET_STEPS,
                cap: int = DEFAULT_CLASS_CAP) -> SNResult:
    """Strong normalisation by exhaustive exploration of the quotient graph."""
    g, complete = explore_graph(t, budget_nodes, budget_steps, cap)
    cycle_keys = _find_cycle(g)
    if cycle_keys is not None:
        return SNResult("non-sn", g, tuple(g.nodes[k] for k in cycle_keys))
    if not complete:
        return SNResult("unknown", g, None)
    for key, rep in g.nodes.items():
        if not g.edges[key] and not is_normal_form(rep):
            raise ReductionError(f"leaf node is not a normal form: {key}")
    return SNResult("sn", g, None, longest=longest_path(g))


def longest_path(g: ReductionGraph) -> int:
    """Exact maximum number of steps from the root in a complete acyclic graph."""
    if not g.complete:
        raise ReductionError("graph is incomplete")
    if _find_cycle(g) is not None:
        raise ReductionError("graph has a cycle")
    memo: dict[str, int] = {}

    order: list[str] = []
    seen: set[str] = set()
    stack: list[tuple[str, bool]] = [(g.root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        for _, nxt in g.edges.get(node, []):
            if nxt not in seen:
                stack.append((nxt, False))
    for node in order:
        memo[node] = max((memo[nxt] + 1 for _, nxt in g.edges.get(node, []) if nxt in memo),
                         default=0)
    return memo[g.root]
