"""Workbench for a lambda calculus with explicit erasure and duplication."""

from .terms import (
    Abs,
    App,
    Dup,
    Era,
    HeadForm,
    LinearityReport,
    Term,
    Var,
    alpha_eq,
    check_linear,
    classify_head_form,
    equiv_canonical,
    equiv_class,
    free_var_list,
    is_normal_form,
)
from .bridge import PlainTerm, parse_plain, plain_str, to_plain, to_resource
from .subst import (
    STerm,
    Sub,
    eval_subst,
    measure,
    mul_multiset,
    step_subst,
    substitute,
    substitute_many,
)
from .syntax import ParseError, parse_sterm, parse_term, term_str
from .reduction import (
    ReductionGraph,
    ReductionStep,
    classify_sn,
    enumerate_redexes,
    longest_path,
    normalize,
    reduce_step,
)
from .types import Arrow, Atom, Basis, Inter, Strict, TOP, basis_meet, type_eq
from .deriv import Derivation, check_derivation, derivation_from_json, derivation_to_json, nf_type
from .transport import certify_sn, expand_step, subst_lemma_apply, transport_forward

__all__ = [name for name in dir() if not name.startswith("_")]
