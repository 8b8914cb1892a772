"""AST, typing, substitution, the term preorder and fixpoint unfolding."""

from pcfbounds.syntax.parser import ParseError, parse, parse_type, render
from pcfbounds.syntax.preorder import is_bottom, is_top, term_preorder_leq
from pcfbounds.syntax.terms import (
    ERRCONV,
    ERRDIV,
    NAT,
    Abs,
    App,
    Arrow,
    Coin,
    Context,
    Errconv,
    Errdiv,
    Fix,
    If,
    Let,
    Nat,
    Num,
    Pred,
    Succ,
    Term,
    Type,
    Var,
    alpha_eq,
    alpha_key,
    arrow,
    contains_errconv,
    fresh_name,
    ground_context,
    is_error,
    is_fix_free,
    is_ground,
    make_context,
    size,
    substitute,
)
from pcfbounds.syntax.typecheck import TypeCheckError, typecheck
from pcfbounds.syntax.unfold import LOWER, UPPER, Polarity, err_at_type, unfold, wrap_observe
