"""Decision procedure for the extensional preorder on terms.

The rules are syntax directed: the ground axioms (``err- <= M`` and
``M <= err+`` at ``nat``), congruence for every constructor, and the two
fixpoint rules

    M <= M'    fix M <= N'              M' <= M    N' <= fix M
    ----------------------             ----------------------
        fix M <= M' N'                      M' N' <= fix M

Each fixpoint rule keeps one side and strictly shrinks the other, so the
recursion terminates on the sum of sizes.

The ground axioms are extended to error terms at higher type: a term
``\\x1..xn. err-`` is below, and ``\\x1..xn. err+`` above, every term of its
type.  Without this the lower unfolding of a fixpoint at arrow type could
never be related to the fixpoint itself.
"""

from __future__ import annotations

from pcfbounds.syntax.terms import (
    NAT,
    Abs,
    App,
    Coin,
    Context,
    Errconv,
    Errdiv,
    Fix,
    If,
    Let,
    Num,
    Pred,
    Succ,
    Term,
    Type,
    Var,
    fresh_name,
    substitute,
)
from pcfbounds.syntax.typecheck import TypeCheckError, typecheck


def _error_body(t: Term) -> Term:
    while isinstance(t, Abs):
        t = t.body
    return t


def is_bottom(t: Term) -> bool:
    """``err-`` under zero or more abstractions."""
    return isinstance(_error_body(t), Errdiv)


def is_top(t: Term) -> bool:
    """``err+`` under zero or more abstractions."""
    return isinstance(_error_body(t), Errconv)


def term_preorder_leq(m: Term, n: Term, ctx: Context, ty: Type) -> bool:
    """Whether ``m <= n`` is derivable, both terms being checked at ``ty``."""
    for side, t in (("left", m), ("right", n)):
        found = typecheck(ctx, t)
        if found != ty:
            raise TypeCheckError(f"{side} term has type {found}, expected {ty}", t)
    return _Search().leq(m, n, dict(ctx))


class _Search:
    # Both sides of every query have the same type in ctx; the application
    # rules check that their function parts agree before recursing.

    def __init__(self) -> None:
        self.memo: dict[tuple, bool] = {}

    def leq(self, m: Term, n: Term, ctx: dict) -> bool:
        scope = tuple(sorted((v, ctx[v]) for v in m.free_vars | n.free_vars if v in ctx))
        key = (m, n, scope)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._leq(m, n, ctx)
        return hit

    def _binder(self, x: str, body: Term, y: str, body2: Term, ty: Type, ctx: dict) -> bool:
        if x != y:
            z = fresh_name(x, body.free_vars | body2.free_vars)
            body, body2 = substitute(body, x, Var(z)), substitute(body2, y, Var(z))
            x = z
        return self.leq(body, body2, {**ctx, x: ty})

    def _same_type(self, a: Term, b: Term, ctx: dict) -> bool:
        return typecheck(ctx, a) == typecheck(ctx, b)

    def _leq(self, m: Term, n: Term, ctx: dict) -> bool:
        if m is n or is_bottom(m) or is_top(n):
            return True
        match m, n:
            case Var(x), Var(y):
                return x == y
            case Num(a), Num(b):
                return a == b
            case Coin(r), Coin(s):
                return r == s
            case (Succ(a), Succ(b)) | (Pred(a), Pred(b)):
                return self.leq(a, b, ctx)
            case If(c, p, q), If(c2, p2, q2):
                return self.leq(c, c2, ctx) and self.leq(p, p2, ctx) and self.leq(q, q2, ctx)
            case Let(x, a, body), Let(y, a2, body2):
                return self.leq(a, a2, ctx) and self._binder(x, body, y, body2, NAT, ctx)
            case App(f, a), App(f2, a2):
                return (
                    self._same_type(f, f2, ctx)
                    and self.leq(f, f2, ctx)
                    and self.leq(a, a2, ctx)
                )
            case Abs(x, ty, body), Abs(y, ty2, body2):
                return ty == ty2 and self._binder(x, body, y, body2, ty, ctx)
            case Fix(a), Fix(b):
                return self.leq(a, b, ctx)
            case Fix(a), App(f2, a2):
                return self._same_type(a, f2, ctx) and self.leq(a, f2, ctx) and self.leq(m, a2, ctx)
            case App(f, a), Fix(b):
                return self._same_type(f, b, ctx) and self.leq(f, b, ctx) and self.leq(a, n, ctx)
        return False
