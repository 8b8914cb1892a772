"""Error terms at every type, fixpoint unfolding, and the observation wrapper."""

from __future__ import annotations

import enum

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
    Num,
    Pred,
    Succ,
    Term,
    Type,
    Var,
    arity,
    fresh_name,
)
from pcfbounds.syntax.typecheck import TypeCheckError


class Polarity(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"

    def seed(self) -> Term:
        return ERRDIV if self is Polarity.LOWER else ERRCONV


LOWER, UPPER = Polarity.LOWER, Polarity.UPPER


def err_at_type(ty: Type, polarity: Polarity) -> Term:
    """``\\x1:s1. ... \\xn:sn. E`` for ``ty = s1 -> ... -> sn -> nat``."""
    args = arity(ty)
    t = polarity.seed()
    for i in range(len(args), 0, -1):
        t = Abs(f"x{i}", args[i - 1], t)
    return t


def unfold(t: Term, k: int, polarity: Polarity, ctx: Context | None = None) -> Term:
    """Replace, bottom-up, every ``fix P : s`` by ``P' (P' (... (P' E)))``.

    ``P'`` is the already unfolded body, applied ``k`` times, and ``E`` is
    ``err_at_type(s, polarity)``.  The result is fix-free.
    """
    if k < 0:
        raise ValueError("k must be a natural number")
    if ctx is None:
        ctx = {x: NAT for x in t.free_vars}
    return _unfold(t, k, polarity, dict(ctx))[0]


def _unfold(t: Term, k: int, pol: Polarity, ctx: dict) -> tuple[Term, Type]:
    match t:
        case Var(x):
            if x not in ctx:
                raise TypeCheckError(f"unbound variable {x!r}", t)
            return t, ctx[x]
        case Num() | Coin() | Errdiv() | Errconv():
            return t, NAT
        case Succ(a):
            return Succ(_unfold(a, k, pol, ctx)[0]), NAT
        case Pred(a):
            return Pred(_unfold(a, k, pol, ctx)[0]), NAT
        case If(c, p, q):
            return If(*(_unfold(s, k, pol, ctx)[0] for s in (c, p, q))), NAT
        case Let(x, m, body):
            m2 = _unfold(m, k, pol, ctx)[0]
            return Let(x, m2, _unfold(body, k, pol, {**ctx, x: NAT})[0]), NAT
        case Abs(x, ty, body):
            body2, bty = _unfold(body, k, pol, {**ctx, x: ty})
            return Abs(x, ty, body2), Arrow(ty, bty)
        case App(f, a):
            f2, fty = _unfold(f, k, pol, ctx)
            if not isinstance(fty, Arrow):
                raise TypeCheckError(f"applying a term of type {fty}", t)
            return App(f2, _unfold(a, k, pol, ctx)[0]), fty.codomain
        case Fix(body):
            body2, bty = _unfold(body, k, pol, ctx)
            if not isinstance(bty, Arrow):
                raise TypeCheckError(f"fix expects a function, found {bty}", t)
            out = err_at_type(bty.domain, pol)
            for _ in range(k):
                out = App(body2, out)
            return out, bty.domain
    raise AssertionError(f"unexpected node {t!r}")


def wrap_observe(t: Term) -> Term:
    """``let z = t in err+``: raises ``err+`` exactly when ``t`` reaches a numeral."""
    z = "z" if "z" not in t.free_vars else fresh_name("z", t.free_vars)
    return Let(z, t, ERRCONV)
