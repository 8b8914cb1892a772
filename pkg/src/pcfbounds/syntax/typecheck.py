"""Simple typing for the PCF dialect.

Conditionals and ``let`` are restricted to ground type: condition, branches,
bound term and body must all be ``nat``.
"""

from __future__ import annotations

from pcfbounds.syntax.terms import (
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
)


class TypeCheckError(TypeError):
    """No typing rule applies.

    ``term`` is the offending subterm.  ``variable`` is set when the failure
    is a variable of type ``nat`` being used where a function was expected,
    which the CLI reports as a non-ground free variable.
    """

    def __init__(self, message: str, term: Term | None = None, variable: str | None = None):
        self.term = term
        self.variable = variable
        if term is not None:
            message = f"{message}\n  in: {term}"
        super().__init__(message)


def typecheck(ctx: Context, t: Term) -> Type:
    """Return the type of ``t`` in ``ctx`` or raise :class:`TypeCheckError`."""
    return _Checker().check(dict(ctx), t)


class _Checker:
    # Results are memoized on the node and the types of its free variables,
    # so terms sharing subterms in memory are checked in linear time.

    def __init__(self) -> None:
        self.memo: dict[tuple, Type] = {}

    def check(self, ctx: dict, t: Term) -> Type:
        key = (id(t), frozenset((x, ctx.get(x)) for x in t.free_vars))
        ty = self.memo.get(key)
        if ty is None:
            ty = self.memo[key] = self._check(ctx, t)
        return ty

    def _expect_nat(self, ctx: dict, t: Term, what: str) -> None:
        ty = self.check(ctx, t)
        if not isinstance(ty, Nat):
            raise TypeCheckError(f"{what} must have type nat, found {ty}", t)

    def _check(self, ctx: dict, t: Term) -> Type:
        _check, _expect_nat = self.check, self._expect_nat
        match t:
            case Var(x):
                if x not in ctx:
                    raise TypeCheckError(f"unbound variable {x!r}", t)
                return ctx[x]
            case Num() | Coin() | Errdiv() | Errconv():
                return NAT
            case Succ(a):
                _expect_nat(ctx, a, "argument of succ")
                return NAT
            case Pred(a):
                _expect_nat(ctx, a, "argument of pred")
                return NAT
            case If(c, p, q):
                _expect_nat(ctx, c, "condition of if")
                _expect_nat(ctx, p, "then-branch of if")
                _expect_nat(ctx, q, "else-branch of if")
                return NAT
            case Let(x, m, body):
                _expect_nat(ctx, m, "bound term of let")
                _expect_nat({**ctx, x: NAT}, body, "body of let")
                return NAT
            case Abs(x, ty, body):
                return Arrow(ty, _check({**ctx, x: ty}, body))
            case App(f, a):
                fty = _check(ctx, f)
                if not isinstance(fty, Arrow):
                    var = f.name if isinstance(f, Var) else None
                    raise TypeCheckError(f"applying a term of type {fty}", t, var)
                aty = _check(ctx, a)
                if aty != fty.domain:
                    var = a.name if isinstance(a, Var) and isinstance(aty, Nat) else None
                    raise TypeCheckError(
                        f"argument has type {aty} but the function expects {fty.domain}", t, var
                    )
                return fty.codomain
            case Fix(b):
                bty = _check(ctx, b)
                if not isinstance(bty, Arrow) or bty.domain != bty.codomain:
                    var = b.name if isinstance(b, Var) else None
                    raise TypeCheckError(f"fix expects a term of type s -> s, found {bty}", t, var)
                return bty.domain
        raise TypeCheckError(f"not a term: {t!r}")
