"""Random well-typed terms for tests and experiments.

Everything is driven by an explicit ``random.Random`` so corpora are
reproducible from a seed.  Variable names are drawn from a small pool on
purpose: shadowing and capture then happen often.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from pcfbounds.groundsem import ERR, SubDist
from pcfbounds.syntax.terms import (
    ERRCONV,
    ERRDIV,
    NAT,
    Abs,
    App,
    Arrow,
    Coin,
    Fix,
    If,
    Let,
    Num,
    Pred,
    Succ,
    Term,
    Type,
    Var,
    arrow,
    depth,
    is_fix_free,
)
from pcfbounds.syntax.typecheck import typecheck
from pcfbounds.syntax.unfold import LOWER, UPPER, err_at_type, unfold

NAT_NAT = arrow(NAT, NAT)
TYPES: tuple[Type, ...] = (NAT, NAT_NAT, arrow(NAT_NAT, NAT), arrow(NAT, NAT, NAT))
NAMES = ("a", "b", "c", "f", "g")


def dyadic(rng: random.Random, max_exp: int = 3) -> Fraction:
    den = 2 ** rng.randint(1, max_exp)
    return Fraction(rng.randint(0, den), den)


@dataclass
class GenConfig:
    max_depth: int = 6
    allow_fix: bool = False
    err_weight: float = 1.0
    max_exp: int = 3


class TermGen:
    """Type-directed generator of terms in a typing environment."""

    def __init__(self, rng: random.Random, cfg: GenConfig | None = None):
        self.rng = rng
        self.cfg = cfg or GenConfig()

    def term(self, ty: Type = NAT, env: dict[str, Type] | None = None, depth: int | None = None) -> Term:
        depth = self.cfg.max_depth if depth is None else depth
        return self._gen(ty, dict(env or {}), depth)

    # depth counts AST levels still available, so the result has depth <= it
    def _gen(self, ty: Type, env: dict[str, Type], depth: int) -> Term:
        if isinstance(ty, Arrow):
            return self._gen_arrow(ty, env, depth)
        return self._gen_nat(env, depth)

    def _vars_of(self, ty: Type, env: dict[str, Type]) -> list[str]:
        return [x for x, t in env.items() if t == ty]

    def _leaf(self, env: dict[str, Type]) -> Term:
        rng = self.rng
        choices = ["num", "coin", "err"]
        weights = [3, 3, self.cfg.err_weight]
        nat_vars = self._vars_of(NAT, env)
        if nat_vars:
            choices.append("var")
            weights.append(4)
        match rng.choices(choices, weights)[0]:
            case "num":
                return Num(rng.randint(0, 3))
            case "coin":
                return Coin(dyadic(rng, self.cfg.max_exp))
            case "err":
                return rng.choice((ERRDIV, ERRCONV))
            case _:
                return Var(rng.choice(nat_vars))

    def _gen_arrow(self, ty: Arrow, env: dict[str, Type], depth: int) -> Term:
        rng = self.rng
        fn_vars = self._vars_of(ty, env)
        if fn_vars and (depth <= 1 or rng.random() < 0.3):
            return Var(rng.choice(fn_vars))
        if depth <= 1:
            return err_at_type(ty, rng.choice((LOWER, UPPER)))
        if self.cfg.allow_fix and rng.random() < 0.15 and depth >= 3:
            f = rng.choice(NAMES)
            return Fix(Abs(f, ty, self._gen(ty, {**env, f: ty}, depth - 2)))
        x = rng.choice(NAMES)
        return Abs(x, ty.domain, self._gen(ty.codomain, {**env, x: ty.domain}, depth - 1))

    def _gen_nat(self, env: dict[str, Type], depth: int) -> Term:
        rng = self.rng
        if depth <= 1 or rng.random() < 0.2:
            return self._leaf(env)
        d = depth - 1
        kinds = ["succ", "pred", "if", "let", "app", "app"]
        if self.cfg.allow_fix:
            kinds.append("fixnat")
        match rng.choice(kinds):
            case "succ":
                return Succ(self._gen_nat(env, d))
            case "pred":
                return Pred(self._gen_nat(env, d))
            case "if":
                return If(self._gen_nat(env, d), self._gen_nat(env, d), self._gen_nat(env, d))
            case "let":
                x = rng.choice(NAMES)
                return Let(x, self._gen_nat(env, d), self._gen_nat({**env, x: NAT}, d))
            case "app":
                sigma = rng.choice(TYPES[:2])
                fun = self._gen_arrow(Arrow(sigma, NAT), env, d)
                return App(fun, self._gen(sigma, env, d))
            case _:
                if d < 3:
                    return self._leaf(env)
                return App(self.loop(env, d - 1), self._gen_nat(env, d - 1))

    def loop(self, env: dict[str, Type], depth: int) -> Term:
        """``fix f. \\y. if C then B else f E`` with a single recursive call,
        ``C``, ``B``, ``E`` fix-free.  ``C`` is often a biased coin so that the
        loop terminates with positive probability."""
        rng = self.rng
        f, y = "f", rng.choice(("a", "b", "y"))
        inner = {**{k: v for k, v in env.items() if k != f}, y: NAT}
        flat = TermGen(rng, GenConfig(max_depth=max(1, depth - 2), allow_fix=False, err_weight=0.3))
        cond = Coin(Fraction(rng.randint(1, 4), 4)) if rng.random() < 0.6 else flat.term(NAT, inner)
        base = flat.term(NAT, inner)
        nxt = flat.term(NAT, inner)
        call = App(Var(f), nxt) if rng.random() < 0.5 else Let(y, nxt, App(Var(f), Var(y)))
        body = If(cond, base, call) if rng.random() < 0.5 else If(cond, call, base)
        return Fix(Abs(f, NAT_NAT, Abs(y, NAT, body)))


# --- corpora ----------------------------------------------------------------------


def closed_nat_term(rng: random.Random, max_depth: int = 6) -> Term:
    """Fix-free closed term of type ``nat`` with dyadic coins and AST depth
    at most ``max_depth``; trivial one-node terms are skipped."""
    gen = TermGen(rng, GenConfig(max_depth=max_depth, err_weight=1.5))
    while True:
        t = gen.term()
        if 1 < depth(t) <= max_depth:
            return t


def strict_linear_term(rng: random.Random, x: str = "x", max_depth: int = 6) -> Term:
    """Fix-free term with one free variable ``x`` that every run evaluates
    exactly once, before anything else that could fail.

    Shape: an evaluation context around either ``x`` itself or
    ``let y = x in B`` with ``B`` free to use ``y`` many times.
    """
    gen = TermGen(rng, GenConfig(max_depth=max(2, max_depth - 2)))
    y = rng.choice(("a", "b", "y"))
    core: Term = Var(x) if rng.random() < 0.3 else Let(y, Var(x), gen.term(NAT, {y: NAT}))
    for _ in range(rng.randint(0, 2)):
        match rng.choice(("succ", "pred", "if", "let", "beta")):
            case "succ":
                core = Succ(core)
            case "pred":
                core = Pred(core)
            case "if":
                core = If(core, gen.term(NAT, {}, 3), gen.term(NAT, {}, 3))
            case "let":
                z = rng.choice(("a", "b"))
                core = Let(z, core, gen.term(NAT, {z: NAT}, 3))
            case "beta":
                v = rng.choice(("a", "b"))
                core = App(Abs(v, NAT, core), gen.term(NAT, {}, 2))
    return core


def open_term(rng: random.Random, x: str = "x", max_depth: int = 5) -> Term:
    """Fix-free term in which ``x : nat`` may occur any number of times."""
    while True:
        t = TermGen(rng, GenConfig(max_depth=max_depth)).term(NAT, {x: NAT})
        if x in t.free_vars:
            return t


def _call(arg: Term) -> Term:
    # pass the argument by value: under call by name a thunk like
    # ``if coin then pred y else succ y`` would be re-sampled at every use
    return Let("a", arg, App(Var("f"), Var("a")))


def _template_loop(rng: random.Random) -> Term:
    gen = TermGen(rng, GenConfig(max_depth=3, err_weight=0.2))
    r = Fraction(rng.randint(1, 4), 4)
    y = "y"
    match rng.randrange(5):
        case 0:  # geometric loop with random exit value and step
            body = If(Coin(r), gen.term(NAT, {y: NAT}), _call(gen.term(NAT, {y: NAT})))
        case 1:  # countdown, terminates surely
            body = If(Var(y), gen.term(NAT, {y: NAT}), _call(Pred(Var(y))))
        case 2:  # biased walk towards 0
            step = If(Coin(Fraction(3, 4)), Pred(Var(y)), Succ(Var(y)))
            body = If(Var(y), Num(0), _call(step))
        case 3:  # two nested recursive calls
            body = If(Coin(Fraction(rng.randint(2, 4), 4)), Var(y), _call(App(Var("f"), Var(y))))
        case _:  # recursion whose exit depends on a coin and the argument
            body = If(Coin(r), Var(y), If(Var(y), _call(Succ(Var(y))), gen.term(NAT, {y: NAT})))
    loop = Fix(Abs("f", NAT_NAT, Abs(y, NAT, body)))
    return App(loop, Num(rng.randint(0, 2)))


def fix_term(rng: random.Random) -> Term:
    """Closed ``nat`` term containing at least one ``fix``: either a loop
    template, possibly under a small context, or a random term."""
    while True:
        if rng.random() < 0.6:
            t = _template_loop(rng)
            if rng.random() < 0.4:
                gen = TermGen(rng, GenConfig(max_depth=3))
                z = rng.choice(("a", "z"))
                t = rng.choice((Succ(t), If(gen.term(), t, gen.term()), Let(z, t, gen.term(NAT, {z: NAT}))))
        else:
            t = TermGen(rng, GenConfig(max_depth=6, allow_fix=True)).term()
        if not is_fix_free(t):
            return t


def subdist(rng: random.Random, support=(0, 1, 2), with_err: bool = True, den: int = 16) -> SubDist:
    """Random rational sub-distribution on ``support`` (and ``err``)."""
    keys = list(support) + ([ERR] if with_err else [])
    cuts = sorted(rng.randint(0, den) for _ in keys)
    masses, prev = {}, 0
    for key, c in zip(keys, cuts):
        masses[key] = Fraction(c - prev, den)
        prev = c
    return SubDist.of(masses)


# --- perturbations for the preorder -----------------------------------------------


def _positions(t: Term, env: dict[str, Type], out: list, path: tuple = ()) -> Type:
    """Collect ``(path, subterm, type, env)`` for every subterm; returns the type."""
    ty = typecheck(env, t)
    out.append((path, t, ty, env))
    match t:
        case Abs(x, dom, body):
            _positions(body, {**env, x: dom}, out, path + (2,))
        case Let(x, m, body):
            _positions(m, env, out, path + (1,))
            _positions(body, {**env, x: NAT}, out, path + (2,))
        case _:
            for i, f in enumerate(t.__match_args__):
                child = getattr(t, f)
                if isinstance(child, Term):
                    _positions(child, env, out, path + (i,))
    return ty


def _replace(t: Term, path: tuple, new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    fields = [getattr(t, f) for f in t.__match_args__]
    fields[i] = _replace(fields[i], rest, new)
    return type(t)(*fields)


def perturb(t: Term, rng: random.Random, direction: str, env: dict[str, Type] | None = None) -> Term:
    """A term related to ``t`` in the preorder: below it for
    ``direction="down"``, above it for ``"up"``.

    Moves: replace a subterm by the matching error; unfold a ``fix`` once
    more (``fix P`` becomes ``P (fix P)``, in either direction) or all the
    way (an unfolding of ``t`` itself).
    """
    env = dict(env or {})
    spots: list = []
    _positions(t, env, spots)
    pol = LOWER if direction == "down" else UPPER
    move = rng.random()
    if move < 0.15:
        return unfold(t, rng.randint(0, 3), pol, env)
    fixes = [s for s in spots if isinstance(s[1], Fix)]
    if fixes and move < 0.4:
        path, sub, _, _ = rng.choice(fixes)
        return _replace(t, path, App(sub.body, sub))
    path, _, ty, _ = rng.choice(spots)
    return _replace(t, path, err_at_type(ty, pol))
