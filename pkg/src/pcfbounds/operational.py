"""Probabilistic weak-head reduction on closed ground terms.

Three views of the same Markov chain:

* :func:`step` -- one reduction step by term rewriting, with probabilities;
* :func:`exact_outcomes` -- breadth-first exhaustive exploration with exact
  rational path probabilities, merging alpha-equivalent states per depth;
* :func:`sample` / :func:`estimate` -- seeded Monte Carlo on an environment
  machine that counts exactly the same steps as :func:`step`.
"""

from __future__ import annotations

import hashlib
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from pcfbounds.deepstack import deep_stack
from pcfbounds.groundsem import ERR, SubDist
from pcfbounds.syntax.terms import (
    ERRCONV,
    ERRDIV,
    Abs,
    App,
    Coin,
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
    Var,
    AlphaKeys,
    substitute,
)
from pcfbounds.syntax.typecheck import TypeCheckError, typecheck


class NotGround(ValueError):
    """The term is open or not of type nat."""


def _check_closed_nat(t: Term) -> None:
    if t.free_vars:
        raise NotGround(f"free variables {sorted(t.free_vars)}")
    try:
        ty = typecheck({}, t)
    except TypeCheckError as exc:
        raise NotGround(str(exc)) from exc
    if not isinstance(ty, Nat):
        raise NotGround(f"term has type {ty}, expected nat")


def is_whnormal(t: Term) -> bool:
    return isinstance(t, (Num, Errdiv, Errconv))


# --- one step ----------------------------------------------------------------------

StepOutcome = list[tuple[Fraction, Term]]
_ONE = Fraction(1)


@deep_stack
def step(t: Term) -> StepOutcome:
    """All one-step successors of a closed ``nat`` term with their
    probabilities; empty for weak-head normal forms."""
    _check_closed_nat(t)
    return _step(t)


def _step(t: Term) -> StepOutcome:
    # descend through evaluation contexts to the head redex
    path: list[Term] = []
    while True:
        match t:
            case Succ(a) | Pred(a) if not is_whnormal(a):
                path.append(t)
                t = a
            case If(c, _, _) if not is_whnormal(c):
                path.append(t)
                t = c
            case Let(_, m, _) if not is_whnormal(m):
                path.append(t)
                t = m
            case App(f, _) if not isinstance(f, Abs):
                path.append(t)
                t = f
            case _:
                break
    results = _contract(t)
    for ctx in reversed(path):
        results = [(p, _plug(ctx, s)) for p, s in results]
    return results


def _plug(ctx: Term, s: Term) -> Term:
    match ctx:
        case Succ():
            return Succ(s)
        case Pred():
            return Pred(s)
        case If(_, p, q):
            return If(s, p, q)
        case Let(x, _, body):
            return Let(x, s, body)
        case App(_, a):
            return App(s, a)
    raise AssertionError(ctx)


def _contract(t: Term) -> StepOutcome:
    match t:
        case Num() | Errdiv() | Errconv():
            return []
        case Coin(r):
            if r == 1:
                return [(_ONE, Num(0))]
            if r == 0:
                return [(_ONE, Num(1))]
            return [(r, Num(0)), (1 - r, Num(1))]
        case Succ(Num(n)):
            return [(_ONE, Num(n + 1))]
        case Pred(Num(n)):
            return [(_ONE, Num(n - 1 if n else 0))]
        case Succ(e) | Pred(e) | If(e, _, _) | Let(_, e, _) if isinstance(e, (Errdiv, Errconv)):
            return [(_ONE, e)]
        case If(Num(n), p, q):
            return [(_ONE, p if n == 0 else q)]
        case Let(x, Num() as v, body):
            return [(_ONE, substitute(body, x, v))]
        case App(Abs(x, _, body), a):
            return [(_ONE, substitute(body, x, a))]
        case Fix(m):
            return [(_ONE, App(m, t))]
        case Var(x):
            raise NotGround(f"free variable {x!r} in head position")
    raise NotGround(f"no reduction rule for {t}")


# --- exhaustive exploration -----------------------------------------------------------


@dataclass
class OutcomeDistribution:
    """Exact mass reaching each normal form, plus the unresolved remainder."""

    outcomes: dict[Term, Fraction] = field(default_factory=dict)
    residual: Fraction = Fraction(0)
    depth: int = 0

    def prob(self, t: Term) -> Fraction:
        return self.outcomes.get(t, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.outcomes.values(), Fraction(0)) + self.residual


@deep_stack
def exact_outcomes(t: Term, max_steps: int = 10_000, min_mass: Fraction = Fraction(0)) -> OutcomeDistribution:
    """Breadth-first reduction tree of ``t``.

    A branch stops at a normal form, after ``max_steps`` steps, or when its
    (merged) mass falls below ``min_mass``; stopped mass goes to ``residual``.
    Each reported probability is a lower bound of the true one and the true
    one is at most that plus ``residual``.
    """
    _check_closed_nat(t)
    min_mass = Fraction(min_mass)
    dist = OutcomeDistribution()
    keys = AlphaKeys()
    frontier: dict[int, tuple[Term, Fraction]] = {keys.key(t): (t, _ONE)}
    d = 0
    while frontier:
        nxt: dict[int, tuple[Term, Fraction]] = {}
        for term, p in frontier.values():
            if is_whnormal(term):
                dist.outcomes[term] = dist.outcomes.get(term, Fraction(0)) + p
            elif d >= max_steps:
                dist.residual += p
            else:
                for q, s in _step(term):
                    key = keys.key(s)
                    prev = nxt.get(key)
                    nxt[key] = (s, p * q) if prev is None else (prev[0], prev[1] + p * q)
        if min_mass:
            kept = {}
            for key, (s, p) in nxt.items():
                if p < min_mass:
                    dist.residual += p
                else:
                    kept[key] = (s, p)
            nxt = kept
        frontier = nxt
        d += 1
    dist.depth = d - 1
    return dist


def err_probability(t: Term, max_steps: int = 10_000, min_mass: Fraction = Fraction(0)) -> tuple[Fraction, Fraction]:
    """``(lower, upper)`` bounds on the probability that ``t`` raises ``err+``."""
    dist = exact_outcomes(t, max_steps, min_mass)
    lo = dist.prob(ERRCONV)
    return lo, lo + dist.residual


# --- sampling ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Numeral:
    n: int


@dataclass(frozen=True)
class Err:
    which: str  # "err+" or "err-"


@dataclass(frozen=True)
class Timeout:
    pass


Outcome = Numeral | Err | Timeout
TIMEOUT = Timeout()
ERR_CONV = Err("err+")
ERR_DIV = Err("err-")


def outcome_label(o: Outcome) -> str:
    match o:
        case Numeral(n):
            return str(n)
        case Err(which):
            return which
    return "timeout"


def trial_seed(seed: int, i: int) -> int:
    """64-bit seed of trial ``i``, a pure function of ``(seed, i)``."""
    digest = hashlib.blake2b(f"{seed}:{i}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def sample(t: Term, seed: int, max_steps: int = 10_000) -> Outcome:
    """One trajectory of ``t`` driven by ``random.Random(seed)``."""
    _check_closed_nat(t)
    return _run(t, random.Random(seed), max_steps)


_NO_ENV: dict = {}


def _run(t: Term, rng: random.Random, max_steps: int) -> Outcome:
    # Environment machine.  Closures are (term, env); frames are tuples.
    # Only transitions that are reduction steps of the term semantics are
    # counted: beta, fix, coin, contractions of succ/pred/if/let on a numeral,
    # and one step per frame an error propagates through.
    term, env = t, _NO_ENV
    stack: list[tuple] = []
    steps = 0
    while True:
        match term:
            case Var(x):
                term, env = env[x]
            case Num(n):
                if not stack:
                    return Numeral(n)
                steps += 1
                if steps > max_steps:
                    return TIMEOUT
                fr = stack.pop()
                kind = fr[0]
                if kind == "s":
                    term = Num(n + 1)
                elif kind == "p":
                    term = Num(n - 1 if n else 0)
                elif kind == "if":
                    term, env = (fr[1] if n == 0 else fr[2]), fr[3]
                else:  # let
                    env = {**fr[3], fr[1]: (term, _NO_ENV)}
                    term = fr[2]
            case Errconv() | Errdiv():
                steps += len(stack)
                if steps > max_steps:
                    return TIMEOUT
                return ERR_CONV if isinstance(term, Errconv) else ERR_DIV
            case Coin(r):
                steps += 1
                if steps > max_steps:
                    return TIMEOUT
                heads = rng.randrange(r.denominator) < r.numerator
                term = Num(0) if heads else Num(1)
            case Succ(a):
                stack.append(("s",))
                term = a
            case Pred(a):
                stack.append(("p",))
                term = a
            case If(c, p, q):
                stack.append(("if", p, q, env))
                term = c
            case Let(x, m, body):
                stack.append(("let", x, body, env))
                term = m
            case App(f, a):
                stack.append(("arg", a, env))
                term = f
            case Abs(x, _, body):
                steps += 1
                if steps > max_steps:
                    return TIMEOUT
                _, arg, arg_env = stack.pop()
                env = {**env, x: (arg, arg_env)}
                term = body
            case Fix(m):
                steps += 1
                if steps > max_steps:
                    return TIMEOUT
                stack.append(("arg", term, env))
                term = m
            case _:
                raise NotGround(f"cannot run {term!r}")


@dataclass
class Estimate:
    """Empirical outcome frequencies of ``n`` independent trials."""

    counts: dict[Outcome, int]
    n: int

    def freq(self, o: Outcome) -> float:
        return self.counts.get(o, 0) / self.n

    def stderr(self, o: Outcome) -> float:
        p = self.freq(o)
        return math.sqrt(p * (1 - p) / self.n)

    def table(self) -> list[tuple[str, int, float, float]]:
        """``(label, count, frequency, standard error)`` rows in a stable order."""
        def order(o: Outcome):
            match o:
                case Numeral(n):
                    return (0, n)
                case Err(which):
                    return (1, 0 if which == "err+" else 1)
            return (2, 0)

        return [
            (outcome_label(o), self.counts[o], self.freq(o), self.stderr(o))
            for o in sorted(self.counts, key=order)
        ]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PCFBOUNDS_THREADS", "1")))
    except ValueError:
        return 1


def _run_block(t: Term, seed: int, start: int, stop: int, max_steps: int) -> dict[Outcome, int]:
    counts: dict[Outcome, int] = {}
    for i in range(start, stop):
        o = _run(t, random.Random(trial_seed(seed, i)), max_steps)
        counts[o] = counts.get(o, 0) + 1
    return counts


def estimate(
    t: Term, n_samples: int, seed: int, max_steps: int = 10_000, workers: int | None = None
) -> Estimate:
    """Run ``n_samples`` trials; trial ``i`` is seeded by ``trial_seed(seed, i)``.

    Counts are integers, so the result does not depend on ``workers``.
    """
    _check_closed_nat(t)
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    workers = workers or default_workers()
    if workers == 1 or n_samples < 2 * workers:
        return Estimate(_run_block(t, seed, 0, n_samples, max_steps), n_samples)
    bounds = [n_samples * j // workers for j in range(workers + 1)]
    counts: dict[Outcome, int] = {}
    with ProcessPoolExecutor(workers) as pool:
        futures = [
            pool.submit(_run_block, t, seed, bounds[j], bounds[j + 1], max_steps)
            for j in range(workers)
        ]
        for fut in futures:
            for o, c in fut.result().items():
                counts[o] = counts.get(o, 0) + c
    return Estimate(counts, n_samples)


# --- sub-distributions as terms -------------------------------------------------------


def sampler_term(u: SubDist) -> Term:
    """Closed ``nat`` term that, each time it is evaluated, yields ``n`` with
    probability ``u_n``, ``err+`` with probability ``u_err`` and ``err-``
    (no numeral) with the remaining mass."""
    items: list[tuple[Term, Fraction]] = [(Num(n), m) for n, m in u.entries]
    if u.err:
        items.append((ERRCONV, u.err))
    residual = 1 - u.total()
    if residual:
        items.append((ERRDIV, residual))
    if not items:
        return ERRDIV
    out, _ = items[-1]
    remaining = items[-1][1]
    for value, m in reversed(items[:-1]):
        remaining += m
        out = If(Coin(m / remaining), value, out)
    return out


def substitute_samplers(t: Term, dists: Mapping[str, SubDist]) -> Term:
    """Replace each free variable of ``t`` by the sampler term of its
    sub-distribution (call-by-name: every use draws afresh)."""
    for x in sorted(t.free_vars):
        t = substitute(t, x, sampler_term(dists[x]))
    return t
