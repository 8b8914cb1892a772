"""Certified intervals for the probability that a program raises ``err+``.

For a term ``M`` with free ground variables drawn from sub-distributions,
the pipeline wraps ``M`` so that convergence becomes ``err+``, unfolds every
fixpoint ``k`` times from below (``err-`` seed) and from above (``err+``
seed), runs the Krivine machine on both unfoldings, and evaluates the two
polynomials at the J-restricted valuations.  The true probability lies in
between.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Literal, Mapping

from pcfbounds.deepstack import deep_stack
from pcfbounds.groundsem import SubDist, idl, idu
from pcfbounds.krivine import kreval_term
from pcfbounds.operational import ERR_CONV, TIMEOUT, estimate, substitute_samplers
from pcfbounds.poly import Polynomial, evaluate, tree_to_poly
from pcfbounds.syntax.terms import Context, Nat, Term, ground_context, is_ground
from pcfbounds.syntax.typecheck import TypeCheckError, typecheck
from pcfbounds.syntax.unfold import LOWER, UPPER, Polarity, unfold, wrap_observe


class MonotonicityViolation(AssertionError):
    """A refinement step made the interval wider; this would be a bug."""


@dataclass
class BoundsQuery:
    """What to bound, and with what budget.

    ``ctx`` defaults to the free variables of ``term`` at ``nat``.  With
    ``J="auto"`` the index set is the union of the supports of ``dists``.
    ``raw`` skips the observation wrapper and bounds the probability that
    ``term`` itself raises ``err+``.
    """

    term: Term
    dists: Mapping[str, SubDist] = field(default_factory=dict)
    k: int = 4
    J: Iterable[int] | Literal["auto"] = "auto"
    epsilon: Fraction | None = None
    k_max: int = 64
    raw: bool = False
    ctx: Context | None = None

    def __post_init__(self) -> None:
        if self.ctx is None:
            self.ctx = ground_context(self.term.free_vars)
        if not is_ground(self.ctx):
            raise TypeCheckError("bounds need every free variable at type nat")
        ty = typecheck(self.ctx, self.term)
        if not isinstance(ty, Nat):
            raise TypeCheckError(f"term has type {ty}, expected nat", self.term)
        missing = sorted(set(self.ctx) - set(self.dists))
        if missing:
            raise ValueError(f"no distribution given for {', '.join(missing)}")
        if self.J == "auto":
            support: frozenset[int] = frozenset()
            for x in self.ctx:
                support |= self.dists[x].support()
            self.J = support
        else:
            self.J = frozenset(self.J)
        if self.epsilon is not None:
            self.epsilon = Fraction(self.epsilon)
        if self.k < 0 or self.k_max < 0:
            raise ValueError("k and k_max must be natural numbers")

    @property
    def observed(self) -> Term:
        return self.term if self.raw else wrap_observe(self.term)

    def sorted_J(self) -> list[int]:
        return sorted(self.J)


def _ctx_items(ctx: Context) -> tuple:
    return tuple(sorted(ctx.items()))


@lru_cache(maxsize=512)
def _unfolded(term: Term, ctx_items: tuple, k: int, pol: Polarity) -> Term:
    return unfold(term, k, pol, dict(ctx_items))


@lru_cache(maxsize=512)
def stage_polynomial(term: Term, ctx_items: tuple, k: int, pol: Polarity, J: frozenset[int]) -> Polynomial:
    """Polynomial of the ``k``-th unfolding of ``term`` at polarity ``pol``."""
    m = _unfolded(term, ctx_items, k, pol)
    return tree_to_poly(kreval_term(m, dict(ctx_items), J))


def polynomials_at_k(q: BoundsQuery, k: int) -> tuple[Polynomial, Polynomial]:
    items = _ctx_items(q.ctx)
    return (
        stage_polynomial(q.observed, items, k, LOWER, q.J),
        stage_polynomial(q.observed, items, k, UPPER, q.J),
    )


@deep_stack
def bound_at_k(q: BoundsQuery, k: int | None = None) -> tuple[Fraction, Fraction]:
    """``(lower, upper)`` at unfolding depth ``k`` (default ``q.k``)."""
    k = q.k if k is None else k
    p_lo, p_hi = polynomials_at_k(q, k)
    lo_val = {x: idl(q.J, q.dists[x]) for x in q.ctx}
    hi_val = {x: idu(q.J, q.dists[x]) for x in q.ctx}
    lower, upper = evaluate(p_lo, lo_val), evaluate(p_hi, hi_val)
    if lower > upper:
        raise MonotonicityViolation(f"lower {lower} exceeds upper {upper} at k={k}")
    return lower, upper


def k_schedule(k_max: int) -> list[int]:
    """1, 2, 4, ... up to ``k_max``; just ``[0]`` when ``k_max`` is 0."""
    if k_max == 0:
        return [0]
    ks, k = [], 1
    while k <= k_max:
        ks.append(k)
        k *= 2
    return ks


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


REPORT_SCHEMA = {
    "type": "object",
    "required": ["lower", "upper", "lower_float", "upper_float", "k", "J", "converged", "trace", "wall_ms"],
    "additionalProperties": False,
    "properties": {
        "lower": {"type": "string", "pattern": r"^[0-9]+/[1-9][0-9]*$"},
        "upper": {"type": "string", "pattern": r"^[0-9]+/[1-9][0-9]*$"},
        "lower_float": {"type": "number", "minimum": 0, "maximum": 1},
        "upper_float": {"type": "number", "minimum": 0, "maximum": 1},
        "k": {"type": "integer", "minimum": 0},
        "J": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "converged": {"type": "boolean"},
        "trace": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k", "lower", "upper"],
                "additionalProperties": False,
                "properties": {
                    "k": {"type": "integer", "minimum": 0},
                    "lower": {"type": "string", "pattern": r"^[0-9]+/[1-9][0-9]*$"},
                    "upper": {"type": "string", "pattern": r"^[0-9]+/[1-9][0-9]*$"},
                },
            },
        },
        "wall_ms": {"type": "number", "minimum": 0},
    },
}


@dataclass
class BoundsReport:
    lower: Fraction
    upper: Fraction
    k_used: int
    J_used: list[int]
    converged: bool
    trace: list[tuple[int, Fraction, Fraction]]
    wall_ms: float = 0.0

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def to_json(self) -> dict:
        return {
            "lower": _frac_str(self.lower),
            "upper": _frac_str(self.upper),
            "lower_float": float(self.lower),
            "upper_float": float(self.upper),
            "k": self.k_used,
            "J": list(self.J_used),
            "converged": self.converged,
            "trace": [{"k": k, "lower": _frac_str(lo), "upper": _frac_str(hi)} for k, lo, hi in self.trace],
            "wall_ms": round(self.wall_ms, 3),
        }

    def to_text(self) -> str:
        lines = [
            f"lower  {self.lower}  (~{float(self.lower):.6f})",
            f"upper  {self.upper}  (~{float(self.upper):.6f})",
            f"k      {self.k_used}",
            f"J      {{{', '.join(map(str, self.J_used))}}}",
            f"converged  {'yes' if self.converged else 'no'}",
        ]
        if len(self.trace) > 1:
            lines.append("trace")
            lines += [f"  k={k:<4d} [{lo}, {hi}]" for k, lo, hi in self.trace]
        return "\n".join(lines)


def single(q: BoundsQuery) -> BoundsReport:
    """Report for the single depth ``q.k``; converged means the interval
    is a point (or at most ``q.epsilon`` wide if one is set)."""
    t0 = time.perf_counter()
    lo, hi = bound_at_k(q)
    target = q.epsilon if q.epsilon is not None else Fraction(0)
    return BoundsReport(lo, hi, q.k, q.sorted_J(), hi - lo <= target, [(q.k, lo, hi)],
                        (time.perf_counter() - t0) * 1000)


def refine(q: BoundsQuery) -> BoundsReport:
    """Double ``k`` until the interval is at most ``q.epsilon`` wide or
    ``k`` would exceed ``q.k_max``."""
    if q.epsilon is None:
        raise ValueError("refine needs an epsilon")
    t0 = time.perf_counter()
    trace: list[tuple[int, Fraction, Fraction]] = []
    converged = False
    for k in k_schedule(q.k_max):
        lo, hi = bound_at_k(q, k)
        if trace and (lo < trace[-1][1] or hi > trace[-1][2]):
            raise MonotonicityViolation(
                f"interval [{lo}, {hi}] at k={k} is not inside [{trace[-1][1]}, {trace[-1][2]}]"
            )
        trace.append((k, lo, hi))
        if hi - lo <= q.epsilon:
            converged = True
            break
    k, lo, hi = trace[-1]
    return BoundsReport(lo, hi, k, q.sorted_J(), converged, trace, (time.perf_counter() - t0) * 1000)


# --- statistical cross-check ----------------------------------------------------------


@dataclass
class CrossValidation:
    lower: Fraction
    upper: Fraction
    empirical: float
    sigma: float
    n_samples: int
    timeouts: int

    @property
    def band(self) -> tuple[float, float]:
        return float(self.lower) - 5 * self.sigma, float(self.upper) + 5 * self.sigma

    @property
    def ok(self) -> bool:
        lo, hi = self.band
        return lo <= self.empirical <= hi


def cross_validate(
    q: BoundsQuery, n_samples: int, seed: int, max_steps: int = 1000, k: int | None = None
) -> CrossValidation:
    """Compare ``bound_at_k`` with a Monte Carlo run of the original program.

    Each use of a free variable draws a fresh value from its sub-distribution
    (the language is call-by-name).  The standard error is the binomial one at
    the empirical frequency clipped into ``[lower, upper]``, so a degenerate
    sample (all or no ``err+``) does not collapse the band.
    """
    lower, upper = bound_at_k(q, k)
    closed = substitute_samplers(q.observed, q.dists)
    est = estimate(closed, n_samples, seed, max_steps)
    p_hat = est.freq(ERR_CONV)
    q_clip = min(max(p_hat, float(lower)), float(upper))
    sigma = math.sqrt(q_clip * (1 - q_clip) / n_samples)
    return CrossValidation(lower, upper, p_hat, sigma, n_samples, est.counts.get(TIMEOUT, 0))
