"""Finite polynomials over indexed variables ``x(i)``, ``i ∈ N ∪ {err}``,
polynomial trees as produced by the Krivine machine, and evaluation.

A multi-exponent is stored canonically as a sorted tuple of
``(variable, index, multiplicity)`` triples, ordered by variable name then
index with ``err`` last.  Coefficients are non-negative :class:`Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from pcfbounds.groundsem import ERR, Index, SubDist, index_key

MultiExponent = tuple[tuple[str, Index, int], ...]
UNIT: MultiExponent = ()


class MissingVariable(KeyError):
    pass


def _exp_key(mu: MultiExponent) -> tuple:
    return tuple((x, index_key(i), k) for x, i, k in mu)


def _canonical(pairs: Iterable[tuple[str, Index, int]]) -> MultiExponent:
    acc: dict[tuple[str, Index], int] = {}
    for x, i, k in pairs:
        acc[(x, i)] = acc.get((x, i), 0) + k
    items = [(x, i, k) for (x, i), k in acc.items() if k]
    items.sort(key=lambda t: (t[0], index_key(t[1])))
    return tuple(items)


def exp_mul(a: MultiExponent, b: MultiExponent) -> MultiExponent:
    if not a:
        return b
    if not b:
        return a
    return _canonical(a + b)


def degree(mu: MultiExponent) -> int:
    return sum(k for _, _, k in mu)


class Polynomial:
    """Immutable finite map from multi-exponents to positive rationals."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[MultiExponent, Fraction] | None = None):
        clean = {}
        for mu, c in (terms or {}).items():
            c = Fraction(c)
            if c < 0:
                raise ValueError(f"negative coefficient {c}")
            if c:
                mu = _canonical(mu)
                clean[mu] = clean.get(mu, Fraction(0)) + c
        self.terms: dict[MultiExponent, Fraction] = clean

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({UNIT: Fraction(c)})

    @classmethod
    def var(cls, x: str, i: Index) -> "Polynomial":
        return cls({((x, i, 1),): Fraction(1)})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return poly_add(self, other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return poly_mul(self, other)

    def variables(self) -> set[str]:
        return {x for mu in self.terms for x, _, _ in mu}

    def sorted_terms(self) -> list[tuple[MultiExponent, Fraction]]:
        """Highest degree first, then by canonical exponent order; the constant
        term comes last."""
        return sorted(self.terms.items(), key=lambda kv: (-degree(kv[0]), _exp_key(kv[0])))

    def __repr__(self) -> str:
        return f"Polynomial({render_poly(self)})"

    def __str__(self) -> str:
        return render_poly(self)


ZERO_POLY = Polynomial()
ONE_POLY = Polynomial.const(1)


def _raw(terms: dict[MultiExponent, Fraction]) -> Polynomial:
    p = Polynomial.__new__(Polynomial)
    p.terms = terms
    return p


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    if len(a.terms) < len(b.terms):
        a, b = b, a
    out = dict(a.terms)
    for mu, c in b.terms.items():
        out[mu] = out.get(mu, 0) + c
    return _raw(out)


def poly_scale(alpha, a: Polynomial) -> Polynomial:
    alpha = Fraction(alpha)
    if alpha < 0:
        raise ValueError("scaling factor must be non-negative")
    if not alpha:
        return ZERO_POLY
    if alpha == 1:
        return a
    return _raw({mu: alpha * c for mu, c in a.terms.items()})


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    out: dict[MultiExponent, Fraction] = {}
    for mu, c in a.terms.items():
        for nu, d in b.terms.items():
            key = exp_mul(mu, nu)
            out[key] = out.get(key, 0) + c * d
    return _raw(out)


def var_sum(x: str, family: Mapping[Index, Polynomial]) -> Polynomial:
    """``sum_i x(i) * A_i`` for a finite family ``{i: A_i}``."""
    out: dict[MultiExponent, Fraction] = {}
    for i, poly in family.items():
        bump = ((x, i, 1),)
        for mu, c in poly.terms.items():
            key = exp_mul(bump, mu)
            out[key] = out.get(key, 0) + c
    return _raw(out)


def evaluate(p: Polynomial, valuation: Mapping[str, SubDist]) -> Fraction:
    """Exact value of ``p`` at a valuation of every mentioned variable."""
    total = Fraction(0)
    for mu, c in p.terms.items():
        term = c
        for x, i, k in mu:
            try:
                u = valuation[x]
            except KeyError:
                raise MissingVariable(x) from None
            term *= u.mass(i) ** k
            if not term:
                break
        total += term
    return total


# ``eval`` would shadow a builtin
eval_poly = evaluate


# --- polynomial trees ---------------------------------------------------------


class PolyTree:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class _One(PolyTree):
    def __repr__(self) -> str:
        return "One"


@dataclass(frozen=True, slots=True)
class _Zero(PolyTree):
    def __repr__(self) -> str:
        return "Zero"


ONE = _One()
ZERO = _Zero()


@dataclass(frozen=True, slots=True)
class VarNode(PolyTree):
    """Branch on the value of ground variable ``var``.

    ``branches`` is a tuple of ``(index, subtree)`` pairs; the ``err`` branch
    is always present.  Indices that are absent were not expanded.
    """

    var: str
    branches: tuple[tuple[Index, PolyTree], ...]

    def __post_init__(self) -> None:
        if not any(i is ERR for i, _ in self.branches):
            raise ValueError("VarNode needs an err branch")

    def branch(self, i: Index) -> PolyTree | None:
        for j, s in self.branches:
            if j is i or j == i:
                return s
        return None


@dataclass(frozen=True, slots=True)
class Combo(PolyTree):
    """``a1 * left + a2 * right`` with ``a1, a2 >= 0`` and ``a1 + a2 <= 1``."""

    a1: Fraction
    left: PolyTree
    a2: Fraction
    right: PolyTree

    def __post_init__(self) -> None:
        if self.a1 < 0 or self.a2 < 0 or self.a1 + self.a2 > 1:
            raise ValueError(f"bad convex weights {self.a1}, {self.a2}")


def tree_to_poly(tree: PolyTree) -> Polynomial:
    """Polynomial of a tree.  Shared subtrees (the machine memoizes states)
    are converted once."""
    memo: dict[int, Polynomial] = {}
    # iterative post-order; trees can be deep
    stack: list[tuple[PolyTree, bool]] = [(tree, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if node is ONE or isinstance(node, _One):
            memo[id(node)] = ONE_POLY
        elif node is ZERO or isinstance(node, _Zero):
            memo[id(node)] = ZERO_POLY
        elif isinstance(node, Combo):
            if ready:
                memo[id(node)] = poly_add(
                    poly_scale(node.a1, memo[id(node.left)]),
                    poly_scale(node.a2, memo[id(node.right)]),
                )
            else:
                stack.append((node, True))
                stack.append((node.left, False))
                stack.append((node.right, False))
        elif isinstance(node, VarNode):
            if ready:
                memo[id(node)] = var_sum(node.var, {i: memo[id(s)] for i, s in node.branches})
            else:
                stack.append((node, True))
                stack.extend((s, False) for _, s in node.branches)
        else:
            raise TypeError(f"not a polynomial tree: {node!r}")
    return memo[id(tree)]


def tree_size(tree: PolyTree) -> int:
    """Number of distinct nodes (shared subtrees counted once)."""
    seen, stack = set(), [tree]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Combo):
            stack += [node.left, node.right]
        elif isinstance(node, VarNode):
            stack += [s for _, s in node.branches]
    return len(seen)


def count_combos(tree: PolyTree) -> int:
    """Number of Combo nodes, shared nodes counted once."""
    seen, stack, n = set(), [tree], 0
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Combo):
            n += 1
            stack += [node.left, node.right]
        elif isinstance(node, VarNode):
            stack += [s for _, s in node.branches]
    return n


# --- rendering -------------------------------------------------------------------


def _render_monomial(mu: MultiExponent) -> str:
    parts = []
    for x, i, k in mu:
        s = f"{x}({i})"
        parts.append(s if k == 1 else f"{s}^{k}")
    return "·".join(parts)


def render_poly(p: Polynomial) -> str:
    """Human-readable form, e.g. ``1/2·x(0)^2·y(err) + 1/4``."""
    if not p.terms:
        return "0"
    out = []
    for mu, c in p.sorted_terms():
        if not mu:
            out.append(str(c))
        elif c == 1:
            out.append(_render_monomial(mu))
        else:
            out.append(f"{c}·{_render_monomial(mu)}")
    return " + ".join(out)


def poly_to_json(p: Polynomial) -> dict:
    return {
        "terms": [
            {
                "coeff": f"{c.numerator}/{c.denominator}",
                "exponents": _exponents_json(mu),
            }
            for mu, c in p.sorted_terms()
        ]
    }


def _exponents_json(mu: MultiExponent) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = {}
    for x, i, k in mu:
        out.setdefault(x, {})[str(i)] = k
    return out


def poly_from_json(obj: Mapping) -> Polynomial:
    terms = {}
    for entry in obj["terms"]:
        mu = [
            (x, ERR if i == "err" else int(i), k)
            for x, idx in entry["exponents"].items()
            for i, k in idx.items()
        ]
        terms[_canonical(mu)] = Fraction(entry["coeff"])
    return Polynomial(terms)


Valuation = Mapping[str, SubDist]
PolyTreeT = Union[_One, _Zero, VarNode, Combo]
