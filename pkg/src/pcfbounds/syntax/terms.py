"""Types and terms of probabilistic PCF with the two ground errors.

Nodes are immutable and cache their hash and free-variable set, so terms can
be used directly as dictionary keys by the machine and the explorers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union


# --- types ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Nat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True, slots=True)
class Arrow:
    domain: "Type"
    codomain: "Type"

    def __str__(self) -> str:
        dom = str(self.domain)
        if isinstance(self.domain, Arrow):
            dom = f"({dom})"
        return f"{dom} -> {self.codomain}"


Type = Union[Nat, Arrow]
NAT = Nat()


def arrow(*types: Type) -> Type:
    """Right-nested arrow: ``arrow(a, b, c) == a -> (b -> c)``."""
    result = types[-1]
    for ty in reversed(types[:-1]):
        result = Arrow(ty, result)
    return result


def arity(ty: Type) -> list[Type]:
    """Argument types of ``ty``; every type ends in ``nat``."""
    args = []
    while isinstance(ty, Arrow):
        args.append(ty.domain)
        ty = ty.codomain
    return args


# --- terms ---------------------------------------------------------------


class Term:
    """Base class; concrete constructors below."""

    __slots__ = ()

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return all(
            getattr(self, f) == getattr(other, f) for f in self.__match_args__
        )

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def _seal(self, fv: frozenset[str]) -> None:
        key = (type(self).__name__,) + tuple(
            getattr(self, f) for f in self.__match_args__
        )
        object.__setattr__(self, "_hash", hash(key))
        object.__setattr__(self, "free_vars", fv)

    def __reduce__(self):
        # rebuild on unpickling: cached string hashes do not survive a process change
        return (type(self), tuple(getattr(self, f) for f in self.__match_args__))

    def children(self) -> Iterator["Term"]:
        for f in self.__match_args__:
            v = getattr(self, f)
            if isinstance(v, Term):
                yield v

    def __str__(self) -> str:
        from pcfbounds.syntax.parser import render

        return render(self)


_EMPTY: frozenset[str] = frozenset()


def _fv_union(*terms: Term) -> frozenset[str]:
    out = _EMPTY
    for t in terms:
        if t.free_vars:
            out = out | t.free_vars if out else t.free_vars
    return out


_NODE = dict(frozen=True, eq=False, slots=True, repr=True)
_HIDDEN = dict(init=False, repr=False, compare=False)


@dataclass(**_NODE)
class Var(Term):
    name: str
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(frozenset((self.name,)))


@dataclass(**_NODE)
class Num(Term):
    n: int
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"numerals are natural numbers, got {self.n}")
        self._seal(_EMPTY)


@dataclass(**_NODE)
class Succ(Term):
    arg: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(self.arg.free_vars)


@dataclass(**_NODE)
class Pred(Term):
    arg: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(self.arg.free_vars)


@dataclass(**_NODE)
class If(Term):
    cond: Term
    then: Term
    orelse: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(_fv_union(self.cond, self.then, self.orelse))


@dataclass(**_NODE)
class Let(Term):
    var: str
    bound: Term
    body: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(self.bound.free_vars | (self.body.free_vars - {self.var}))


@dataclass(**_NODE)
class App(Term):
    fun: Term
    arg: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(_fv_union(self.fun, self.arg))


@dataclass(**_NODE)
class Abs(Term):
    var: str
    annot: Type
    body: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(self.body.free_vars - {self.var})


@dataclass(**_NODE)
class Fix(Term):
    body: Term
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(self.body.free_vars)


@dataclass(**_NODE)
class Coin(Term):
    r: Fraction
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        r = self.r
        if isinstance(r, float) or not isinstance(r, (int, Fraction)):
            raise ValueError(f"coin bias must be an exact rational, got {r!r}")
        r = Fraction(r)
        if not 0 <= r <= 1:
            raise ValueError(f"coin bias must lie in [0, 1], got {r}")
        object.__setattr__(self, "r", r)
        self._seal(_EMPTY)


@dataclass(**_NODE)
class Errdiv(Term):
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(_EMPTY)


@dataclass(**_NODE)
class Errconv(Term):
    _hash: int = field(**_HIDDEN)
    free_vars: frozenset = field(**_HIDDEN)

    def __post_init__(self) -> None:
        self._seal(_EMPTY)


ERRDIV = Errdiv()
ERRCONV = Errconv()


def is_error(t: Term) -> bool:
    return isinstance(t, (Errdiv, Errconv))


def _any_node(t: Term, cls: type) -> bool:
    seen: set[int] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, cls):
            return True
        for c in node.children():
            if id(c) not in seen:
                seen.add(id(c))
                stack.append(c)
    return False


def is_fix_free(t: Term) -> bool:
    return not _any_node(t, Fix)


def contains_errconv(t: Term) -> bool:
    return _any_node(t, Errconv)


def size(t: Term) -> int:
    n, stack = 0, [t]
    while stack:
        node = stack.pop()
        n += 1
        stack.extend(node.children())
    return n


def depth(t: Term) -> int:
    best, stack = 0, [(t, 1)]
    while stack:
        node, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in node.children())
    return best


# --- names, substitution, alpha-equivalence ------------------------------


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    """Deterministic fresh variant of ``base``: ``y``, ``y'``, ``y''``, ..."""
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def substitute(t: Term, v: str, replacement: Term) -> Term:
    """Capture-avoiding ``t[replacement/v]``."""
    return _subst(t, v, replacement, replacement.free_vars)


def _rename_binder(x: str, body: Term, v: str, fvr: frozenset[str]) -> tuple[str, Term]:
    if x not in fvr:
        return x, body
    x2 = fresh_name(x, fvr | body.free_vars | {v})
    return x2, _subst(body, x, Var(x2), frozenset((x2,)))


def _subst(t: Term, v: str, r: Term, fvr: frozenset[str]) -> Term:
    if v not in t.free_vars:
        return t
    match t:
        case Var():
            return r
        case Succ(a):
            return Succ(_subst(a, v, r, fvr))
        case Pred(a):
            return Pred(_subst(a, v, r, fvr))
        case If(c, p, q):
            return If(_subst(c, v, r, fvr), _subst(p, v, r, fvr), _subst(q, v, r, fvr))
        case App(f, a):
            return App(_subst(f, v, r, fvr), _subst(a, v, r, fvr))
        case Fix(b):
            return Fix(_subst(b, v, r, fvr))
        case Abs(x, ty, body):
            x, body = _rename_binder(x, body, v, fvr)
            return Abs(x, ty, _subst(body, v, r, fvr))
        case Let(x, m, body):
            m = _subst(m, v, r, fvr)
            if x == v or v not in body.free_vars:
                return Let(x, m, body)
            x, body = _rename_binder(x, body, v, fvr)
            return Let(x, m, _subst(body, v, r, fvr))
    raise AssertionError(f"unexpected node {t!r}")


class AlphaKeys:
    """Hash-consing table for alpha-equivalence classes.

    ``key(t)`` is a small integer; two terms get the same integer from the
    same table iff they are alpha-equivalent.  Bound variables are numbered
    de Bruijn style, free ones keep their names.  Shared subterms are keyed
    once per binding environment, so terms that are DAGs in memory cost
    time proportional to their number of distinct nodes.
    """

    def __init__(self) -> None:
        self.table: dict[tuple, int] = {}

    def _intern(self, node_key: tuple) -> int:
        found = self.table.get(node_key)
        if found is None:
            found = self.table[node_key] = len(self.table)
        return found

    @staticmethod
    def _bound(fv: frozenset[str], env: tuple[str, ...]) -> tuple:
        if not fv or not env:
            return ()
        out = []
        for i in range(len(env) - 1, -1, -1):
            x = env[i]
            if x in fv and all(x != y for y, _ in out):
                out.append((x, len(env) - 1 - i))
        return tuple(sorted(out))

    def key(self, t: Term, env: tuple[str, ...] = ()) -> int:
        memo: dict[tuple, int] = {}
        todo: list[tuple[Term, tuple, bool]] = [(t, env, False)]
        while todo:
            node, env, ready = todo.pop()
            mk = (id(node), self._bound(node.free_vars, env))
            if mk in memo:
                continue
            kids = _scoped_children(node, env)
            if kids and not ready:
                todo.append((node, env, True))
                todo.extend((c, e, False) for c, e in kids)
                continue
            sub = tuple(memo[(id(c), self._bound(c.free_vars, e))] for c, e in kids)
            memo[mk] = self._intern(_head(node, env) + sub)
        return memo[(id(t), self._bound(t.free_vars, env))]


def _scoped_children(t: Term, env: tuple[str, ...]) -> list[tuple[Term, tuple[str, ...]]]:
    match t:
        case Abs(x, _, body):
            return [(body, env + (x,))]
        case Let(x, m, body):
            return [(m, env), (body, env + (x,))]
    return [(c, env) for c in t.children()]


def _head(t: Term, env: tuple[str, ...]) -> tuple:
    match t:
        case Var(x):
            for i in range(len(env) - 1, -1, -1):
                if env[i] == x:
                    return ("b", len(env) - 1 - i)
            return ("f", x)
        case Num(n):
            return ("n", n)
        case Coin(r):
            return ("c", r)
        case Abs(_, ty, _):
            return ("lam", ty)
    return (type(t).__name__,)


_DEFAULT_KEYS = AlphaKeys()


def alpha_key(t: Term, env: tuple[str, ...] = ()) -> int:
    """Alpha-equivalence class of ``t`` in a process-wide table.

    Long-running callers should keep their own :class:`AlphaKeys`; this
    shared table only grows.
    """
    return _DEFAULT_KEYS.key(t, env)


def alpha_eq(a: Term, b: Term) -> bool:
    return a is b or alpha_key(a) == alpha_key(b)


# --- contexts ------------------------------------------------------------

Context = Mapping[str, Type]


def make_context(pairs=()) -> dict[str, Type]:
    """Build a context from ``(name, type)`` pairs or a mapping.

    Later bindings shadow earlier ones, so lookup is by rightmost binding.
    """
    if isinstance(pairs, Mapping):
        return dict(pairs)
    return {name: ty for name, ty in pairs}


def ground_context(names) -> dict[str, Type]:
    return {name: NAT for name in sorted(names)}


def is_ground(ctx: Context) -> bool:
    return all(isinstance(ty, Nat) for ty in ctx.values())
