"""Krivine machine from almost-closed, fix-free states to polynomial trees.

A state is a term together with a stack of pending frames.  Deterministic
transitions are run in a loop; the machine only branches at ``coin r``
(a :class:`Combo` node) and at a free ground variable (a :class:`VarNode`
whose ``err`` branch is ``One`` and whose branch ``n`` continues with the
numeral ``n`` for each ``n`` in the index set ``J``).

Branch-point states are memoized on their alpha-equivalence class, so the
returned tree is really a DAG; :func:`pcfbounds.poly.tree_to_poly` handles
sharing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from pcfbounds.deepstack import deep_stack
from pcfbounds.groundsem import ERR
from pcfbounds.poly import ONE, ZERO, Combo, PolyTree, VarNode
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
    AlphaKeys,
    ground_context,
    is_fix_free,
    is_ground,
    substitute,
)
from pcfbounds.syntax.typecheck import TypeCheckError, typecheck


class FixEncountered(ValueError):
    """The machine only runs on fix-free states; unfold fixpoints first."""


class DepthExceeded(RuntimeError):
    """The tree of branch points is deeper than the configured limit."""


class StepsExceeded(RuntimeError):
    """The deterministic transition budget ran out."""


# --- stacks --------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EmptyStack:
    def __repr__(self) -> str:
        return "Empty"


@dataclass(frozen=True, slots=True)
class SuccFrame:
    rest: "Stack"


@dataclass(frozen=True, slots=True)
class PredFrame:
    rest: "Stack"


@dataclass(frozen=True, slots=True)
class IfFrame:
    then: Term
    orelse: Term
    rest: "Stack"


@dataclass(frozen=True, slots=True)
class LetFrame:
    var: str
    body: Term
    rest: "Stack"


@dataclass(frozen=True, slots=True)
class ArgFrame:
    arg: Term
    rest: "Stack"


Stack = Union[EmptyStack, SuccFrame, PredFrame, IfFrame, LetFrame, ArgFrame]
EMPTY = EmptyStack()


@dataclass(frozen=True, slots=True)
class MachineState:
    term: Term
    stack: Stack = EMPTY


def frames(stack: Stack) -> list[Stack]:
    """Frames from the top of the stack down, ``Empty`` excluded."""
    out = []
    while not isinstance(stack, EmptyStack):
        out.append(stack)
        stack = stack.rest
    return out


def stack_terms(stack: Stack) -> Iterable[Term]:
    for fr in frames(stack):
        match fr:
            case IfFrame(p, q, _):
                yield p
                yield q
            case LetFrame(_, body, _) | ArgFrame(body, _):
                yield body


def stack_free_vars(stack: Stack) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for fr in frames(stack):
        match fr:
            case IfFrame(p, q, _):
                out |= p.free_vars | q.free_vars
            case LetFrame(x, body, _):
                out |= body.free_vars - {x}
            case ArgFrame(arg, _):
                out |= arg.free_vars
    return out


def typecheck_stack(ctx: Context, stack: Stack) -> Type:
    """Type of the value the stack is waiting for."""
    ty: Type = NAT
    for fr in reversed(frames(stack)):
        match fr:
            case SuccFrame() | PredFrame():
                _need_nat(ty, fr)
            case IfFrame(p, q, _):
                _need_nat(ty, fr)
                for branch in (p, q):
                    if not isinstance(typecheck(ctx, branch), Nat):
                        raise TypeCheckError("if-frame branches must have type nat", branch)
            case LetFrame(x, body, _):
                _need_nat(ty, fr)
                if not isinstance(typecheck({**ctx, x: NAT}, body), Nat):
                    raise TypeCheckError("let-frame body must have type nat", body)
            case ArgFrame(arg, _):
                ty = Arrow(typecheck(ctx, arg), ty)
    return ty


def _need_nat(ty: Type, fr) -> None:
    if not isinstance(ty, Nat):
        raise TypeCheckError(f"{type(fr).__name__} sits above a stack expecting {ty}")


def typecheck_state(ctx: Context, state: MachineState) -> Type:
    """Check that term and stack agree; returns their common type."""
    tty = typecheck(ctx, state.term)
    sty = typecheck_stack(ctx, state.stack)
    if tty != sty:
        raise TypeCheckError(f"term has type {tty} but the stack expects {sty}", state.term)
    return tty


def _stack_key(stack: Stack, keys: AlphaKeys) -> tuple:
    alpha_key = keys.key
    out = []
    for fr in frames(stack):
        match fr:
            case SuccFrame():
                out.append("s")
            case PredFrame():
                out.append("p")
            case IfFrame(p, q, _):
                out.append(("if", alpha_key(p), alpha_key(q)))
            case LetFrame(x, body, _):
                out.append(("let", alpha_key(body, (x,))))
            case ArgFrame(arg, _):
                out.append(("arg", alpha_key(arg)))
    return tuple(out)


def state_key(term: Term, stack: Stack, keys: AlphaKeys) -> tuple:
    """Alpha-equivalence class of a state, relative to the table ``keys``."""
    return (keys.key(term), _stack_key(stack, keys))


# --- the machine -----------------------------------------------------------------


@dataclass(eq=False)
class _Branch:
    key: tuple
    kind: str  # "coin" or "var"
    label: object  # bias r, or the variable name
    indices: list  # child labels: [0, 1] for a coin, J for a variable
    children: list  # (term, stack) per index
    resolved: list = field(default_factory=list)
    next: int = 0


class _Machine:
    def __init__(self, J: frozenset[int], max_depth: int, max_steps: int | None):
        self.J = sorted(J)
        self.max_depth = max_depth
        self.max_steps = max_steps
        self.steps = 0
        self.memo: dict[tuple, PolyTree] = {}
        self.keys = AlphaKeys()

    def advance(self, term: Term, stack: Stack) -> PolyTree | _Branch:
        """Run deterministic transitions until a leaf or a branch point."""
        while True:
            self.steps += 1
            if self.max_steps is not None and self.steps > self.max_steps:
                raise StepsExceeded(f"more than {self.max_steps} machine transitions")
            match term:
                case Errconv():
                    return ONE
                case Errdiv():
                    return ZERO
                case Coin(r):
                    return _Branch(
                        state_key(term, stack, self.keys), "coin", r, [0, 1],
                        [(Num(0), stack), (Num(1), stack)],
                    )
                case Var(x):
                    return _Branch(
                        state_key(term, stack, self.keys), "var", x, list(self.J),
                        [(Num(n), stack) for n in self.J],
                    )
                case Num(n):
                    match stack:
                        case EmptyStack():
                            return ZERO
                        case SuccFrame(rest):
                            term, stack = Num(n + 1), rest
                        case PredFrame(rest):
                            term, stack = Num(n - 1 if n else 0), rest
                        case IfFrame(p, q, rest):
                            term, stack = (p if n == 0 else q), rest
                        case LetFrame(x, body, rest):
                            term, stack = substitute(body, x, term), rest
                        case ArgFrame():
                            raise TypeCheckError("a numeral cannot be applied", term)
                case Succ(a):
                    term, stack = a, SuccFrame(stack)
                case Pred(a):
                    term, stack = a, PredFrame(stack)
                case If(c, p, q):
                    term, stack = c, IfFrame(p, q, stack)
                case Let(x, m, body):
                    term, stack = m, LetFrame(x, body, stack)
                case App(f, a):
                    term, stack = f, ArgFrame(a, stack)
                case Abs(x, _, body):
                    if not isinstance(stack, ArgFrame):
                        raise TypeCheckError("abstraction reached a ground stack", term)
                    term, stack = substitute(body, x, stack.arg), stack.rest
                case Fix():
                    raise FixEncountered("fix reached in head position; unfold it first")
                case _:
                    raise TypeCheckError(f"not a term: {term!r}")

    def _node(self, b: _Branch) -> PolyTree:
        if b.kind == "coin":
            r = b.label
            return Combo(r, b.resolved[0], 1 - r, b.resolved[1])
        branches = [(ERR, ONE)] + list(zip(b.indices, b.resolved))
        return VarNode(b.label, tuple(branches))

    def run(self, term: Term, stack: Stack) -> PolyTree:
        first = self.advance(term, stack)
        if not isinstance(first, _Branch):
            return first
        work = [first]
        active = {first.key}
        while work:
            b = work[-1]
            pushed = False
            while b.next < len(b.children):
                if len(b.resolved) == b.next:
                    child = self.advance(*b.children[b.next])
                    b.resolved.append(child)
                child = b.resolved[b.next]
                if isinstance(child, _Branch):
                    hit = self.memo.get(child.key)
                    if hit is None:
                        if child.key in active:
                            raise RuntimeError("machine revisited a state on its own path")
                        if len(work) >= self.max_depth:
                            raise DepthExceeded(f"branching depth exceeds {self.max_depth}")
                        work.append(child)
                        active.add(child.key)
                        pushed = True
                        break
                    b.resolved[b.next] = hit
                b.next += 1
            if pushed:
                continue
            self.memo[b.key] = self._node(b)
            work.pop()
            active.discard(b.key)
        return self.memo[first.key]


@deep_stack
def kreval(
    state: MachineState,
    J: Iterable[int] = (),
    ctx: Context | None = None,
    *,
    max_depth: int = 100_000,
    max_steps: int | None = None,
) -> PolyTree:
    """Polynomial tree of an almost-closed fix-free state, restricted to ``J``.

    ``ctx`` defaults to the free variables of the state, all at ``nat``.
    """
    if ctx is None:
        ctx = ground_context(state.term.free_vars | stack_free_vars(state.stack))
    if not is_ground(ctx):
        raise TypeCheckError("the machine runs in a ground context only")
    if not is_fix_free(state.term) or not all(is_fix_free(t) for t in stack_terms(state.stack)):
        raise FixEncountered("state contains fix; unfold it first")
    typecheck_state(ctx, state)
    machine = _Machine(frozenset(J), max_depth, max_steps)
    return machine.run(state.term, state.stack)


@deep_stack
def kreval_term(m: Term, ctx: Context | None = None, J: Iterable[int] = (), **kw) -> PolyTree:
    """``kreval`` of ``<m, Empty>``; ``m`` must have type ``nat``."""
    if ctx is None:
        ctx = ground_context(m.free_vars)
    ty = typecheck(ctx, m)
    if not isinstance(ty, Nat):
        raise TypeCheckError(f"term has type {ty}, expected nat", m)
    return kreval(MachineState(m, EMPTY), J, ctx, **kw)

