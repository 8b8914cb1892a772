"""Sub-distributions over the naturals plus an error point, and the ground
operations of the extensional model.

A :class:`SubDist` holds finitely many rational masses on naturals and one
mass on the error point ``ERR``.  The extensional order lets mass on ``ERR``
pay for probability that moves between naturals.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional


class _Err:
    """The error point of the web; sorts after every natural."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ERR"

    def __str__(self) -> str:
        return "err"

    def __reduce__(self):
        return (_Err, ())


ERR = _Err()
Index = int | _Err


def index_key(i: Index) -> tuple[int, int]:
    return (1, 0) if i is ERR else (0, i)


def _rational(value, what: str) -> Fraction:
    if isinstance(value, float):
        raise ValueError(f"{what}: floats are not accepted, use an exact rational")
    if isinstance(value, str):
        value = value.strip()
        if not re.fullmatch(r"[0-9]+(/[0-9]+)?", value):
            raise ValueError(f"{what}: {value!r} is not a non-negative rational p/q")
    return Fraction(value)


@dataclass(frozen=True)
class SubDist:
    """Finite-support sub-probability vector over ``N ∪ {ERR}``.

    ``entries`` is a sorted tuple of ``(n, mass)`` with non-zero masses only.
    """

    entries: tuple[tuple[int, Fraction], ...] = ()
    err: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        cleaned = {}
        for n, mass in self.entries:
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise ValueError(f"indices must be naturals, got {n!r}")
            mass = _rational(mass, f"mass of {n}")
            if mass < 0:
                raise ValueError(f"negative mass {mass} at {n}")
            if mass:
                cleaned[n] = cleaned.get(n, Fraction(0)) + mass
        err = _rational(self.err, "err mass")
        if err < 0:
            raise ValueError(f"negative err mass {err}")
        object.__setattr__(self, "entries", tuple(sorted(cleaned.items())))
        object.__setattr__(self, "err", err)
        if self.total() > 1:
            raise ValueError(f"total mass {self.total()} exceeds 1")

    @classmethod
    def of(cls, masses: Mapping = (), err=0) -> "SubDist":
        """``SubDist.of({0: Fraction(1, 2)}, err=Fraction(1, 4))``.

        The key ``ERR`` (or the string ``"err"``) may be used instead of ``err=``.
        """
        items, err = [], _rational(err, "err")
        for key, mass in dict(masses).items():
            if key is ERR or key == "err":
                err += _rational(mass, "err mass")
            else:
                items.append((key, mass))
        return cls(tuple(items), err)

    def mass(self, i: Index) -> Fraction:
        if i is ERR:
            return self.err
        for n, m in self.entries:
            if n == i:
                return m
        return Fraction(0)

    def as_dict(self) -> dict[Index, Fraction]:
        out: dict[Index, Fraction] = dict(self.entries)
        if self.err:
            out[ERR] = self.err
        return out

    def support(self) -> frozenset[int]:
        """Naturals carrying positive mass (the error point excluded)."""
        return frozenset(n for n, _ in self.entries)

    def nat_mass(self) -> Fraction:
        return sum((m for _, m in self.entries), Fraction(0))

    def total(self) -> Fraction:
        return self.nat_mass() + self.err

    def scale(self, alpha) -> "SubDist":
        alpha = Fraction(alpha)
        return SubDist(tuple((n, alpha * m) for n, m in self.entries), alpha * self.err)

    def __add__(self, other: "SubDist") -> "SubDist":
        return SubDist(self.entries + other.entries, self.err + other.err)

    def __le__(self, other: "SubDist") -> bool:
        """Pointwise order."""
        return self.err <= other.err and all(m <= other.mass(n) for n, m in self.entries)

    def __str__(self) -> str:
        return format_subdist(self)


ZERO = SubDist()
DELTA_ERR = SubDist((), Fraction(1))


def dirac(i: Index) -> SubDist:
    return DELTA_ERR if i is ERR else SubDist(((i, Fraction(1)),))


def combine(pairs: Iterable[tuple[Fraction, SubDist]]) -> SubDist:
    """``sum(alpha_i * u_i)``; the caller guarantees the result has mass <= 1."""
    entries: dict[int, Fraction] = {}
    err = Fraction(0)
    for alpha, u in pairs:
        if not alpha:
            continue
        for n, m in u.entries:
            entries[n] = entries.get(n, Fraction(0)) + alpha * m
        err += alpha * u.err
    return SubDist(tuple(entries.items()), err)


# --- extensional order -----------------------------------------------------


def inversions(u: SubDist, v: SubDist) -> set[int]:
    """Naturals where ``u`` puts strictly more mass than ``v``."""
    return {n for n, m in u.entries if m > v.mass(n)}


def ext_leq(u: SubDist, v: SubDist) -> bool:
    """``u ⊑ v``: the mass ``u`` has in excess on its inversion indices is
    covered by the extra error mass of ``v``."""
    excess = sum((u.mass(n) - v.mass(n) for n in inversions(u, v)), Fraction(0))
    return excess <= v.err - u.err


def scatch(u: SubDist) -> Fraction:
    """Projection on the error coordinate."""
    return u.err


# --- ground constructs with error ---------------------------------------------


def case_err(u: SubDist, branch0: SubDist, branch_s: SubDist) -> SubDist:
    """Conditional: mass on 0 goes to ``branch0``, mass on successors to
    ``branch_s``, error mass stays an error."""
    succ_mass = u.nat_mass() - u.mass(0)
    return combine([(u.mass(0), branch0), (succ_mass, branch_s), (u.err, DELTA_ERR)])


def let_err(u: SubDist, h: Callable[[int], SubDist]) -> SubDist:
    """Call-by-value binding: ``sum_n u_n h(n) + u_err δ_err``."""
    return combine([(m, h(n)) for n, m in u.entries] + [(u.err, DELTA_ERR)])


def bfun_err(f: Callable[[int], Optional[int]], u: SubDist) -> SubDist:
    """Push mass through a partial function on naturals; ``None`` means
    undefined and drops the mass.  Error mass is kept."""
    out = []
    for n, m in u.entries:
        image = f(n)
        if image is not None:
            out.append((image, m))
    return SubDist(tuple(out), u.err)


def succ_err(u: SubDist) -> SubDist:
    return bfun_err(lambda n: n + 1, u)


def pred_err(u: SubDist) -> SubDist:
    return bfun_err(lambda n: max(n - 1, 0), u)


def idl(J: Iterable[int], u: SubDist) -> SubDist:
    """Lower approximation of the identity: mass outside ``J`` is dropped."""
    J = frozenset(J)
    return SubDist(tuple((n, m) for n, m in u.entries if n in J), u.err)


def idu(J: Iterable[int], u: SubDist) -> SubDist:
    """Upper approximation: mass outside ``J`` is moved onto the error point."""
    J = frozenset(J)
    outside = sum((m for n, m in u.entries if n not in J), Fraction(0))
    return SubDist(tuple((n, m) for n, m in u.entries if n in J), u.err + outside)


# --- text / JSON ----------------------------------------------------------------


def format_subdist(u: SubDist) -> str:
    parts = [f"{n}: {m}" for n, m in u.entries]
    if u.err:
        parts.append(f"err: {u.err}")
    return "{" + ", ".join(parts) + "}"


_ENTRY_RE = re.compile(r"\s*(err|[0-9]+)\s*:\s*([^,]+?)\s*(?:,|$)")


def parse_subdist(text: str) -> SubDist:
    """Parse ``{0: 1/2, 3: 1/4, err: 1/8}``; omitted keys are zero."""
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ValueError(f"sub-distribution must be written {{...}}, got {text!r}")
    body = body[1:-1].strip()
    masses: dict = {}
    pos = 0
    while pos < len(body):
        m = _ENTRY_RE.match(body, pos)
        if m is None:
            raise ValueError(f"cannot parse sub-distribution entry at {body[pos:]!r}")
        key = ERR if m.group(1) == "err" else int(m.group(1))
        if key in masses:
            raise ValueError(f"duplicate key {m.group(1)}")
        masses[key] = _rational(m.group(2), f"mass of {m.group(1)}")
        pos = m.end()
    return SubDist.of(masses)


def subdist_to_json(u: SubDist) -> dict[str, str]:
    out = {str(n): str(m) for n, m in u.entries}
    if u.err:
        out["err"] = str(u.err)
    return out


def subdist_from_json(obj: Mapping[str, str] | str) -> SubDist:
    if isinstance(obj, str):
        obj = json.loads(obj)
    masses = {ERR if k == "err" else int(k): _rational(v, k) for k, v in obj.items()}
    return SubDist.of(masses)
