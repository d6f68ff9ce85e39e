"""Exact degree arithmetic for decorated forests.

Degrees live in the ordered ring Q + Q*kappa where kappa is a formal positive
infinitesimal: (a1 + b1*kappa) < (a2 + b2*kappa) iff a1 < a2, or a1 == a2 and
b1 < b2.  This encodes values like ``-3/2 - kappa`` without ever committing to
a numeric kappa.  All arithmetic is exact; no floats anywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rat = Union[int, Fraction]


@dataclass(frozen=True, slots=True)
class Degree:
    """An element ``a + b*kappa`` of Q + Q*kappa, lexicographically ordered."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    @staticmethod
    def of(a: Rat = 0, b: Rat = 0) -> "Degree":
        return Degree(Fraction(a), Fraction(b))

    @staticmethod
    def parse(text: str) -> "Degree":
        """Parse ``"a+b*k"`` with rational a, b (e.g. ``"-5/2-1*k"``, ``"2"``)."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty degree string")
        a = Fraction(0)
        b = Fraction(0)
        # split into signed terms
        terms = re.findall(r"[+-]?[^+-]+", s)
        for term in terms:
            if not term:
                continue
            if term.endswith("k"):
                coeff = term[:-1]
                coeff = coeff[:-1] if coeff.endswith("*") else coeff
                if coeff in ("", "+"):
                    coeff = "1"
                elif coeff == "-":
                    coeff = "-1"
                b += Fraction(coeff)
            else:
                a += Fraction(term)
        return Degree(a, b)

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*k"
        sign = "+" if self.b > 0 else "-"
        return f"{self.a}{sign}{abs(self.b)}*k"

    def __add__(self, other: "Degree") -> "Degree":
        return Degree(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "Degree") -> "Degree":
        return Degree(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "Degree":
        return Degree(-self.a, -self.b)

    def __mul__(self, n: Rat) -> "Degree":
        return Degree(self.a * n, self.b * n)

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def key(self) -> tuple[Fraction, Fraction]:
        return (self.a, self.b)

    def __lt__(self, other: "Degree") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Degree") -> bool:
        return self.key() <= other.key()

    def __gt__(self, other: "Degree") -> bool:
        return self.key() > other.key()

    def __ge__(self, other: "Degree") -> bool:
        return self.key() >= other.key()

    def is_negative(self) -> bool:
        return self.key() < (0, 0)

    def is_positive(self) -> bool:
        return self.key() > (0, 0)

    def eval_at(self, kappa: Fraction) -> Fraction:
        """Evaluate at a concrete rational kappa (used only for enumeration bounds)."""
        return self.a + self.b * kappa


ZERO_DEGREE = Degree()
KAPPA = Degree(Fraction(0), Fraction(1))


# ---------------------------------------------------------------------------
# Multi-indices: elements of N^d (or Z^d for the polynomial part of labels),
# represented as plain int tuples.
# ---------------------------------------------------------------------------

MultiIndex = tuple[int, ...]


def mi_zero(d: int) -> MultiIndex:
    return (0,) * d


def mi_unit(d: int, i: int) -> MultiIndex:
    """The i-th canonical basis vector (1-based i, matching X_i notation)."""
    if not 1 <= i <= d:
        raise ValueError(f"index {i} out of range 1..{d}")
    return tuple(1 if j == i - 1 else 0 for j in range(d))


def mi_add(k: MultiIndex, l: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(k, l, strict=True))


def mi_sub(k: MultiIndex, l: MultiIndex) -> MultiIndex:
    return tuple(a - b for a, b in zip(k, l, strict=True))


def mi_leq(k: MultiIndex, l: MultiIndex) -> bool:
    return all(a <= b for a, b in zip(k, l, strict=True))


def mi_len(k: MultiIndex) -> int:
    return sum(k)


def mi_factorial(k: MultiIndex) -> int:
    out = 1
    for a in k:
        for j in range(2, a + 1):
            out *= j
    return out


def mi_binom(k: MultiIndex, l: MultiIndex) -> int:
    """prod_i C(k_i, l_i), zero unless 0 <= l <= k (the paper-wide convention)."""
    out = 1
    for a, b in zip(k, l, strict=True):
        if b < 0 or b > a:
            return 0
        c = 1
        for j in range(b):
            c = c * (a - j) // (j + 1)
        out *= c
    return out


def mi_iter_leq(k: MultiIndex) -> Iterable[MultiIndex]:
    """All multi-indices l with 0 <= l <= k, in lexicographic order."""
    if not k:
        yield ()
        return
    for head in range(k[0] + 1):
        for tail in mi_iter_leq(k[1:]):
            yield (head,) + tail


def mi_iter_budget(d: int, s: Sequence[Fraction], budget: Fraction) -> Iterable[MultiIndex]:
    """All k in N^d with sum_i k_i*s_i <= budget, lexicographic order."""
    if budget < 0:
        return
    if d == 0:
        yield ()
        return
    kmax = int(budget / s[0])
    for head in range(kmax + 1):
        for tail in mi_iter_budget(d - 1, s[1:], budget - head * s[0]):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# Extended labels: finitely supported elements of Z^d + Z(L), the codomain of
# the node decoration that records contracted subtrees (polynomial exponents
# plus a formal integer combination of edge types).
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ExtendedLabel:
    poly: tuple[int, ...]
    types: tuple[tuple[str, int], ...]  # sorted, nonzero multiplicities

    @staticmethod
    def zero(d: int) -> "ExtendedLabel":
        return ExtendedLabel((0,) * d, ())

    @staticmethod
    def make(poly: Sequence[int], types: Mapping[str, int] | None = None) -> "ExtendedLabel":
        items = tuple(sorted((t, n) for t, n in (types or {}).items() if n != 0))
        return ExtendedLabel(tuple(poly), items)

    @staticmethod
    def from_poly(k: MultiIndex) -> "ExtendedLabel":
        return ExtendedLabel(tuple(k), ())

    def type_map(self) -> dict[str, int]:
        return dict(self.types)

    def __add__(self, other: "ExtendedLabel") -> "ExtendedLabel":
        poly = tuple(a + b for a, b in zip(self.poly, other.poly, strict=True))
        tm = self.type_map()
        for t, n in other.types:
            tm[t] = tm.get(t, 0) + n
        return ExtendedLabel.make(poly, tm)

    def __sub__(self, other: "ExtendedLabel") -> "ExtendedLabel":
        return self + ExtendedLabel(tuple(-a for a in other.poly),
                                    tuple((t, -n) for t, n in other.types))

    def add_poly(self, k: Sequence[int]) -> "ExtendedLabel":
        return ExtendedLabel(tuple(a + b for a, b in zip(self.poly, k, strict=True)), self.types)

    def add_type(self, name: str, n: int = 1) -> "ExtendedLabel":
        tm = self.type_map()
        tm[name] = tm.get(name, 0) + n
        return ExtendedLabel.make(self.poly, tm)

    def is_zero(self) -> bool:
        return not any(self.poly) and not self.types


# ---------------------------------------------------------------------------
# Types and scalings.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TypeSymbol:
    """An edge type with its scaling degree.  The sign of the degree decides
    whether it behaves as a kernel (positive) or a noise (negative)."""

    name: str
    degree: Degree

    def __post_init__(self) -> None:
        if not self.degree:
            raise ValueError(f"type {self.name!r} must have nonzero degree")

    @property
    def is_kernel(self) -> bool:
        return self.degree.is_positive()

    @property
    def is_noise(self) -> bool:
        return self.degree.is_negative()


class Scaling:
    """Space-time scaling: dimension d, per-direction weights s_i >= 1 and the
    degree assignment for the declared edge types."""

    __slots__ = ("d", "s", "types", "_hash")

    def __init__(self, s: Sequence[Rat], types: Iterable[TypeSymbol]):
        self.s: tuple[Fraction, ...] = tuple(Fraction(x) for x in s)
        if any(x < 1 for x in self.s):
            raise ValueError("all scaling weights must be >= 1")
        self.d = len(self.s)
        self.types: dict[str, TypeSymbol] = {t.name: t for t in types}
        self._hash = hash((self.s, tuple(sorted((n, t.degree.key()) for n, t in self.types.items()))))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Scaling)
            and self.s == other.s
            and self.types == other.types
        )

    def type_degree(self, name: str) -> Degree:
        try:
            return self.types[name].degree
        except KeyError:
            raise KeyError(f"undeclared type {name!r}") from None

    def mi_degree(self, k: Sequence[int]) -> Fraction:
        """|k|_s = sum k_i s_i (a plain rational; multi-indices carry no kappa)."""
        return sum((ki * si for ki, si in zip(k, self.s, strict=True)), Fraction(0))

    def label_degree(self, o: ExtendedLabel) -> Degree:
        deg = Degree(self.mi_degree(o.poly))
        for t, n in o.types:
            deg = deg + self.type_degree(t) * n
        return deg

    def kernel_types(self) -> list[str]:
        return sorted(n for n, t in self.types.items() if t.is_kernel)

    def noise_types(self) -> list[str]:
        return sorted(n for n, t in self.types.items() if t.is_noise)
