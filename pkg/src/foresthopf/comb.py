"""Formal Q-linear combinations of canonical forests and tensors thereof.

Every combination carries a space tag.  The tags name the concrete sectors of
the construction:

* ``H_CIRC`` / ``H_1`` / ``H_HAT2``: contracted trees, forests, and
  recentering-rooted trees with no degree constraints;
* ``T_EX``: trees of the model sector (subject to a rule when one is given);
* ``FREE_MINUS_HAT`` / ``FREE_PLUS_HAT``: the unprojected algebras in which
  twisted antipodes take values;
* ``T_MINUS_EX`` / ``T_PLUS_EX``: the projected Hopf algebras (negative
  non-planted components, respectively positive planted factors);
* ``T_RED`` / ``T_PLUS_RED`` / ``T_MINUS_RED``: the reduced sectors (colour-1
  marks and extended labels erased);
* ``RAW``: unnormalised output of the generic coproducts.

Unit conventions (recorded in the design notes): within tree sectors the unit
is the bare uncoloured node; within forest sectors the unit is the empty
forest, and collapsed bare coloured nodes with no polynomial decoration are
identified with it.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .degrees import Degree, Scaling, mi_add, mi_zero
from .forest import (
    DecoratedForest,
    StructuralError,
    contract,
    degree_minus,
    degree_plus,
    empty_forest,
    forest_product,
    is_planted,
    join_roots,
    make_forest,
    planted_trunk_type,
    root_branches,
    single_node,
)


class SpaceTag(enum.Enum):
    T_EX = "T_ex"
    T_MINUS_EX = "T_minus_ex"
    T_PLUS_EX = "T_plus_ex"
    H_CIRC = "H_circ"
    H_1 = "H_1"
    H_HAT2 = "H_hat2"
    FREE_MINUS_HAT = "Free_minus_hat"
    FREE_PLUS_HAT = "Free_plus_hat"
    T_RED = "T"
    T_PLUS_RED = "T_plus"
    T_MINUS_RED = "T_minus"
    RAW = "raw"


TREE_TAGS = {
    SpaceTag.T_EX,
    SpaceTag.T_PLUS_EX,
    SpaceTag.H_CIRC,
    SpaceTag.H_HAT2,
    SpaceTag.FREE_PLUS_HAT,
    SpaceTag.T_RED,
    SpaceTag.T_PLUS_RED,
}
FOREST_TAGS = {
    SpaceTag.T_MINUS_EX,
    SpaceTag.H_1,
    SpaceTag.FREE_MINUS_HAT,
    SpaceTag.T_MINUS_RED,
    SpaceTag.RAW,
}
MINUS_TAGS = {SpaceTag.T_MINUS_EX, SpaceTag.H_1, SpaceTag.FREE_MINUS_HAT, SpaceTag.T_MINUS_RED}
PLUS_TAGS = {SpaceTag.T_PLUS_EX, SpaceTag.H_HAT2, SpaceTag.FREE_PLUS_HAT, SpaceTag.T_PLUS_RED}


class SpaceError(ValueError):
    """Operation applied to a combination with an incompatible space tag."""


class LinComb:
    """Finite formal Q-linear combination of canonical forests."""

    __slots__ = ("terms", "tag")

    def __init__(self, tag: SpaceTag, terms: Mapping[DecoratedForest, Fraction] | None = None):
        self.tag = tag
        self.terms: dict[DecoratedForest, Fraction] = {}
        if terms:
            for f, c in terms.items():
                if c:
                    self.terms[f] = self.terms.get(f, Fraction(0)) + Fraction(c)
            self.terms = {f: c for f, c in self.terms.items() if c}

    @staticmethod
    def basis(tag: SpaceTag, forest: DecoratedForest, coeff: Fraction | int = 1) -> "LinComb":
        return LinComb(tag, {forest: Fraction(coeff)})

    @staticmethod
    def zero(tag: SpaceTag) -> "LinComb":
        return LinComb(tag)

    def copy(self) -> "LinComb":
        out = LinComb(self.tag)
        out.terms = dict(self.terms)
        return out

    def add_term(self, forest: DecoratedForest, coeff: Fraction) -> None:
        c = self.terms.get(forest, Fraction(0)) + coeff
        if c:
            self.terms[forest] = c
        else:
            self.terms.pop(forest, None)

    def __add__(self, other: "LinComb") -> "LinComb":
        if self.tag is not other.tag:
            raise SpaceError(f"cannot add {self.tag.value} and {other.tag.value}")
        out = self.copy()
        for f, c in other.terms.items():
            out.add_term(f, c)
        return out

    def __sub__(self, other: "LinComb") -> "LinComb":
        return self + (-1) * other

    def __mul__(self, scalar) -> "LinComb":
        s = Fraction(scalar)
        return LinComb(self.tag, {f: c * s for f, c in self.terms.items()} if s else {})

    __rmul__ = __mul__

    def __neg__(self) -> "LinComb":
        return -1 * self

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LinComb)
            and self.tag is other.tag
            and self.terms == other.terms
        )

    def __hash__(self):  # pragma: no cover - mutable container
        raise TypeError("LinComb is not hashable")

    def map_basis(self, fn: Callable[[DecoratedForest], "LinComb"], tag: SpaceTag) -> "LinComb":
        out = LinComb.zero(tag)
        for f, c in self.terms.items():
            img = fn(f)
            for g, c2 in img.terms.items():
                out.add_term(g, c * c2)
        return out

    def sorted_terms(self) -> list[tuple[DecoratedForest, Fraction]]:
        return sorted(self.terms.items(), key=lambda it: it[0].key)

    def __repr__(self) -> str:
        from .grammar import print_forest

        if not self.terms:
            return f"<0 :{self.tag.value}>"
        bits = [f"{c}*{print_forest(f)}" for f, c in self.sorted_terms()]
        return f"<{' + '.join(bits)} :{self.tag.value}>"


class TensorComb:
    """Finite Q-linear combination of pairs of canonical forests."""

    __slots__ = ("terms", "left_tag", "right_tag")

    def __init__(self, left_tag: SpaceTag, right_tag: SpaceTag,
                 terms: Mapping[tuple[DecoratedForest, DecoratedForest], Fraction] | None = None):
        self.left_tag = left_tag
        self.right_tag = right_tag
        self.terms: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {}
        if terms:
            for k, c in terms.items():
                if c:
                    self.terms[k] = self.terms.get(k, Fraction(0)) + Fraction(c)
            self.terms = {k: c for k, c in self.terms.items() if c}

    @property
    def tags(self) -> tuple[SpaceTag, SpaceTag]:
        return (self.left_tag, self.right_tag)

    def add_term(self, left: DecoratedForest, right: DecoratedForest, coeff: Fraction) -> None:
        k = (left, right)
        c = self.terms.get(k, Fraction(0)) + coeff
        if c:
            self.terms[k] = c
        else:
            self.terms.pop(k, None)

    def __add__(self, other: "TensorComb") -> "TensorComb":
        if self.tags != other.tags:
            raise SpaceError("tensor tag mismatch")
        out = TensorComb(self.left_tag, self.right_tag, self.terms)
        for (l, r), c in other.terms.items():
            out.add_term(l, r, c)
        return out

    def __sub__(self, other: "TensorComb") -> "TensorComb":
        return self + (-1) * other

    def __mul__(self, scalar) -> "TensorComb":
        s = Fraction(scalar)
        return TensorComb(self.left_tag, self.right_tag,
                          {k: c * s for k, c in self.terms.items()} if s else {})

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TensorComb)
            and self.tags == other.tags
            and self.terms == other.terms
        )

    def __hash__(self):  # pragma: no cover
        raise TypeError("TensorComb is not hashable")

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda it: (it[0][0].key, it[0][1].key))

    def map_left(self, fn: Callable[[DecoratedForest], LinComb], tag: SpaceTag) -> "TensorComb":
        out = TensorComb(tag, self.right_tag)
        for (l, r), c in self.terms.items():
            for g, c2 in fn(l).terms.items():
                out.add_term(g, r, c * c2)
        return out

    def map_right(self, fn: Callable[[DecoratedForest], LinComb], tag: SpaceTag) -> "TensorComb":
        out = TensorComb(self.left_tag, tag)
        for (l, r), c in self.terms.items():
            for g, c2 in fn(r).terms.items():
                out.add_term(l, g, c * c2)
        return out

    def __repr__(self) -> str:
        from .grammar import print_forest

        if not self.terms:
            return f"<0 :{self.left_tag.value}(x){self.right_tag.value}>"
        bits = [
            f"{c}*{print_forest(l)} (x) {print_forest(r)}"
            for (l, r), c in self.sorted_terms()
        ]
        return "<" + " + ".join(bits) + f" :{self.left_tag.value}(x){self.right_tag.value}>"


class TripleComb:
    """Q-linear combination of forest triples (cointeraction residuals)."""

    __slots__ = ("terms", "tags")

    def __init__(self, tags: tuple[SpaceTag, SpaceTag, SpaceTag],
                 terms: Mapping[tuple[DecoratedForest, ...], Fraction] | None = None):
        self.tags = tags
        self.terms: dict[tuple[DecoratedForest, ...], Fraction] = {}
        if terms:
            for k, c in terms.items():
                if c:
                    self.terms[k] = self.terms.get(k, Fraction(0)) + Fraction(c)
            self.terms = {k: c for k, c in self.terms.items() if c}

    def add_term(self, key: tuple[DecoratedForest, ...], coeff: Fraction) -> None:
        c = self.terms.get(key, Fraction(0)) + coeff
        if c:
            self.terms[key] = c
        else:
            self.terms.pop(key, None)

    def __sub__(self, other: "TripleComb") -> "TripleComb":
        out = TripleComb(self.tags, self.terms)
        for k, c in other.terms.items():
            out.add_term(k, -c)
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda it: tuple(f.key for f in it[0]))


# ---------------------------------------------------------------------------
# Sector normal forms.
#
# All coproduct outputs pass through these.  The conventions:
#   * tree sectors: a bare coloured node with no extended label is the same
#     basis vector as the bare uncoloured node (so X^k has one canonical
#     representative in every sector);
#   * forest sectors: isolated extraction-marked nodes lose their extended
#     label (only the total polynomial decoration survives a full collapse),
#     and bare nodes with no polynomial decoration are the unit.
# ---------------------------------------------------------------------------


def nf_tree(forest: DecoratedForest) -> DecoratedForest:
    """Normal form in the tree sectors (contract; identify bare units)."""
    f = contract(forest)
    if f.is_empty:
        return single_node(f.d)
    if f.n == 1 and f.odec[0].is_zero() and f.ncol[0] != 0:
        return single_node(f.d, 0, f.ndec[0])
    return f


def nf_minus(forest: DecoratedForest) -> DecoratedForest:
    """Normal form in the forest sectors."""
    f = contract(forest)
    d = f.d
    drop: list[int] = []
    fix: list[int] = []
    for comp in f.component_nodes():
        if len(comp) != 1:
            continue
        (v,) = comp
        if f.ncol[v] == 1 and not f.odec[v].is_zero():
            fix.append(v)
        if not any(f.ndec[v]) and (f.ncol[v] != 0 or f.odec[v].is_zero()):
            drop.append(v)
    if not drop and not fix:
        return f
    spec = []
    pos: dict[int, int] = {}
    dropset = set(drop)
    fixset = set(fix)
    for v in range(f.n):
        if v in dropset:
            continue
        pos[v] = len(spec)
        p = f.parent[v]
        s = f.node_spec(v, pos[p] if p >= 0 else -1)
        if v in fixset:
            from .degrees import ExtendedLabel

            s = (s[0], s[1], s[2], ExtendedLabel.zero(d), s[4], s[5], s[6])
        spec.append(s)
    return make_forest(d, spec)


def nf_plus(tree: DecoratedForest) -> DecoratedForest:
    """Normal form in the recentering sectors: contract, root colour 2, label
    erased at the root, the bare coloured node identified with X^k."""
    from .degrees import ExtendedLabel

    f = contract(tree)
    if f.is_empty:
        return single_node(f.d)
    f = join_roots(f)
    r = f.roots()[0]
    if f.ncol[r] == 1:
        raise StructuralError("extraction-marked root in the recentering sector")
    if f.n == 1:
        return single_node(f.d, 0, f.ndec[0])
    if f.ncol[r] != 2 or not f.odec[r].is_zero():
        spec = f.nodes_spec()
        p, _, ndec, _, etype, ecol, edec = spec[r]
        spec[r] = (p, 2, ndec, ExtendedLabel.zero(f.d), etype, ecol, edec)
        f = make_forest(f.d, spec)
    return f


def nf_for_tag(tag: SpaceTag) -> Callable[[DecoratedForest], DecoratedForest]:
    if tag in MINUS_TAGS:
        return nf_minus
    if tag in PLUS_TAGS:
        return nf_plus
    if tag in (SpaceTag.T_EX, SpaceTag.H_CIRC, SpaceTag.T_RED):
        return nf_tree
    return lambda f: f


# ---------------------------------------------------------------------------
# Degree-based sector filters (the ideal quotients) and projections.
# ---------------------------------------------------------------------------


def component_minus_ok(comp: DecoratedForest, scaling: Scaling) -> bool:
    """A forest component survives the negative-sector quotient iff its
    colour-blind degree is negative and it is not planted with a trunk of
    positive-degree type."""
    if not degree_minus(comp, scaling).is_negative():
        return False
    t = planted_trunk_type(comp)
    if t is not None and scaling.type_degree(t).is_positive():
        return False
    return True


def minus_projects_to_zero(forest: DecoratedForest, scaling: Scaling) -> bool:
    return any(
        not component_minus_ok(c, scaling) for c in forest.component_forests()
    )


def plus_factor_degree(tree: DecoratedForest, etype: str, edec, sub,
                       scaling: Scaling) -> Degree:
    return degree_plus(sub, scaling) + scaling.type_degree(etype) - Degree(
        scaling.mi_degree(edec)
    )


def plus_projects_to_zero(tree: DecoratedForest, scaling: Scaling) -> bool:
    """True iff some planted root factor has nonpositive degree."""
    if tree.is_empty or tree.n == 1:
        return False
    for etype, edec, sub in root_branches(tree):
        if not plus_factor_degree(tree, etype, edec, sub, scaling).is_positive():
            return True
    return False


_PROJECTIONS: dict[tuple[SpaceTag, SpaceTag], str] = {}


def project(x: LinComb, target: SpaceTag, scaling: Scaling) -> LinComb:
    """Project or inject between compatible sectors.

    Projections drop the basis vectors generating the respective ideals
    (negative sector: any component of nonnegative colour-blind degree or
    planted with positive trunk type; positive sector: any planted root factor
    of nonpositive degree).  Injections re-tag without change.
    """
    src = x.tag
    if src is target:
        return x.copy()
    out = LinComb.zero(target)
    if target is SpaceTag.T_MINUS_EX and src in (SpaceTag.FREE_MINUS_HAT, SpaceTag.H_1,
                                                 SpaceTag.T_MINUS_RED):
        for f, c in x.terms.items():
            if not minus_projects_to_zero(f, scaling):
                out.add_term(f, c)
        return out
    if target is SpaceTag.T_PLUS_EX and src in (SpaceTag.FREE_PLUS_HAT, SpaceTag.H_HAT2):
        for f, c in x.terms.items():
            if not plus_projects_to_zero(f, scaling):
                out.add_term(f, c)
        return out
    injections = {
        (SpaceTag.T_MINUS_EX, SpaceTag.FREE_MINUS_HAT),
        (SpaceTag.T_MINUS_EX, SpaceTag.H_1),
        (SpaceTag.T_PLUS_EX, SpaceTag.FREE_PLUS_HAT),
        (SpaceTag.T_PLUS_EX, SpaceTag.H_HAT2),
        (SpaceTag.T_EX, SpaceTag.H_CIRC),
        (SpaceTag.T_RED, SpaceTag.T_EX),
        (SpaceTag.FREE_MINUS_HAT, SpaceTag.H_1),
        (SpaceTag.FREE_PLUS_HAT, SpaceTag.H_HAT2),
    }
    if (src, target) in injections:
        for f, c in x.terms.items():
            out.add_term(f, c)
        return out
    raise SpaceError(f"no projection from {src.value} to {target.value}")


def iota_circ(x: LinComb) -> LinComb:
    """The canonical injection of the tree sector into the free negative
    algebra: a tree becomes the single-generator forest."""
    if x.tag not in (SpaceTag.T_EX, SpaceTag.H_CIRC):
        raise SpaceError("iota_circ expects a tree-sector combination")
    out = LinComb.zero(SpaceTag.FREE_MINUS_HAT)
    for f, c in x.terms.items():
        out.add_term(nf_minus(f), c)
    return out


def unit(tag: SpaceTag, d: int) -> DecoratedForest:
    if tag in FOREST_TAGS:
        return empty_forest(d)
    return single_node(d)


def counit_value(tag: SpaceTag, f: DecoratedForest) -> Fraction:
    """Indicator of the unit basis vector in the given sector."""
    return Fraction(1) if f == unit(tag, f.d) else Fraction(0)


def counit(x: LinComb) -> Fraction:
    tot = Fraction(0)
    for f, c in x.terms.items():
        tot += c * counit_value(x.tag, f)
    return tot


def lincomb_product(x: LinComb, y: LinComb) -> LinComb:
    """Sector product: forest product in forest sectors, root join in tree
    sectors (with the appropriate normal form applied)."""
    if x.tag is not y.tag:
        raise SpaceError("product across different sectors")
    tag = x.tag
    nf = nf_for_tag(tag)
    out = LinComb.zero(tag)
    for f, c in x.terms.items():
        for g, c2 in y.terms.items():
            if tag in FOREST_TAGS:
                out.add_term(nf(forest_product(f, g)), c * c2)
            else:
                out.add_term(nf(join_roots(forest_product(f, g))), c * c2)
    return out
