"""Antipodes, twisted antipodes, characters and their group structure.

Characters store values on free generators only (components in the forest
sectors; polynomial directions and positive planted trees in the recentering
sector) and evaluate on arbitrary basis vectors through the unique
factorisation.  Scalars are any exact commutative ring: plain rationals or
polynomial expressions.
"""

from __future__ import annotations

import hashlib
import threading
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

from .comb import (
    LinComb,
    SpaceError,
    SpaceTag,
    TensorComb,
    lincomb_product,
    nf_minus,
    nf_plus,
    nf_tree,
    plus_projects_to_zero,
    project,
)
from .coalgebra import delta_minus_ex, delta_plus_ex, delta2_recursive
from .degrees import (
    Degree,
    Scaling,
    mi_add,
    mi_factorial,
    mi_iter_budget,
    mi_len,
    mi_unit,
    mi_zero,
)
from .forest import (
    DecoratedForest,
    degree_plus,
    empty_forest,
    forest_product,
    integ,
    jhat,
    root_branches,
    single_node,
    xpow,
)
from .grammar import print_forest


class CharacterError(ValueError):
    """Missing generator value or incompatible character spaces."""


def plus_generators(tree: DecoratedForest) -> list[tuple[DecoratedForest, int]]:
    """Factor a recentering-sector basis tree into its free generators:
    polynomial directions with multiplicity and planted subtrees."""
    gens: list[tuple[DecoratedForest, int]] = []
    if tree.is_empty or tree.n == 0:
        return gens
    r = tree.roots()[0]
    d = tree.d
    for i, mult in enumerate(tree.ndec[r]):
        if mult:
            gens.append((xpow(d, mi_unit(d, i + 1)), mult))
    for etype, edec, sub in root_branches(tree):
        gens.append((integ(etype, edec, sub), 1))
    return gens


def minus_generators(forest: DecoratedForest) -> list[tuple[DecoratedForest, int]]:
    """Factor a forest-sector basis vector into its component generators."""
    out: dict[DecoratedForest, int] = {}
    for comp in forest.component_forests():
        out[comp] = out.get(comp, 0) + 1
    return sorted(out.items(), key=lambda it: it[0].key)


class Character:
    """A multiplicative functional determined by generator values.

    ``values`` maps generator forests to scalars; ``fallback`` (if given)
    supplies values for generators outside the table, otherwise a missing
    generator raises naming the tree.
    """

    __slots__ = ("space", "values", "fallback", "_memo", "_lock")

    def __init__(self, space: SpaceTag, values: Mapping[DecoratedForest, object] | None = None,
                 fallback: Optional[Callable[[DecoratedForest], object]] = None):
        if space not in (SpaceTag.T_MINUS_EX, SpaceTag.T_PLUS_EX, SpaceTag.FREE_MINUS_HAT,
                         SpaceTag.T_MINUS_RED):
            raise CharacterError(f"characters are not implemented on {space.value}")
        self.space = space
        self.values = dict(values or {})
        self.fallback = fallback
        self._memo: dict[DecoratedForest, object] = {}
        self._lock = threading.Lock()

    def generator_value(self, gen: DecoratedForest):
        if gen in self.values:
            return self.values[gen]
        if self.fallback is not None:
            with self._lock:
                if gen not in self._memo:
                    self._memo[gen] = self.fallback(gen)
                return self._memo[gen]
        raise CharacterError(f"character has no value on generator {print_forest(gen)}")

    def eval_forest(self, forest: DecoratedForest):
        if self.space in (SpaceTag.T_MINUS_EX, SpaceTag.FREE_MINUS_HAT, SpaceTag.T_MINUS_RED):
            gens = minus_generators(forest)
        else:
            gens = plus_generators(forest)
        out: object = Fraction(1)
        for g, mult in gens:
            v = self.generator_value(g)
            for _ in range(mult):
                out = out * v
        return out

    def eval(self, x: LinComb):
        out: object = Fraction(0)
        for f, c in x.sorted_terms():
            out = out + c * self.eval_forest(f)
        return out

    def known_values(self) -> dict[DecoratedForest, object]:
        with self._lock:
            return {**self.values, **self._memo}


def counit_character(space: SpaceTag) -> Character:
    return Character(space, fallback=lambda gen: Fraction(0))


def seeded_character(space: SpaceTag, seed: int, span: int = 7) -> Character:
    """Deterministic pseudo-random rational character: the value on a
    generator depends only on (seed, canonical key), so results never depend
    on evaluation order or thread scheduling."""

    def fallback(gen: DecoratedForest):
        h = hashlib.sha256(seed.to_bytes(8, "big", signed=True) + gen.key).digest()
        num = int.from_bytes(h[:4], "big") % (2 * span + 1) - span
        den = int.from_bytes(h[4:8], "big") % span + 1
        return Fraction(num, den)

    return Character(space, fallback=fallback)


# ---------------------------------------------------------------------------
# Antipodes
# ---------------------------------------------------------------------------

_ANTI_LOCK = threading.Lock()
_ANTI_MINUS: dict[tuple, LinComb] = {}
_ANTI_PLUS: dict[tuple, LinComb] = {}
_TWISTED_MINUS: dict[tuple, LinComb] = {}
_TWISTED_PLUS: dict[tuple, LinComb] = {}


def antipode(space: SpaceTag, x: LinComb, scaling: Scaling,
             max_poly: Optional[int] = None) -> LinComb:
    """The antipode of the named Hopf algebra.

    On the projected sectors the defining recursions terminate by themselves;
    on the unprojected recentering algebra the polynomial sum is infinite and
    ``max_poly`` bounds the unscaled polynomial decoration."""
    if x.tag is not space:
        raise SpaceError(f"combination tagged {x.tag.value}, expected {space.value}")
    if space is SpaceTag.T_MINUS_EX:
        return x.map_basis(lambda f: _antipode_minus_forest(f, scaling), space)
    if space is SpaceTag.T_PLUS_EX:
        return x.map_basis(lambda f: _antipode_plus_tree(f, scaling, None), space)
    if space is SpaceTag.H_HAT2:
        if max_poly is None:
            raise ValueError("the unprojected antipode needs a polynomial truncation")
        return x.map_basis(lambda f: _antipode_plus_tree(f, scaling, max_poly), SpaceTag.H_HAT2)
    raise SpaceError(f"no antipode on {space.value}")


def _antipode_minus_forest(f: DecoratedForest, scaling: Scaling) -> LinComb:
    out = LinComb.basis(SpaceTag.T_MINUS_EX, empty_forest(f.d))
    for comp, mult in minus_generators(f):
        a = _antipode_minus_tree(comp, scaling)
        for _ in range(mult):
            out = lincomb_product(out, a)
    return out


def _antipode_minus_tree(tree: DecoratedForest, scaling: Scaling) -> LinComb:
    key = (tree, scaling)
    with _ANTI_LOCK:
        hit = _ANTI_MINUS.get(key)
    if hit is not None:
        return hit
    d = tree.d
    unit = empty_forest(d)
    if tree == unit:
        return LinComb.basis(SpaceTag.T_MINUS_EX, unit)
    x = LinComb.basis(SpaceTag.T_MINUS_EX, tree)
    delta = delta_minus_ex(x, scaling)
    acc = LinComb.basis(SpaceTag.T_MINUS_EX, tree, -1)
    for (l, r), c in delta.sorted_terms():
        if r == tree and l == unit:
            continue
        if l == tree and r == unit:
            continue
        contrib = _antipode_minus_forest(l, scaling)
        for g, c2 in contrib.terms.items():
            acc.add_term(nf_minus(forest_product(g, r)), -c * c2)
    with _ANTI_LOCK:
        _ANTI_MINUS[key] = acc
    return acc


def _antipode_plus_tree(tree: DecoratedForest, scaling: Scaling,
                        max_poly: Optional[int]) -> LinComb:
    """Multiplicative extension over the root factorisation (projected when
    ``max_poly`` is None, truncated un-projected otherwise)."""
    tag = SpaceTag.T_PLUS_EX if max_poly is None else SpaceTag.H_HAT2
    out = LinComb.basis(tag, single_node(tree.d))
    r = tree.roots()[0] if not tree.is_empty else None
    if r is None:
        return out
    d = tree.d
    for i, mult in enumerate(tree.ndec[r]):
        for _ in range(mult):
            out = lincomb_product(out, LinComb.basis(tag, xpow(d, mi_unit(d, i + 1)), -1))
    for etype, edec, sub in root_branches(tree):
        g = _antipode_plus_gen(etype, edec, sub, scaling, max_poly)
        out = lincomb_product(out, g)
    return out


def _antipode_plus_gen(etype: str, edec, sub: DecoratedForest, scaling: Scaling,
                       max_poly: Optional[int]) -> LinComb:
    key = (etype, edec, sub, scaling, max_poly)
    cache = _ANTI_PLUS
    with _ANTI_LOCK:
        hit = cache.get(key)
    if hit is not None:
        return hit
    d = sub.d
    tag = SpaceTag.T_PLUS_EX if max_poly is None else SpaceTag.H_HAT2
    if max_poly is None:
        delta = delta_plus_ex(LinComb.basis(SpaceTag.T_EX, sub), scaling)
    else:
        delta = delta2_recursive(LinComb.basis(SpaceTag.T_EX, sub), scaling,
                                 max_poly=max_poly, project_right=False)
    acc = LinComb.zero(tag)
    if max_poly is None:
        budget = (degree_plus(sub, scaling) + scaling.type_degree(etype)
                  - Degree(scaling.mi_degree(edec))).a
        ells = list(mi_iter_budget(d, scaling.s, budget))
    else:
        ells = list(mi_iter_budget(d, [Fraction(1)] * d, Fraction(max_poly)))
    for ell in ells:
        k2 = mi_add(edec, ell)
        for (l, rr), c in delta.sorted_terms():
            planted = nf_plus(jhat(etype, k2, l))
            if max_poly is None and plus_projects_to_zero(planted, scaling):
                continue
            rec = _antipode_plus_tree(rr, scaling, max_poly)
            coeff = Fraction((-1) ** mi_len(ell), mi_factorial(ell))
            for g, c2 in rec.terms.items():
                prod = nf_plus(forest_product(forest_product(planted, g), xpow(d, ell)))
                prod = nf_plus(_join(prod))
                acc.add_term(prod, -c * c2 * coeff)
    with _ANTI_LOCK:
        cache[key] = acc
    return acc


def _join(f: DecoratedForest) -> DecoratedForest:
    from .forest import join_roots

    return join_roots(f)


# ---------------------------------------------------------------------------
# Twisted antipodes
# ---------------------------------------------------------------------------


def twisted_antipode(sign: str, x: LinComb, scaling: Scaling) -> LinComb:
    """The one-sided antipodes into the unprojected algebras.

    ``minus``: the extraction-side morphism (the BPHZ subtraction); values in
    the free negative algebra.  ``plus``: the recentering-side morphism with
    the positivity filter applied outside the product (Taylor remainders);
    values in the unprojected recentering algebra."""
    if sign == "minus":
        if x.tag is not SpaceTag.T_MINUS_EX:
            raise SpaceError("the negative twisted antipode lives on the negative sector")
        return x.map_basis(lambda f: _twisted_minus_forest(f, scaling), SpaceTag.FREE_MINUS_HAT)
    if sign == "plus":
        if x.tag is not SpaceTag.T_PLUS_EX:
            raise SpaceError("the positive twisted antipode lives on the positive sector")
        return x.map_basis(lambda f: _twisted_plus_tree(f, scaling), SpaceTag.FREE_PLUS_HAT)
    raise ValueError("sign must be 'plus' or 'minus'")


def _twisted_minus_forest(f: DecoratedForest, scaling: Scaling) -> LinComb:
    out = LinComb.basis(SpaceTag.FREE_MINUS_HAT, empty_forest(f.d))
    for comp, mult in minus_generators(f):
        a = _twisted_minus_tree(comp, scaling)
        for _ in range(mult):
            out = lincomb_product(out, a)
    return out


def _twisted_minus_tree(tree: DecoratedForest, scaling: Scaling) -> LinComb:
    key = (tree, scaling)
    with _ANTI_LOCK:
        hit = _TWISTED_MINUS.get(key)
    if hit is not None:
        return hit
    d = tree.d
    unit = empty_forest(d)
    if tree == unit:
        return LinComb.basis(SpaceTag.FREE_MINUS_HAT, unit)
    x = LinComb.basis(SpaceTag.FREE_MINUS_HAT, tree)
    delta = delta_minus_ex(x, scaling)
    acc = LinComb.zero(SpaceTag.FREE_MINUS_HAT)
    for (l, r), c in delta.sorted_terms():
        if l == tree and r == unit:
            continue
        contrib = _twisted_minus_forest(l, scaling)
        for g, c2 in contrib.terms.items():
            acc.add_term(nf_minus(forest_product(g, r)), -c * c2)
    with _ANTI_LOCK:
        _TWISTED_MINUS[key] = acc
    return acc


def _twisted_plus_tree(tree: DecoratedForest, scaling: Scaling) -> LinComb:
    """Multiplicative extension of the positive twisted antipode."""
    out = LinComb.basis(SpaceTag.FREE_PLUS_HAT, single_node(tree.d))
    if tree.is_empty:
        return out
    r = tree.roots()[0]
    d = tree.d
    for i, mult in enumerate(tree.ndec[r]):
        for _ in range(mult):
            out = lincomb_product(
                out, LinComb.basis(SpaceTag.FREE_PLUS_HAT, xpow(d, mi_unit(d, i + 1)), -1)
            )
    for etype, edec, sub in root_branches(tree):
        out = lincomb_product(out, _twisted_plus_gen(etype, edec, sub, scaling))
    return out


def _twisted_plus_gen(etype: str, edec, sub: DecoratedForest, scaling: Scaling) -> LinComb:
    key = (etype, edec, sub, scaling)
    with _ANTI_LOCK:
        hit = _TWISTED_PLUS.get(key)
    if hit is not None:
        return hit
    d = sub.d
    delta = delta_plus_ex(LinComb.basis(SpaceTag.T_EX, sub), scaling)
    budget = (degree_plus(sub, scaling) + scaling.type_degree(etype)
              - Degree(scaling.mi_degree(edec))).a
    acc = LinComb.zero(SpaceTag.FREE_PLUS_HAT)
    for ell in mi_iter_budget(d, scaling.s, budget):
        k2 = mi_add(edec, ell)
        inner = LinComb.zero(SpaceTag.FREE_PLUS_HAT)
        for (l, rr), c in delta.sorted_terms():
            planted = nf_plus(jhat(etype, k2, l))
            rec = _twisted_plus_tree(rr, scaling)
            for g, c2 in rec.terms.items():
                inner.add_term(nf_plus(_join(forest_product(planted, g))), c * c2)
        # positivity filter outside the product
        coeff = Fraction((-1) ** mi_len(ell), mi_factorial(ell))
        for g, c in inner.terms.items():
            if degree_plus(g, scaling).is_positive():
                acc.add_term(nf_plus(_join(forest_product(g, xpow(d, ell)))), -c * coeff)
    with _ANTI_LOCK:
        _TWISTED_PLUS[key] = acc
    return acc


# ---------------------------------------------------------------------------
# Convolution and the groups
# ---------------------------------------------------------------------------


def _coproduct_for(space: SpaceTag, gen: DecoratedForest, scaling: Scaling) -> TensorComb:
    if space is SpaceTag.T_MINUS_EX:
        return delta_minus_ex(LinComb.basis(space, gen), scaling)
    if space is SpaceTag.T_PLUS_EX:
        return delta_plus_ex(LinComb.basis(space, gen), scaling)
    raise SpaceError(f"no convolution coproduct on {space.value}")


def char_convolve(space: SpaceTag, f: Character, g: Character, scaling: Scaling) -> Character:
    """(f * g)(tau) = (f (x) g) Delta tau, evaluated lazily on generators."""
    if f.space is not space or g.space is not space:
        raise CharacterError("character space mismatch in convolution")

    def value(gen: DecoratedForest):
        out: object = Fraction(0)
        for (l, r), c in _coproduct_for(space, gen, scaling).sorted_terms():
            out = out + c * (f.eval_forest(l) * g.eval_forest(r))
        return out

    return Character(space, fallback=value)


def char_inverse(space: SpaceTag, f: Character, scaling: Scaling) -> Character:
    """f^{-1}(tau) = f(antipode(tau))."""
    if f.space is not space:
        raise CharacterError("character space mismatch in inversion")

    def value(gen: DecoratedForest):
        return f.eval(antipode(space, LinComb.basis(space, gen), scaling))

    return Character(space, fallback=value)


def char_act(g: Character, f: Character, scaling: Scaling) -> Character:
    """The extraction group acting on the recentering group:
    (g f)(tau) = (g (x) f) Delta^- tau on the positive sector."""
    if g.space is not SpaceTag.T_MINUS_EX or f.space is not SpaceTag.T_PLUS_EX:
        raise CharacterError("the action pairs a negative with a positive character")

    def value(gen: DecoratedForest):
        out: object = Fraction(0)
        x = LinComb.basis(SpaceTag.T_PLUS_EX, gen)
        for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
            out = out + c * (g.eval_forest(l) * f.eval_forest(r))
        return out

    return Character(SpaceTag.T_PLUS_EX, fallback=value)


def semidirect_mul(pair1: tuple[Character, Character], pair2: tuple[Character, Character],
                   scaling: Scaling) -> tuple[Character, Character]:
    """(g1, f1)(g2, f2) = (g1 g2, f1 (g1 f2))."""
    g1, f1 = pair1
    g2, f2 = pair2
    g = char_convolve(SpaceTag.T_MINUS_EX, g1, g2, scaling)
    f = char_convolve(SpaceTag.T_PLUS_EX, f1, char_act(g1, f2, scaling), scaling)
    return (g, f)


def semidirect_inverse(pair: tuple[Character, Character],
                       scaling: Scaling) -> tuple[Character, Character]:
    g, f = pair
    ginv = char_inverse(SpaceTag.T_MINUS_EX, g, scaling)
    finv = char_inverse(SpaceTag.T_PLUS_EX, f, scaling)
    return (ginv, char_act(ginv, finv, scaling))


def clear_caches() -> None:
    with _ANTI_LOCK:
        _ANTI_MINUS.clear()
        _ANTI_PLUS.clear()
        _TWISTED_MINUS.clear()
        _TWISTED_PLUS.clear()
