"""Renormalisation: the extraction group acting on the model sector, the BPHZ
character of a valuation, centering residuals, and the reduced structure with
its embedding back into the extended one.

Valuations assign exact scalars (rationals or polynomial expressions in
formal constants) to the tree generators; the algebraic identities verified
here hold for arbitrary such assignments.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

import sympy

from .comb import (
    LinComb,
    SpaceError,
    SpaceTag,
    TensorComb,
    component_minus_ok,
    lincomb_product,
    nf_minus,
    nf_plus,
    nf_tree,
)
from .coalgebra import delta_minus_ex, delta_plus_ex
from .degrees import (
    Degree,
    ExtendedLabel,
    Scaling,
    mi_add,
    mi_factorial,
    mi_iter_budget,
    mi_len,
    mi_zero,
)
from .forest import (
    DecoratedForest,
    contract,
    degree_minus,
    degree_plus,
    degree_s,
    empty_forest,
    forest_product,
    integ,
    join_roots,
    make_forest,
    planted_trunk_type,
    root_branches,
    single_node,
    xpow,
)
from .grammar import print_forest
from .hopf import Character, CharacterError, minus_generators, twisted_antipode


class Valuation:
    """Scalar assignment on tree generators (the algebraic stand-in for the
    expectation of a model at the origin), with multiplicative lift to the
    free negative algebra."""

    def __init__(self, values: Mapping[DecoratedForest, object] | None = None,
                 fallback: Optional[Callable[[DecoratedForest], object]] = None):
        self.values = dict(values or {})
        self.fallback = fallback
        self._memo: dict[DecoratedForest, object] = {}
        self._lock = threading.Lock()

    @staticmethod
    def symbolic(prefix: str = "c") -> "Valuation":
        """Formal constants: each generator gets its own polynomial symbol."""

        def fb(gen: DecoratedForest):
            return sympy.Symbol(f"{prefix}[{print_forest(gen)}]")

        return Valuation(fallback=fb)

    @staticmethod
    def seeded(seed: int, span: int = 7) -> "Valuation":
        import hashlib

        def fb(gen: DecoratedForest):
            h = hashlib.sha256(seed.to_bytes(8, "big", signed=True) + gen.key).digest()
            num = int.from_bytes(h[:4], "big") % (2 * span + 1) - span
            den = int.from_bytes(h[4:8], "big") % span + 1
            return Fraction(num, den)

        return Valuation(fallback=fb)

    def value(self, gen: DecoratedForest):
        if gen in self.values:
            return self.values[gen]
        if self.fallback is not None:
            with self._lock:
                if gen not in self._memo:
                    self._memo[gen] = self.fallback(gen)
                return self._memo[gen]
        raise CharacterError(f"valuation has no value on generator {print_forest(gen)}")

    def lift(self) -> Character:
        """The multiplicative character on the free negative algebra."""
        return Character(SpaceTag.FREE_MINUS_HAT, fallback=self.value)


def renorm_map(g: Character, x: LinComb, scaling: Scaling) -> LinComb:
    """The renormalisation action: evaluate the extraction character on the
    left leg of the extraction coproduct."""
    if g.space is not SpaceTag.T_MINUS_EX:
        raise SpaceError("renormalisation characters live on the negative sector")
    if x.tag not in (SpaceTag.T_EX, SpaceTag.T_PLUS_EX):
        raise SpaceError("renormalisation acts on the model or positive sector")
    acc: dict[DecoratedForest, object] = {}
    for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
        v = g.eval_forest(l)
        term = c * v
        if term == 0:
            continue
        acc[r] = acc.get(r, 0) + term
    if not all(isinstance(v, (int, Fraction)) for v in acc.values()):
        raise SpaceError("renorm_map with symbolic characters: use renorm_map_symbolic")
    out = LinComb.zero(x.tag)
    for f, v in acc.items():
        if v:
            out.add_term(f, Fraction(v))
    return out


def renorm_map_symbolic(g: Character, x: LinComb, scaling: Scaling):
    """As :func:`renorm_map` but returning ``{forest: scalar}`` so symbolic
    character values can flow through."""
    acc: dict[DecoratedForest, object] = {}
    for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
        v = g.eval_forest(l)
        term = c * v
        if term == 0 or (hasattr(term, "is_zero") and term.is_zero):
            continue
        cur = acc.get(r, 0)
        acc[r] = cur + term
    return {f: sympy.expand(v) if isinstance(v, sympy.Expr) else v
            for f, v in acc.items()
            if not (isinstance(v, sympy.Expr) and sympy.expand(v) == 0) and v != 0}


def bphz_character(val: Valuation, scaling: Scaling) -> Character:
    """The renormalising character of a valuation: the multiplicative lift
    composed with the negative twisted antipode, restricted to the free
    generators of the negative sector."""
    lifted = val.lift()

    def value(gen: DecoratedForest):
        t = twisted_antipode("minus", LinComb.basis(SpaceTag.T_MINUS_EX, gen), scaling)
        out: object = Fraction(0)
        for f, c in t.sorted_terms():
            out = out + c * lifted.eval_forest(f)
        if isinstance(out, sympy.Expr):
            out = sympy.expand(out)
        return out

    return Character(SpaceTag.T_MINUS_EX, fallback=value)


def bphz_centering_residual(val: Valuation, scaling: Scaling,
                            trees: Iterable[DecoratedForest]) -> dict[DecoratedForest, object]:
    """For each tree, the pairing of the renormalising character with the
    multiplicative lift across the extraction coproduct; identically zero by
    the defining one-sided antipode identity (the algebraic half of the
    centering theorem)."""
    g = bphz_character(val, scaling)
    lifted = val.lift()
    out: dict[DecoratedForest, object] = {}
    for tau in trees:
        x = LinComb.basis(SpaceTag.FREE_MINUS_HAT, nf_minus(tau))
        total: object = Fraction(0)
        for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
            total = total + c * (g.eval_forest(l) * lifted.eval_forest(r))
        if isinstance(total, sympy.Expr):
            total = sympy.expand(total)
        out[tau] = total
    return out


def bphz_uniqueness_witness(g: Character, val: Valuation, scaling: Scaling,
                            sharp_trees: list[DecoratedForest]):
    """The constructive non-centering witness: for a non-trivial extraction
    character, some negative generator keeps a nonzero centered value after
    twisting the model by it.

    The centered value of a negative tree is taken as zero (that is the
    centering theorem; for planted generators this includes its analytic
    half), so the residual of the twisted model on a generator reduces to a
    finite, exactly computable sum.  Returns ``(tree, residual)`` or ``None``.
    """
    bphz = bphz_character(val, scaling)
    lifted = val.lift()

    def centered(sigma: DecoratedForest):
        if degree_minus(sigma, scaling).is_negative():
            return Fraction(0)
        total: object = Fraction(0)
        x = LinComb.basis(SpaceTag.FREE_MINUS_HAT, sigma)
        for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
            total = total + c * (bphz.eval_forest(l) * lifted.eval_forest(r))
        return total

    order = sorted(
        sharp_trees,
        key=lambda t: (degree_minus(t, scaling).key(), t.uncoloured_edge_count(), t.key),
    )
    for tau in order:
        x = LinComb.basis(SpaceTag.FREE_MINUS_HAT, nf_minus(tau))
        total: object = Fraction(0)
        for (l, r), c in delta_minus_ex(x, scaling).sorted_terms():
            gl = g.eval_forest(l)
            if gl == 0:
                continue
            total = total + c * gl * _centered_forest(r, centered)
        if isinstance(total, sympy.Expr):
            total = sympy.expand(total)
        if total != 0:
            return tau, total
    return None


def _centered_forest(forest: DecoratedForest, centered):
    out: object = Fraction(1)
    for comp, mult in minus_generators(forest):
        v = centered(comp)
        for _ in range(mult):
            out = out * v
        if out == 0:
            return out
    return out


# ---------------------------------------------------------------------------
# The reduced sector
# ---------------------------------------------------------------------------


def q_map(forest: DecoratedForest) -> DecoratedForest:
    """Erase extraction marks: contract, drop colour-1 marks and all extended
    labels (the recentering colour survives)."""
    f = contract(forest)
    d = f.d
    spec = []
    for v in range(f.n):
        p, ncol, ndec, _, etype, ecol, edec = f.node_spec(v, f.parent[v])
        spec.append((p, 0 if ncol == 1 else ncol, ndec, ExtendedLabel.zero(d),
                     etype, ecol, edec))
    return make_forest(d, spec)


def reduce_element(x: LinComb) -> LinComb:
    """Project onto the reduced sector (idempotent; preserves the colour-blind
    degree but not the label-aware one)."""
    if x.tag in (SpaceTag.T_EX, SpaceTag.H_CIRC, SpaceTag.T_RED):
        return x.map_basis(
            lambda f: LinComb.basis(SpaceTag.T_RED, nf_tree(q_map(f))), SpaceTag.T_RED
        )
    if x.tag in (SpaceTag.T_PLUS_EX, SpaceTag.H_HAT2, SpaceTag.FREE_PLUS_HAT,
                 SpaceTag.T_PLUS_RED):
        return x.map_basis(
            lambda f: LinComb.basis(SpaceTag.T_PLUS_RED, nf_plus(q_map(f))),
            SpaceTag.T_PLUS_RED,
        )
    raise SpaceError(f"no reduced sector for {x.tag.value}")


def reduce_minus(x: LinComb, scaling: Scaling) -> LinComb:
    """The reduced negative sector: marks erased, then the ideal quotient
    applied again (erasing a mark can create a positive-trunk planted
    component, which dies)."""
    if x.tag not in (SpaceTag.T_MINUS_EX, SpaceTag.FREE_MINUS_HAT, SpaceTag.T_MINUS_RED):
        raise SpaceError("reduce_minus expects a negative-sector combination")
    out = LinComb.zero(SpaceTag.T_MINUS_RED)
    for f, c in x.terms.items():
        q = nf_minus(q_map(f))
        if any(not component_minus_ok(comp, scaling) for comp in q.component_forests()):
            continue
        out.add_term(q, c)
    return out


def delta_minus_reduced(x: LinComb, scaling: Scaling) -> TensorComb:
    """The coaction of the reduced negative sector on the reduced one."""
    if x.tag is not SpaceTag.T_RED:
        raise SpaceError("the reduced coaction expects the reduced sector")
    out = TensorComb(SpaceTag.T_MINUS_RED, SpaceTag.T_RED)
    for f, c in x.terms.items():
        ext = delta_minus_ex(LinComb.basis(SpaceTag.T_EX, f), scaling)
        for (l, r), c2 in ext.terms.items():
            lred = reduce_minus(LinComb.basis(SpaceTag.T_MINUS_EX, l), scaling)
            for lf, c3 in lred.terms.items():
                out.add_term(lf, nf_tree(q_map(r)), c * c2 * c3)
    return out


def check_reduced_character(g: Character, gens: Iterable[DecoratedForest],
                            scaling: Scaling) -> Optional[DecoratedForest]:
    """Membership of the extraction character in the reduced subgroup:
    g(tau) == g(Q tau) on generators.  Returns a violating generator or None."""
    for gen in gens:
        red = reduce_minus(LinComb.basis(SpaceTag.T_MINUS_EX, gen), scaling)
        lhs = g.eval_forest(gen)
        rhs: object = Fraction(0)
        for f, c in red.sorted_terms():
            rhs = rhs + c * g.eval_forest(f)
        diff = lhs - rhs
        if isinstance(diff, sympy.Expr):
            diff = sympy.expand(diff)
        if diff != 0:
            return gen
    return None


def reduced_character(val_on_reduced: Callable[[DecoratedForest], object]) -> Character:
    """An extraction character factoring through the mark erasure."""

    def value(gen: DecoratedForest):
        return val_on_reduced(nf_minus(q_map(gen)))

    return Character(SpaceTag.T_MINUS_EX, fallback=value)


# ---------------------------------------------------------------------------
# The embedding maps L and L_+
# ---------------------------------------------------------------------------


def jtilde(etype: str, k, tree: DecoratedForest, scaling: Scaling) -> LinComb:
    """The recentered planted basis: the planted tree corrected by polynomials
    below its degree."""
    d = tree.d
    g = degree_plus(tree, scaling) + scaling.type_degree(etype) - Degree(scaling.mi_degree(k))
    out = LinComb.zero(SpaceTag.T_PLUS_RED)
    for m in mi_iter_budget(d, scaling.s, g.a):
        if not (g - Degree(scaling.mi_degree(m))).is_positive():
            continue
        planted = nf_plus(integ(etype, mi_add(k, m), tree, root_colour=2))
        coeff = Fraction((-1) ** mi_len(m), mi_factorial(m))
        out.add_term(nf_plus(join_roots(forest_product(planted, xpow(d, m)))), coeff)
    return out


class LMaps:
    """The linear maps carrying reduced model data back to the extended
    structure.  The polynomial sum in the planted recursion is only
    constrained from below, so a truncation (a bound on the scaled polynomial
    degree) is required and reported."""

    def __init__(self, scaling: Scaling, truncation: Fraction):
        self.scaling = scaling
        self.truncation = Fraction(truncation)
        self._memo: dict[DecoratedForest, TensorComb] = {}

    def map_L(self, tree: DecoratedForest) -> TensorComb:
        hit = self._memo.get(tree)
        if hit is not None:
            return hit
        d = tree.d
        scaling = self.scaling
        out = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        r = tree.roots()[0]
        # mark-erasure invariance: strip the root mark
        if tree.ncol[r] == 1 or not tree.odec[r].is_zero():
            spec = tree.nodes_spec()
            p, _, ndec, _, etype, ecol, edec = spec[r]
            spec[r] = (p, 0, ndec, ExtendedLabel.zero(d), etype, ecol, edec)
            out = self.map_L(make_forest(d, spec))
            self._memo[tree] = out
            return out
        acc = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED,
                         {(xpow(d, tree.ndec[r]), single_node(d)): Fraction(1)})
        for etype, edec, sub in root_branches(tree):
            piece = self._L_branch(etype, edec, sub)
            acc = _tensor_mul(acc, piece)
        self._memo[tree] = acc
        return acc

    def _L_branch(self, etype: str, edec, sub: DecoratedForest) -> TensorComb:
        scaling = self.scaling
        d = sub.d
        out = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        if scaling.type_degree(etype).is_negative():
            plain = nf_tree(q_map(integ(etype, edec, sub)))
            out.add_term(plain, single_node(d), Fraction(1))
            return out
        inner = self.map_L(sub)
        for (l, rr), c in inner.terms.items():
            out.add_term(nf_tree(integ(etype, edec, l)), rr, c)
        qsub = nf_tree(q_map(sub))
        bound = degree_plus(sub, scaling) + scaling.type_degree(etype) - Degree(
            scaling.mi_degree(edec)
        )
        if bound.a > self.truncation:
            raise SpaceError(
                "polynomial truncation too small for the reachable degrees"
            )
        for m in mi_iter_budget(d, scaling.s, self.truncation):
            if Degree(scaling.mi_degree(m)) < bound:
                continue
            sub_terms = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
            for (l, rr), c in inner.terms.items():
                jt = jtilde(etype, mi_add(edec, m), l, scaling)
                for jfactor, c2 in jt.terms.items():
                    sub_terms.add_term(
                        xpow(d, m),
                        nf_plus(join_roots(forest_product(jfactor, rr))),
                        c * c2,
                    )
            coeff = Fraction(1, mi_factorial(m))
            for k, c in sub_terms.terms.items():
                out.add_term(k[0], k[1], -coeff * c)
        return out

    def map_L_plus(self, x: LinComb) -> LinComb:
        """The positive-side morphism; an algebra map determined on planted
        generators through the recentered basis."""
        if x.tag not in (SpaceTag.T_PLUS_EX, SpaceTag.T_PLUS_RED, SpaceTag.H_HAT2):
            raise SpaceError("map_L_plus expects a positive-sector combination")
        out = LinComb.zero(SpaceTag.T_PLUS_RED)
        for f, c in x.terms.items():
            img = self._Lplus_tree(f)
            for g, c2 in img.terms.items():
                out.add_term(g, c * c2)
        return out

    def _Lplus_tree(self, tree: DecoratedForest) -> LinComb:
        d = tree.d
        out = LinComb.basis(SpaceTag.T_PLUS_RED, xpow(d, tree.ndec[tree.roots()[0]]))
        for etype, edec, sub in root_branches(tree):
            gen = self._Lplus_gen(etype, edec, sub)
            out = lincomb_product(out, gen)
        return out

    def _Lplus_gen(self, etype: str, edec, sub: DecoratedForest) -> LinComb:
        """L_+ on a planted generator, through the recentered basis."""
        scaling = self.scaling
        d = sub.d
        g = degree_plus(sub, scaling) + scaling.type_degree(etype) - Degree(
            scaling.mi_degree(edec)
        )
        out = LinComb.zero(SpaceTag.T_PLUS_RED)
        inner = self.map_L(sub)
        for m in mi_iter_budget(d, scaling.s, g.a):
            if not (g - Degree(scaling.mi_degree(m))).is_positive():
                continue
            coeff = Fraction(1, mi_factorial(m))
            for (l, rr), c in inner.terms.items():
                jt = jtilde(etype, mi_add(edec, m), l, scaling)
                for jfactor, c2 in jt.terms.items():
                    out.add_term(
                        nf_plus(join_roots(forest_product(
                            join_roots(forest_product(jfactor, rr)), xpow(d, m)
                        ))),
                        coeff * c * c2,
                    )
        return out


def _tensor_mul(a: TensorComb, b: TensorComb) -> TensorComb:
    out = TensorComb(a.left_tag, a.right_tag)
    for (l1, r1), c1 in a.terms.items():
        for (l2, r2), c2 in b.terms.items():
            out.add_term(
                nf_tree(join_roots(forest_product(l1, l2))),
                nf_plus(join_roots(forest_product(r1, r2))),
                c1 * c2,
            )
    return out


def default_truncation(scaling: Scaling, trees: Iterable[DecoratedForest]) -> Fraction:
    """Truncation heuristic: the largest polynomial degree reachable in the
    corpus plus the largest kernel degree."""
    maxn = Fraction(0)
    for t in trees:
        tot = Fraction(0)
        for v in range(t.n):
            tot += scaling.mi_degree(t.ndec[v])
            if t.parent[v] >= 0:
                tot += scaling.mi_degree(t.edec[v])
        deg = degree_plus(t, scaling)
        maxn = max(maxn, tot, abs(deg.a))
    maxk = max((scaling.type_degree(t).a for t in scaling.kernel_types()), default=Fraction(0))
    return maxn + maxk + 2


# ---------------------------------------------------------------------------
# The reduced renormalisation triple
# ---------------------------------------------------------------------------


class ReducedRenorm:
    """For an extraction character of the reduced subgroup: the reduced
    renormalisation operator, its positive-side companion, and the joint
    comparison map, with their defining identities checkable on any corpus."""

    def __init__(self, g: Character, scaling: Scaling, truncation: Fraction,
                 check_gens: Iterable[DecoratedForest] = ()):
        bad = check_reduced_character(g, check_gens, scaling)
        if bad is not None:
            raise CharacterError(
                f"character is not reduced: differs from its erasure on {print_forest(bad)}"
            )
        self.g = g
        self.scaling = scaling
        self.lmaps = LMaps(scaling, truncation)

    def M(self, x: LinComb) -> LinComb:
        """The reduced renormalisation map on the reduced sector."""
        if x.tag is not SpaceTag.T_RED:
            raise SpaceError("M acts on the reduced sector")
        ext = renorm_map(self.g, LinComb(SpaceTag.T_EX, x.terms), self.scaling)
        return reduce_element(ext)

    def M_hat(self, x: LinComb) -> LinComb:
        """The positive-side algebra morphism."""
        if x.tag is not SpaceTag.T_PLUS_RED:
            raise SpaceError("M_hat acts on the reduced positive sector")
        ext = renorm_map(self.g, LinComb(SpaceTag.T_PLUS_EX, x.terms), self.scaling)
        return self.lmaps.map_L_plus(ext)

    def Delta_M(self, x: LinComb) -> TensorComb:
        """The comparison coaction."""
        if x.tag is not SpaceTag.T_RED:
            raise SpaceError("Delta_M acts on the reduced sector")
        out = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        ext = renorm_map(self.g, LinComb(SpaceTag.T_EX, x.terms), self.scaling)
        for f, c in ext.terms.items():
            for (l, r), c2 in self.lmaps.map_L(f).terms.items():
                out.add_term(l, r, c * c2)
        return out
