"""Verification suites: exhaustive identity checks over enumerated bases.

Each suite runs every check at exact rational arithmetic and reports the
first counterexample with both sides expanded.  Suites may fan out across a
thread pool; results are accumulated in canonical order after a barrier, so
the report is byte-identical for any thread count.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .comb import (
    LinComb,
    SpaceTag,
    TensorComb,
    TripleComb,
    counit_value,
    lincomb_product,
    nf_minus,
    nf_plus,
    nf_tree,
)
from .coalgebra import (
    cointeraction_residual,
    delta2_recursive,
    delta_minus_ex,
    delta_plus_ex,
)
from .degrees import Degree, Scaling
from .forest import (
    DecoratedForest,
    degree_minus,
    degree_plus,
    forest_product,
    root_branches,
    single_node,
)
from .grammar import print_forest
from .hopf import (
    Character,
    antipode,
    char_convolve,
    char_inverse,
    counit_character,
    seeded_character,
    twisted_antipode,
)
from .renorm import (
    LMaps,
    ReducedRenorm,
    Valuation,
    bphz_centering_residual,
    bphz_character,
    bphz_uniqueness_witness,
    check_reduced_character,
    default_truncation,
    delta_minus_reduced,
    jtilde,
    q_map,
    reduce_element,
    reduce_minus,
    reduced_character,
    renorm_map,
)
from .rules import RegMap, Rule, basis, compute_reg


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    checked: int
    counterexample: Optional[str] = None
    detail: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        status = "pass" if self.passed else "FAIL"
        out = [f"{self.suite}: {status} ({self.checked} checks)"]
        if self.counterexample:
            out.append(f"  counterexample: {self.counterexample}")
        return out


SUITE_NAMES = (
    "coassoc-minus",
    "coassoc-plus",
    "comodule",
    "cointeraction",
    "antipode",
    "twisted-plus",
    "twisted-minus",
    "intertwine",
    "recursive-oracle",
    "mainL",
    "bphz-centering",
    "reduced-group",
    "q-compat",
)


class SuiteParams:
    def __init__(self, rule: Rule, max_edges: int = 5,
                 max_degree: Optional[Degree] = None, seed: int = 0,
                 threads: int = 1, reg: Optional[RegMap] = None):
        self.rule = rule
        self.scaling = rule.scaling
        self.max_edges = max_edges
        self.max_degree = max_degree if max_degree is not None else Degree(Fraction(1))
        self.seed = seed
        self.threads = max(1, threads)
        self.reg = reg or compute_reg(rule)

    def base_trees(self) -> list[DecoratedForest]:
        return basis(self.rule, "B_circ", self.max_degree, self.reg, self.max_edges)

    def minus_gens(self) -> list[DecoratedForest]:
        return basis(self.rule, "gens_minus", self.max_degree, self.reg, self.max_edges)

    def plus_gens(self) -> list[DecoratedForest]:
        gens = basis(self.rule, "gens_plus", self.max_degree, self.reg, self.max_edges)
        return [g for g in gens if g.edge_count() <= self.max_edges]

    def map_checks(self, items: list, fn: Callable) -> list:
        """Run checks across the pool; outputs ordered like the inputs."""
        if self.threads == 1 or len(items) <= 1:
            return [fn(it) for it in items]
        with concurrent.futures.ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, items))


def _fmt_tensor(t: TensorComb, limit: int = 6) -> str:
    bits = [
        f"{c}*{print_forest(l)} (x) {print_forest(r)}"
        for (l, r), c in t.sorted_terms()[:limit]
    ]
    more = max(0, len(t.terms) - limit)
    return " + ".join(bits) + (f" (+{more} more)" if more else "")


def _triple_zero(t: TripleComb) -> bool:
    return t.is_zero()


# ---------------------------------------------------------------------------
# Individual suites
# ---------------------------------------------------------------------------


def suite_coassoc_minus(p: SuiteParams) -> SuiteResult:
    gens = p.minus_gens()
    sc = p.scaling
    tags = (SpaceTag.T_MINUS_EX,) * 3

    def check(tree):
        x = LinComb.basis(SpaceTag.T_MINUS_EX, nf_minus(tree))
        d = delta_minus_ex(x, sc)
        lhs = TripleComb(tags)
        for (l, r), c in d.terms.items():
            for (l1, l2), c2 in delta_minus_ex(
                LinComb.basis(SpaceTag.T_MINUS_EX, l), sc
            ).terms.items():
                lhs.add_term((l1, l2, r), c * c2)
        rhs = TripleComb(tags)
        for (l, r), c in d.terms.items():
            for (r1, r2), c2 in delta_minus_ex(
                LinComb.basis(SpaceTag.T_MINUS_EX, r), sc
            ).terms.items():
                rhs.add_term((l, r1, r2), c * c2)
        diff = lhs - rhs
        return None if diff.is_zero() else print_forest(tree)

    results = p.map_checks(gens, check)
    bad = [r for r in results if r]
    return SuiteResult("coassoc-minus", not bad, len(gens), bad[0] if bad else None)


def suite_coassoc_plus(p: SuiteParams) -> SuiteResult:
    gens = p.plus_gens()
    sc = p.scaling
    tags = (SpaceTag.T_PLUS_EX,) * 3

    def check(tree):
        x = LinComb.basis(SpaceTag.T_PLUS_EX, nf_plus(tree))
        d = delta_plus_ex(x, sc)
        lhs = TripleComb(tags)
        for (l, r), c in d.terms.items():
            for (l1, l2), c2 in delta_plus_ex(
                LinComb.basis(SpaceTag.T_PLUS_EX, l), sc
            ).terms.items():
                lhs.add_term((l1, l2, r), c * c2)
        rhs = TripleComb(tags)
        for (l, r), c in d.terms.items():
            for (r1, r2), c2 in delta_plus_ex(
                LinComb.basis(SpaceTag.T_PLUS_EX, r), sc
            ).terms.items():
                rhs.add_term((l, r1, r2), c * c2)
        diff = lhs - rhs
        return None if diff.is_zero() else print_forest(tree)

    results = p.map_checks(gens, check)
    bad = [r for r in results if r]
    return SuiteResult("coassoc-plus", not bad, len(gens), bad[0] if bad else None)


def suite_comodule(p: SuiteParams) -> SuiteResult:
    trees = p.base_trees()
    sc = p.scaling

    def check(tree):
        x = LinComb.basis(SpaceTag.T_EX, tree)
        # counit laws
        got = LinComb.zero(SpaceTag.T_EX)
        for (l, r), c in delta_minus_ex(x, sc).terms.items():
            got.add_term(r, c * counit_value(SpaceTag.T_MINUS_EX, l))
        if got != x:
            return f"minus counit on {print_forest(tree)}"
        got = LinComb.zero(SpaceTag.T_EX)
        for (l, r), c in delta_plus_ex(x, sc).terms.items():
            got.add_term(l, c * counit_value(SpaceTag.T_PLUS_EX, r))
        if got != x:
            return f"plus counit on {print_forest(tree)}"
        # comodule coassociativity (left over the negative, right over the
        # positive sector)
        lhs = TripleComb((SpaceTag.T_MINUS_EX, SpaceTag.T_MINUS_EX, SpaceTag.T_EX))
        rhs = TripleComb((SpaceTag.T_MINUS_EX, SpaceTag.T_MINUS_EX, SpaceTag.T_EX))
        d = delta_minus_ex(x, sc)
        for (l, r), c in d.terms.items():
            for (l1, l2), c2 in delta_minus_ex(
                LinComb.basis(SpaceTag.T_MINUS_EX, l), sc
            ).terms.items():
                lhs.add_term((l1, l2, r), c * c2)
            pass
        for (l, r), c in d.terms.items():
            for (r1, r2), c2 in delta_minus_ex(
                LinComb.basis(SpaceTag.T_EX, r), sc
            ).terms.items():
                rhs.add_term((l, r1, r2), c * c2)
        if not (lhs - rhs).is_zero():
            return f"minus comodule law on {print_forest(tree)}"
        lhsp = TripleComb((SpaceTag.T_EX, SpaceTag.T_PLUS_EX, SpaceTag.T_PLUS_EX))
        rhsp = TripleComb((SpaceTag.T_EX, SpaceTag.T_PLUS_EX, SpaceTag.T_PLUS_EX))
        dp = delta_plus_ex(x, sc)
        for (l, r), c in dp.terms.items():
            for (l1, r1), c2 in delta_plus_ex(LinComb.basis(SpaceTag.T_EX, l), sc).terms.items():
                lhsp.add_term((l1, r1, r), c * c2)
        for (l, r), c in dp.terms.items():
            for (r1, r2), c2 in delta_plus_ex(
                LinComb.basis(SpaceTag.T_PLUS_EX, r), sc
            ).terms.items():
                rhsp.add_term((l, r1, r2), c * c2)
        if not (lhsp - rhsp).is_zero():
            return f"plus comodule law on {print_forest(tree)}"
        return None

    results = p.map_checks(trees, check)
    bad = [r for r in results if r]
    return SuiteResult("comodule", not bad, len(trees), bad[0] if bad else None)


def suite_cointeraction(p: SuiteParams) -> SuiteResult:
    trees = p.base_trees()
    sc = p.scaling

    def check(tree):
        r = cointeraction_residual(LinComb.basis(SpaceTag.T_EX, tree), sc)
        return None if r.is_zero() else print_forest(tree)

    results = p.map_checks(trees, check)
    bad = [r for r in results if r]
    return SuiteResult("cointeraction", not bad, len(trees), bad[0] if bad else None)


def suite_antipode(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    checked = 0
    for tree in p.minus_gens():
        x = LinComb.basis(SpaceTag.T_MINUS_EX, nf_minus(tree))
        out = LinComb.zero(SpaceTag.T_MINUS_EX)
        for (l, r), c in delta_minus_ex(x, sc).terms.items():
            al = antipode(SpaceTag.T_MINUS_EX, LinComb.basis(SpaceTag.T_MINUS_EX, l), sc)
            out = out + c * lincomb_product(al, LinComb.basis(SpaceTag.T_MINUS_EX, r))
        checked += 1
        if not out.is_zero():
            return SuiteResult("antipode", False, checked,
                               f"minus convolution on {print_forest(tree)} = {out!r}")
    for tree in p.plus_gens():
        x = LinComb.basis(SpaceTag.T_PLUS_EX, nf_plus(tree))
        out = LinComb.zero(SpaceTag.T_PLUS_EX)
        for (l, r), c in delta_plus_ex(x, sc).terms.items():
            ar = antipode(SpaceTag.T_PLUS_EX, LinComb.basis(SpaceTag.T_PLUS_EX, r), sc)
            out = out + c * lincomb_product(LinComb.basis(SpaceTag.T_PLUS_EX, l), ar)
        checked += 1
        if not out.is_zero():
            return SuiteResult("antipode", False, checked,
                               f"plus convolution on {print_forest(tree)} = {out!r}")
    return SuiteResult("antipode", True, checked)


def suite_twisted_minus(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    gens = p.minus_gens()

    def check(tree):
        x = LinComb.basis(SpaceTag.FREE_MINUS_HAT, nf_minus(tree))
        out = LinComb.zero(SpaceTag.FREE_MINUS_HAT)
        for (l, r), c in delta_minus_ex(x, sc).terms.items():
            tl = twisted_antipode("minus", LinComb.basis(SpaceTag.T_MINUS_EX, l), sc)
            out = out + c * lincomb_product(tl, LinComb.basis(SpaceTag.FREE_MINUS_HAT, r))
        return None if out.is_zero() else print_forest(tree)

    results = p.map_checks(gens, check)
    bad = [r for r in results if r]
    return SuiteResult("twisted-minus", not bad, len(gens), bad[0] if bad else None)


def suite_twisted_plus(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    gens = p.plus_gens()

    def check(tree):
        x = LinComb.basis(SpaceTag.FREE_PLUS_HAT, nf_plus(tree))
        out = LinComb.zero(SpaceTag.FREE_PLUS_HAT)
        for (l, r), c in delta_plus_ex(x, sc).terms.items():
            tr = twisted_antipode("plus", LinComb.basis(SpaceTag.T_PLUS_EX, r), sc)
            out = out + c * lincomb_product(LinComb.basis(SpaceTag.FREE_PLUS_HAT, l), tr)
        return None if out.is_zero() else print_forest(tree)

    results = p.map_checks(gens, check)
    bad = [r for r in results if r]
    return SuiteResult("twisted-plus", not bad, len(gens), bad[0] if bad else None)


def suite_intertwine(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    gens = p.plus_gens()

    def check(tree):
        x = LinComb.basis(SpaceTag.T_PLUS_EX, nf_plus(tree))
        lhs = TensorComb(SpaceTag.T_MINUS_EX, SpaceTag.FREE_PLUS_HAT)
        for f, c in twisted_antipode("plus", x, sc).terms.items():
            for (l, r), c2 in delta_minus_ex(
                LinComb.basis(SpaceTag.FREE_PLUS_HAT, f), sc
            ).terms.items():
                lhs.add_term(l, r, c * c2)
        rhs = TensorComb(SpaceTag.T_MINUS_EX, SpaceTag.FREE_PLUS_HAT)
        for (l, r), c in delta_minus_ex(x, sc).terms.items():
            for f, c2 in twisted_antipode(
                "plus", LinComb.basis(SpaceTag.T_PLUS_EX, r), sc
            ).terms.items():
                rhs.add_term(l, f, c * c2)
        return None if (lhs - rhs).is_zero() else print_forest(tree)

    results = p.map_checks(gens, check)
    bad = [r for r in results if r]
    return SuiteResult("intertwine", not bad, len(gens), bad[0] if bad else None)


def suite_recursive_oracle(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    trees = p.base_trees()

    def check(tree):
        x = LinComb.basis(SpaceTag.T_EX, tree)
        a = delta_plus_ex(x, sc)
        b = delta2_recursive(x, sc, project_right=True)
        return None if a.terms == b.terms else print_forest(tree)

    results = p.map_checks(trees, check)
    bad = [r for r in results if r]
    return SuiteResult("recursive-oracle", not bad, len(trees), bad[0] if bad else None)


def suite_mainL(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    trees = p.base_trees()
    trunc = default_truncation(sc, trees)
    lm = LMaps(sc, trunc)

    def check(tree):
        L = lm.map_L(tree)
        lhs = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        for (a, b), c in L.terms.items():
            for (a1, a2), c2 in delta_plus_ex(LinComb.basis(SpaceTag.T_EX, a), sc).terms.items():
                prod = lincomb_product(
                    LinComb.basis(SpaceTag.T_PLUS_RED, nf_plus(a2)),
                    LinComb.basis(SpaceTag.T_PLUS_RED, b),
                )
                for m, c3 in prod.terms.items():
                    lhs.add_term(nf_tree(a1), m, c * c2 * c3)
        rhs = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        for (a, b), c in delta_plus_ex(LinComb.basis(SpaceTag.T_EX, tree), sc).terms.items():
            qa = nf_tree(q_map(a))
            for m, c2 in lm.map_L_plus(LinComb.basis(SpaceTag.T_PLUS_EX, b)).terms.items():
                rhs.add_term(qa, m, c * c2)
        return None if (lhs - rhs).is_zero() else print_forest(tree)

    results = p.map_checks(trees, check)
    bad = [r for r in results if r]
    return SuiteResult("mainL", not bad, len(trees),
                       bad[0] if bad else None, {"truncation": str(trunc)})


def suite_bphz_centering(p: SuiteParams, rounds: int = 25,
                         witness_rounds: int = 10) -> SuiteResult:
    sc = p.scaling
    sharp = basis(p.rule, "B_circ_sharp", Degree(), p.reg, p.max_edges)
    checked = 0
    for i in range(rounds):
        val = Valuation.seeded(p.seed * 1000003 + i)
        residuals = bphz_centering_residual(val, sc, sharp)
        checked += len(residuals)
        for tau, v in residuals.items():
            if v != 0:
                return SuiteResult(
                    "bphz-centering", False, checked,
                    f"seed {i}: residual {v} on {print_forest(tau)}")
    for i in range(witness_rounds):
        g = seeded_character(SpaceTag.T_MINUS_EX, p.seed * 7919 + i)
        val = Valuation.seeded(p.seed * 104729 + i)
        found = bphz_uniqueness_witness(g, val, sc, sharp)
        checked += 1
        if found is None:
            return SuiteResult("bphz-centering", False, checked,
                               f"no uniqueness witness for seeded character {i}")
    return SuiteResult("bphz-centering", True, checked)


def suite_reduced_group(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    trees = [t for t in p.base_trees() if t.edge_count() <= max(3, p.max_edges - 1)]
    gens = p.minus_gens()
    trunc = default_truncation(sc, p.base_trees())

    def reduced_seeded(seed: int) -> Character:
        inner = seeded_character(SpaceTag.T_MINUS_EX, seed)
        return reduced_character(lambda f: inner.eval_forest(f))

    g1 = reduced_seeded(p.seed * 31 + 1)
    g2 = reduced_seeded(p.seed * 31 + 2)
    checked = 0
    if check_reduced_character(g1, gens, sc) is not None:
        return SuiteResult("reduced-group", False, 0, "seeded reduced character failed")
    rr1 = ReducedRenorm(g1, sc, trunc)
    rr2 = ReducedRenorm(g2, sc, trunc)
    g12 = char_convolve(SpaceTag.T_MINUS_EX, g2, g1, sc)
    rr12 = ReducedRenorm(g12, sc, trunc)
    for tree in trees:
        red = reduce_element(LinComb.basis(SpaceTag.T_EX, tree))
        # homomorphism M_{g2} M_{g1} = M_{g2 * g1}
        a = rr2.M(rr1.M(red))
        b = rr12.M(red)
        checked += 1
        if a != b:
            return SuiteResult("reduced-group", False, checked,
                               f"homomorphism fails on {print_forest(tree)}")
        # defining identity (comparison map against the coaction)
        dm = rr1.Delta_M(red)
        lhs = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        for (a1, b1), c in dm.terms.items():
            for (x1, x2), c2 in delta_plus_ex(LinComb.basis(SpaceTag.T_EX, a1), sc).terms.items():
                prod = lincomb_product(
                    LinComb.basis(SpaceTag.T_PLUS_RED, nf_plus(x2)),
                    LinComb.basis(SpaceTag.T_PLUS_RED, b1),
                )
                for m, c3 in prod.terms.items():
                    lhs.add_term(nf_tree(x1), m, c * c2 * c3)
        rhs = TensorComb(SpaceTag.T_RED, SpaceTag.T_PLUS_RED)
        for (x1, x2), c in delta_plus_ex(LinComb.basis(SpaceTag.T_EX, tree), sc).terms.items():
            for mf, c1 in rr1.M(reduce_element(LinComb.basis(SpaceTag.T_EX, x1))).terms.items():
                for hf, c2 in rr1.M_hat(
                    reduce_element(LinComb.basis(SpaceTag.T_PLUS_EX, x2))
                ).terms.items():
                    rhs.add_term(mf, hf, c * c1 * c2)
        checked += 1
        if not (lhs - rhs).is_zero():
            return SuiteResult("reduced-group", False, checked,
                               f"comparison identity fails on {print_forest(tree)}")
        # triangularity
        base_deg = degree_plus(q_map(tree), sc)
        for (a1, b1), c in dm.terms.items():
            if degree_plus(a1, sc) < base_deg:
                return SuiteResult(
                    "reduced-group", False, checked,
                    f"triangularity fails on {print_forest(tree)}")
    # positive-side identity on recentered generators
    for tree in trees:
        for etype, edec, sub in root_branches(tree):
            g = degree_plus(sub, sc) + sc.type_degree(etype) - Degree(sc.mi_degree(edec))
            if not g.is_positive():
                continue
            jt = jtilde(etype, edec, q_map(sub), sc)
            lhs = rr1.M_hat(jt)
            rhs = LinComb.zero(SpaceTag.T_PLUS_RED)
            for (a1, b1), c in rr1.Delta_M(
                reduce_element(LinComb.basis(SpaceTag.T_EX, sub))
            ).terms.items():
                for jf, c2 in jtilde(etype, edec, a1, sc).terms.items():
                    prod = lincomb_product(
                        LinComb.basis(SpaceTag.T_PLUS_RED, jf),
                        LinComb.basis(SpaceTag.T_PLUS_RED, b1),
                    )
                    for m, c3 in prod.terms.items():
                        rhs.add_term(m, c * c2 * c3)
            checked += 1
            if lhs != rhs:
                return SuiteResult(
                    "reduced-group", False, checked,
                    f"recentered-generator identity fails below {print_forest(tree)}")
    # the renormalising character of a reduced valuation is reduced
    val = Valuation.seeded(p.seed * 177 + 5)
    red_val = Valuation(fallback=lambda gen: val.value(nf_tree(q_map(gen))))
    bph = bphz_character(red_val, sc)
    checked += 1
    bad = check_reduced_character(bph, gens, sc)
    if bad is not None:
        return SuiteResult("reduced-group", False, checked,
                           f"reduced BPHZ character failed on {print_forest(bad)}")
    return SuiteResult("reduced-group", True, checked)


def suite_q_compat(p: SuiteParams) -> SuiteResult:
    sc = p.scaling
    trees = p.base_trees()

    def check(tree):
        x = LinComb.basis(SpaceTag.T_EX, tree)
        # (Q (x) Q) Delta- Q == (Q (x) Q) Delta-
        lhs = TensorComb(SpaceTag.T_MINUS_RED, SpaceTag.T_RED)
        qx = nf_tree(q_map(tree))
        for (l, r), c in delta_minus_ex(LinComb.basis(SpaceTag.T_EX, qx), sc).terms.items():
            for lf, c2 in reduce_minus(
                LinComb.basis(SpaceTag.T_MINUS_EX, l), sc
            ).terms.items():
                lhs.add_term(lf, nf_tree(q_map(r)), c * c2)
        rhs = TensorComb(SpaceTag.T_MINUS_RED, SpaceTag.T_RED)
        for (l, r), c in delta_minus_ex(x, sc).terms.items():
            for lf, c2 in reduce_minus(
                LinComb.basis(SpaceTag.T_MINUS_EX, l), sc
            ).terms.items():
                rhs.add_term(lf, nf_tree(q_map(r)), c * c2)
        if not (lhs - rhs).is_zero():
            return f"erasure compatibility on {print_forest(tree)}"
        # comodule law of the reduced coaction
        red = reduce_element(LinComb.basis(SpaceTag.T_EX, tree))
        d = delta_minus_reduced(red, sc)
        got = LinComb.zero(SpaceTag.T_RED)
        for (l, r), c in d.terms.items():
            got.add_term(r, c * counit_value(SpaceTag.T_MINUS_RED, l))
        if got != red:
            return f"reduced counit on {print_forest(tree)}"
        return None

    results = p.map_checks(trees, check)
    bad = [r for r in results if r]
    return SuiteResult("q-compat", not bad, len(trees), bad[0] if bad else None)


_SUITES: dict[str, Callable[[SuiteParams], SuiteResult]] = {
    "coassoc-minus": suite_coassoc_minus,
    "coassoc-plus": suite_coassoc_plus,
    "comodule": suite_comodule,
    "cointeraction": suite_cointeraction,
    "antipode": suite_antipode,
    "twisted-plus": suite_twisted_plus,
    "twisted-minus": suite_twisted_minus,
    "intertwine": suite_intertwine,
    "recursive-oracle": suite_recursive_oracle,
    "mainL": suite_mainL,
    "bphz-centering": suite_bphz_centering,
    "reduced-group": suite_reduced_group,
    "q-compat": suite_q_compat,
}


def verify_suite(name: str, params: SuiteParams) -> SuiteResult:
    """Run a named suite; raises on unknown names."""
    try:
        fn = _SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown suite {name!r}; known: {', '.join(SUITE_NAMES)}"
        ) from None
    return fn(params)
