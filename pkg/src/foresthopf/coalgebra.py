"""Admissible-subforest enumeration and the coproducts.

``delta_generic`` implements the raw triangular coproducts (extraction /
contraction of arbitrary admissible subforests with exact combinatorial
coefficients).  ``delta_minus_ex`` and ``delta_plus_ex`` are their projected,
finite versions on the degree-filtered sectors; ``delta2_recursive`` is the
independent recursive description of the recentering coproduct, and
``cointeraction_residual`` checks the compatibility of the two coactions.
"""

from __future__ import annotations

import functools
import itertools
import threading
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .comb import (
    LinComb,
    SpaceError,
    SpaceTag,
    TensorComb,
    TripleComb,
    component_minus_ok,
    nf_minus,
    nf_plus,
    nf_tree,
    project,
)
from .degrees import (
    Degree,
    ExtendedLabel,
    Scaling,
    mi_add,
    mi_binom,
    mi_factorial,
    mi_iter_budget,
    mi_iter_leq,
    mi_len,
    mi_sub,
    mi_zero,
)
from .forest import (
    DecoratedForest,
    StructuralError,
    degree_minus,
    degree_plus,
    empty_forest,
    integ,
    jhat,
    make_forest,
    planted_trunk_type,
    rlabel,
    single_node,
    xpow,
)


class Subforest:
    """A subforest selection inside a host forest: node subset plus an edge
    subset (edges named by their child node), with the boundary attached."""

    __slots__ = ("nodes", "edges", "boundary")

    def __init__(self, host: DecoratedForest, nodes: frozenset[int], edges: frozenset[int]):
        for v in edges:
            if host.parent[v] < 0 or v not in nodes or host.parent[v] not in nodes:
                raise StructuralError(f"edge into node {v} not supported by the node set")
        self.nodes = nodes
        self.edges = edges
        self.boundary = frozenset(
            v
            for v in range(host.n)
            if host.parent[v] >= 0 and v not in edges and host.parent[v] in nodes
        )

    def sort_key(self):
        return (tuple(sorted(self.nodes)), tuple(sorted(self.edges)))

    def __eq__(self, other):
        return (
            isinstance(other, Subforest)
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.nodes, self.edges))


def _colour_components(f: DecoratedForest, colour: int) -> list[frozenset[int]]:
    """Connected components of the colour-``colour`` subforest."""
    nodes = [v for v in range(f.n) if f.ncol[v] == colour]
    rep = {v: v for v in nodes}

    def find(x: int) -> int:
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for v in nodes:
        p = f.parent[v]
        if v in rep and p in rep and f.ecol[v] == colour:
            a, b = find(v), find(p)
            if a != b:
                rep[a] = b
    comps: dict[int, set[int]] = {}
    for v in nodes:
        comps.setdefault(find(v), set()).add(v)
    return [frozenset(c) for c in comps.values()]


def admissible_subforests(forest: DecoratedForest, i: int) -> list[Subforest]:
    """The admissible families: for ``i == 1`` all subforests containing the
    colour-1 region and avoiding the colour-2 region; for ``i == 2`` the
    rooted connected subtrees (one per component, all roots included)
    containing the colour-2 region, with colour-1 components included or
    excluded as wholes."""
    if i == 1:
        return sorted(_adm1(forest), key=Subforest.sort_key)
    if i == 2:
        return sorted(_adm2(forest), key=Subforest.sort_key)
    raise ValueError("colour index must be 1 or 2")


def _adm1(f: DecoratedForest) -> Iterator[Subforest]:
    req_nodes = [v for v in range(f.n) if f.ncol[v] == 1]
    req_edges = [v for v in range(f.n) if f.parent[v] >= 0 and f.ecol[v] == 1]
    free_nodes = [v for v in range(f.n) if f.ncol[v] == 0]
    for choice in itertools.chain.from_iterable(
        itertools.combinations(free_nodes, k) for k in range(len(free_nodes) + 1)
    ):
        nodes = frozenset(req_nodes) | frozenset(choice)
        cand_edges = [
            v
            for v in range(f.n)
            if f.parent[v] >= 0
            and f.ecol[v] == 0
            and v in nodes
            and f.parent[v] in nodes
        ]
        for esel in itertools.chain.from_iterable(
            itertools.combinations(cand_edges, k) for k in range(len(cand_edges) + 1)
        ):
            yield Subforest(f, nodes, frozenset(req_edges) | frozenset(esel))


def _adm2(f: DecoratedForest) -> Iterator[Subforest]:
    rootset = set(f.roots())
    for c in _colour_components(f, 2):
        if not any(v in rootset for v in c):
            raise StructuralError("colour-2 region must be attached to the roots")
    groups = _colour_components(f, 1)
    in_group = {v: g for g in groups for v in g}
    forced = set(rootset)
    forced.update(v for v in range(f.n) if f.ncol[v] == 2)
    # colour-1 groups meeting the forced set come as wholes
    for v in list(forced):
        if v in in_group:
            forced |= in_group[v]
    optional_units: list[frozenset[int]] = []
    seen: set[int] = set()
    for v in range(f.n):
        if v in forced or v in seen:
            continue
        g = in_group.get(v, frozenset({v}))
        optional_units.append(g)
        seen |= g
    for mask in range(1 << len(optional_units)):
        nodes = set(forced)
        for j, g in enumerate(optional_units):
            if mask >> j & 1:
                nodes |= g
        if all(f.parent[v] < 0 or f.parent[v] in nodes for v in nodes):
            ns = frozenset(nodes)
            edges = frozenset(v for v in ns if f.parent[v] >= 0 and f.parent[v] in ns)
            yield Subforest(f, ns, edges)


# ---------------------------------------------------------------------------
# The generic coproduct term: common to both colours.
# ---------------------------------------------------------------------------


def _left_leg(f: DecoratedForest, sel: Subforest, nA: dict[int, tuple[int, ...]],
              eps: dict[int, tuple[int, ...]]) -> DecoratedForest:
    d = f.d
    keep = sorted(sel.nodes)
    pos = {v: j for j, v in enumerate(keep)}
    pi_eps: dict[int, tuple[int, ...]] = {}
    for e, k in eps.items():
        p = f.parent[e]
        pi_eps[p] = mi_add(pi_eps.get(p, mi_zero(d)), k)
    spec = []
    for v in keep:
        ndec = nA.get(v, mi_zero(d))
        if v in pi_eps:
            ndec = mi_add(ndec, pi_eps[v])
        if v in sel.edges:
            spec.append((pos[f.parent[v]], f.ncol[v], ndec, f.odec[v],
                         f.etype[v], f.ecol[v], f.edec[v]))
        else:
            spec.append((-1, f.ncol[v], ndec, f.odec[v], None, 0, mi_zero(d)))
    return make_forest(d, spec)


def _right_leg(f: DecoratedForest, sel: Subforest, nA: dict[int, tuple[int, ...]],
               eps: dict[int, tuple[int, ...]], i: int) -> DecoratedForest:
    d = f.d
    pi: dict[int, ExtendedLabel] = {}

    def bump(v: int, k: tuple[int, ...], sign: int) -> None:
        cur = pi.get(v, ExtendedLabel.zero(d))
        pi[v] = cur.add_poly(tuple(sign * a for a in k))

    for e, k in eps.items():
        bump(f.parent[e], k, +1)
    for e in sel.edges:
        if any(f.edec[e]):
            bump(f.parent[e], f.edec[e], -1)
    for v, k in nA.items():
        if any(k):
            bump(v, k, +1)
    spec = []
    for v in range(f.n):
        in_a = v in sel.nodes
        ncol = i if in_a else f.ncol[v]
        ndec = mi_sub(f.ndec[v], nA[v]) if v in nA else f.ndec[v]
        odec = f.odec[v]
        if v in pi:
            odec = odec + pi[v]
        p = f.parent[v]
        if p < 0:
            spec.append((-1, ncol, ndec, odec, None, 0, mi_zero(d)))
        elif v in sel.edges:
            spec.append((p, ncol, ndec, odec, f.etype[v], i, mi_zero(d)))
        else:
            edec = mi_add(f.edec[v], eps[v]) if v in eps else f.edec[v]
            spec.append((p, ncol, ndec, odec, f.etype[v], f.ecol[v], edec))
    return make_forest(d, spec)


def delta_generic(i: int, forest: DecoratedForest, eps_cutoff: int) -> TensorComb:
    """The raw triangular coproduct, truncated at total boundary decoration
    ``eps_cutoff``.  Both legs are canonical forests but no contraction or
    sector quotient is applied."""
    if eps_cutoff < 0:
        raise ValueError("the boundary-decoration cutoff must be >= 0")
    d = forest.d
    out = TensorComb(SpaceTag.RAW, SpaceTag.RAW)
    for sel in admissible_subforests(forest, i):
        nodes = sorted(sel.nodes)
        bounds = [forest.ndec[v] for v in nodes]
        for nAs in itertools.product(*[mi_iter_leq(b) for b in bounds]):
            nA = {v: k for v, k in zip(nodes, nAs) if any(k)}
            coeff_n = 1
            for v, k in zip(nodes, nAs):
                coeff_n *= mi_binom(forest.ndec[v], k)
            boundary = sorted(sel.boundary)
            for eps_tot in _iter_eps(d, boundary, eps_cutoff):
                eps = {e: k for e, k in eps_tot.items() if any(k)}
                coeff = Fraction(coeff_n)
                for k in eps.values():
                    coeff /= mi_factorial(k)
                left = _left_leg(forest, sel, nA, eps)
                right = _right_leg(forest, sel, nA, eps, i)
                out.add_term(left, right, coeff)
    return out


def _iter_eps(d: int, boundary: list[int], cutoff: int) -> Iterator[dict[int, tuple[int, ...]]]:
    if not boundary:
        yield {}
        return
    e, rest = boundary[0], boundary[1:]
    for k in mi_iter_budget(d, [Fraction(1)] * d, Fraction(cutoff)):
        for tail in _iter_eps(d, rest, cutoff - mi_len(k)):
            if any(k):
                yield {e: k, **tail}
            else:
                yield dict(tail)


# ---------------------------------------------------------------------------
# The projected extraction coproduct (negative sector).
# ---------------------------------------------------------------------------


def _connected_subtrees(f: DecoratedForest) -> list[tuple[frozenset[int], int]]:
    """All connected node subsets with at least one edge, as (nodes, top) with
    ``top`` the node closest to the root.  Grown top-down from each node."""
    out: list[tuple[frozenset[int], int]] = []

    def grow(top: int) -> list[frozenset[int]]:
        # all connected subsets rooted at `top` (within its subtree)
        sets: list[frozenset[int]] = [frozenset({top})]
        for c in f.children(top):
            below = grow_memo(c)
            new = []
            for s in sets:
                for b in below:
                    new.append(s | b)
            sets.extend(new)
        return sets

    memo: dict[int, list[frozenset[int]]] = {}

    def grow_memo(v: int) -> list[frozenset[int]]:
        if v not in memo:
            memo[v] = grow(v)
        return memo[v]

    for v in range(f.n):
        for s in grow_memo(v):
            if len(s) >= 2:
                out.append((s, v))
    return out


def _minus_component_terms(f: DecoratedForest, nodes: frozenset[int], scaling: Scaling):
    """Decoration choices making the extracted component negative.

    Yields ``(nA, eps, coeff, left_component)`` with the degree and
    planted-positivity filters already applied.  The early pruning is loss-
    less: boundary and polynomial additions only increase the colour-blind
    degree.
    """
    d = f.d
    edges = frozenset(v for v in nodes if f.parent[v] in nodes and f.parent[v] >= 0)
    base = Degree()
    for e in edges:
        base = base + scaling.type_degree(f.etype[e]) - Degree(scaling.mi_degree(f.edec[e]))
    if not base.is_negative():
        return
    budget = -base.a
    node_list = sorted(nodes)
    boundary = sorted(
        v for v in range(f.n)
        if f.parent[v] in nodes and f.parent[v] >= 0 and v not in edges
    )
    sel = Subforest(f, nodes, edges)

    decs = [f.ndec[v] for v in node_list]

    def iter_nA(idx: int, left_budget: Fraction):
        if idx == len(node_list):
            yield {}, left_budget
            return
        for k in mi_iter_leq(decs[idx]):
            cost = scaling.mi_degree(k)
            if cost > left_budget:
                continue
            for rest, rem in iter_nA(idx + 1, left_budget - cost):
                if any(k):
                    yield {node_list[idx]: k, **rest}, rem
                else:
                    yield rest, rem

    def iter_eps(idx: int, left_budget: Fraction):
        if idx == len(boundary):
            yield {}, left_budget
            return
        for k in mi_iter_budget(d, scaling.s, left_budget):
            for rest, rem in iter_eps(idx + 1, left_budget - scaling.mi_degree(k)):
                if any(k):
                    yield {boundary[idx]: k, **rest}, rem
                else:
                    yield rest, rem

    for nA, rem1 in iter_nA(0, budget):
        for eps, _ in iter_eps(0, rem1):
            adds = sum((scaling.mi_degree(k) for k in nA.values()), Fraction(0))
            adds += sum((scaling.mi_degree(k) for k in eps.values()), Fraction(0))
            total = base + Degree(adds)
            if not total.is_negative():
                continue
            left = _left_leg(f, sel, nA, eps)
            t = planted_trunk_type(left)
            if t is not None and scaling.type_degree(t).is_positive():
                continue
            coeff = Fraction(1)
            for v, k in nA.items():
                coeff *= mi_binom(f.ndec[v], k)
            for k in eps.values():
                coeff /= mi_factorial(k)
            yield nA, eps, coeff, left


_MINUS_RIGHT_NF = {
    SpaceTag.T_EX: nf_tree,
    SpaceTag.H_CIRC: nf_tree,
    SpaceTag.T_MINUS_EX: nf_minus,
    SpaceTag.FREE_MINUS_HAT: nf_minus,
    SpaceTag.T_PLUS_EX: nf_plus,
    SpaceTag.FREE_PLUS_HAT: nf_plus,
}

_CACHE_LOCK = threading.Lock()
_MINUS_CACHE: dict[tuple, TensorComb] = {}
_PLUS_CACHE: dict[tuple, TensorComb] = {}


def delta_minus_ex(x: LinComb, scaling: Scaling) -> TensorComb:
    """The negative-sector coproduct/coaction (extraction of negative
    subforests), exact and finite.

    The right-leg sector matches the input; the left leg lands in the
    projected negative sector.  For projected input the right leg is projected
    as well (quotient coproduct); for the free sectors it is not.
    """
    tag = x.tag
    if tag not in _MINUS_RIGHT_NF:
        raise SpaceError(f"extraction coproduct undefined on {tag.value}")
    out = TensorComb(SpaceTag.T_MINUS_EX, tag)
    for f, c in x.terms.items():
        t = _delta_minus_basis(f, tag, scaling)
        for k, c2 in t.terms.items():
            out.add_term(k[0], k[1], c * c2)
    return out


def _delta_minus_basis(f: DecoratedForest, tag: SpaceTag, scaling: Scaling) -> TensorComb:
    key = (f, tag, scaling)
    with _CACHE_LOCK:
        hit = _MINUS_CACHE.get(key)
    if hit is not None:
        return hit
    nf_right = _MINUS_RIGHT_NF[tag]
    project_right = tag in (SpaceTag.T_MINUS_EX, SpaceTag.T_PLUS_EX)
    d = f.d
    out = TensorComb(SpaceTag.T_MINUS_EX, tag)
    red = [v for v in range(f.n) if f.ncol[v] == 1]
    if any(f.ncol[v] == 1 and f.ecol[v] == 1 for v in range(f.n)):
        raise StructuralError("inputs must be contracted (no coloured edges)")

    # candidate extraction components with their decorated variants
    cands = []
    for nodes, top in _connected_subtrees(f):
        if any(f.ncol[v] == 2 or (f.parent[v] in nodes and f.ecol[v] == 2) for v in nodes):
            continue
        variants = list(_minus_component_terms(f, nodes, scaling))
        if variants:
            cands.append((nodes, variants))
    cands.sort(key=lambda it: tuple(sorted(it[0])))

    redset = frozenset(red)

    def families(idx: int, used: frozenset[int]):
        if idx == len(cands):
            yield ()
            return
        nodes, variants = cands[idx]
        yield from families(idx + 1, used)
        if not (nodes & used):
            for rest in families(idx + 1, used | nodes):
                yield ((nodes, variants),) + rest

    for family in families(0, frozenset()):
        covered = frozenset().union(*[n for n, _ in family]) if family else frozenset()
        # extraction-marked nodes outside the chosen components become unit
        # factors with no decorations; nothing to enumerate for them.
        sel_nodes = covered | redset
        sel_edges = frozenset(
            v
            for (nodes, _) in family
            for v in nodes
            if f.parent[v] in nodes and f.parent[v] >= 0
        )
        sel = Subforest(f, sel_nodes, sel_edges)
        for combo in itertools.product(*[v for _, v in family]):
            nA: dict[int, tuple[int, ...]] = {}
            eps: dict[int, tuple[int, ...]] = {}
            coeff = Fraction(1)
            lefts = []
            ok = True
            for (cnA, ceps, ccoeff, cleft) in combo:
                for e in ceps:
                    if e in eps:  # boundary edges are per-component disjoint
                        ok = False
                nA.update(cnA)
                eps.update(ceps)
                coeff *= ccoeff
                lefts.append(cleft)
            if not ok:
                continue
            left = empty_forest(d)
            from .forest import forest_product

            for piece in lefts:
                left = forest_product(left, piece)
            left = nf_minus(left)
            right = nf_right(_right_leg(f, sel, nA, eps, 1))
            if project_right:
                if tag is SpaceTag.T_MINUS_EX and _minus_zero(right, scaling):
                    continue
                if tag is SpaceTag.T_PLUS_EX and _plus_zero(right, scaling):
                    continue
            out.add_term(left, right, coeff)
    with _CACHE_LOCK:
        _MINUS_CACHE[key] = out
    return out


def _minus_zero(forest: DecoratedForest, scaling: Scaling) -> bool:
    return any(not component_minus_ok(c, scaling) for c in forest.component_forests())


def _plus_zero(tree: DecoratedForest, scaling: Scaling) -> bool:
    from .comb import plus_projects_to_zero

    return plus_projects_to_zero(tree, scaling)


# ---------------------------------------------------------------------------
# The projected recentering coproduct (positive sector).
# ---------------------------------------------------------------------------


def delta_plus_ex(x: LinComb, scaling: Scaling) -> TensorComb:
    """The recentering coproduct/coaction: extraction of rooted subtrees with
    Taylor boundary decorations; every right-leg planted factor must have
    positive degree, which makes the expansion finite."""
    tag = x.tag
    if tag not in (SpaceTag.T_EX, SpaceTag.H_CIRC, SpaceTag.T_PLUS_EX, SpaceTag.FREE_PLUS_HAT):
        raise SpaceError(f"recentering coproduct undefined on {tag.value}")
    out = TensorComb(tag if tag is not SpaceTag.H_CIRC else SpaceTag.T_EX, SpaceTag.T_PLUS_EX)
    for f, c in x.terms.items():
        t = _delta_plus_basis(f, tag, scaling)
        for k, c2 in t.terms.items():
            out.add_term(k[0], k[1], c * c2)
    return out


def _delta_plus_basis(f: DecoratedForest, tag: SpaceTag, scaling: Scaling) -> TensorComb:
    key = (f, tag, scaling)
    with _CACHE_LOCK:
        hit = _PLUS_CACHE.get(key)
    if hit is not None:
        return hit
    if not f.is_tree:
        raise SpaceError("recentering coproduct applies to single trees")
    d = f.d
    left_nf = nf_plus if tag in (SpaceTag.T_PLUS_EX, SpaceTag.FREE_PLUS_HAT) else nf_tree
    project_left = tag is SpaceTag.T_PLUS_EX
    out = TensorComb(tag, SpaceTag.T_PLUS_EX)
    for sel in admissible_subforests(f, 2):
        nodes = sorted(sel.nodes)
        boundary = sorted(sel.boundary)
        # per-edge budget: the right-leg planted factor must stay positive
        budgets = []
        feasible = True
        for e in boundary:
            sub_nodes = _subtree_nodes(f, e)
            sub = f.subforest_of_nodes(sub_nodes)
            g = degree_plus(sub, scaling) + scaling.type_degree(f.etype[e]) - Degree(
                scaling.mi_degree(f.edec[e])
            )
            if not g.is_positive():
                feasible = False
                break
            budgets.append((e, g))
        if not feasible:
            continue
        for nAs in itertools.product(*[mi_iter_leq(f.ndec[v]) for v in nodes]):
            nA = {v: k for v, k in zip(nodes, nAs) if any(k)}
            coeff_n = 1
            for v, k in zip(nodes, nAs):
                coeff_n *= mi_binom(f.ndec[v], k)
            for eps in _iter_plus_eps(d, scaling, budgets):
                coeff = Fraction(coeff_n)
                for k in eps.values():
                    coeff /= mi_factorial(k)
                left = left_nf(_left_leg(f, sel, nA, eps))
                if project_left and _plus_zero(left, scaling):
                    continue
                right = nf_plus(_right_leg(f, sel, nA, eps, 2))
                out.add_term(left, right, coeff)
    with _CACHE_LOCK:
        _PLUS_CACHE[key] = out
    return out


def _subtree_nodes(f: DecoratedForest, v: int) -> list[int]:
    nodes = [v]
    i = 0
    while i < len(nodes):
        nodes.extend(f.children(nodes[i]))
        i += 1
    return nodes


def _iter_plus_eps(d: int, scaling: Scaling, budgets) -> Iterator[dict[int, tuple[int, ...]]]:
    if not budgets:
        yield {}
        return
    (e, g), rest = budgets[0], budgets[1:]
    for k in mi_iter_budget(d, scaling.s, g.a):
        if not (g - Degree(scaling.mi_degree(k))).is_positive():
            continue
        for tail in _iter_plus_eps(d, scaling, rest):
            if any(k):
                yield {e: k, **tail}
            else:
                yield dict(tail)


# ---------------------------------------------------------------------------
# Recursive description of the recentering coproduct (independent oracle).
# ---------------------------------------------------------------------------


def delta2_recursive(x: LinComb, scaling: Scaling,
                     max_poly: Optional[int] = None,
                     project_right: bool = False) -> TensorComb:
    """The recentering coproduct computed from its recursive characterisation
    (primitive polynomials, the grafting rule for planted trees, root-label
    equivariance, multiplicativity).

    Without ``project_right`` the polynomial sum is infinite and ``max_poly``
    (a bound on the unscaled boundary polynomial length) is required.
    """
    if x.tag not in (SpaceTag.H_CIRC, SpaceTag.T_EX, SpaceTag.H_HAT2, SpaceTag.T_PLUS_EX,
                     SpaceTag.FREE_PLUS_HAT):
        raise SpaceError(f"recursive coproduct undefined on {x.tag.value}")
    if not project_right and max_poly is None:
        raise ValueError("a polynomial truncation is required without projection")
    right_tag = SpaceTag.T_PLUS_EX if project_right else SpaceTag.H_HAT2
    left_tag = SpaceTag.T_EX if x.tag in (SpaceTag.H_CIRC, SpaceTag.T_EX) else x.tag
    out = TensorComb(left_tag, right_tag)
    for f, c in x.terms.items():
        for (l, r), c2 in _delta2_rec_tree(f, scaling, max_poly, project_right).items():
            out.add_term(l, r, c * c2)
    return out


def _delta2_rec_tree(f: DecoratedForest, scaling: Scaling, max_poly: Optional[int],
                     project_right: bool) -> dict[tuple[DecoratedForest, DecoratedForest], Fraction]:
    from .forest import root_branches

    d = f.d
    if not f.is_tree:
        raise SpaceError("recursive coproduct applies to trees")
    r = f.roots()[0]
    root_col = f.ncol[r]
    alpha = f.odec[r]
    left_nf = nf_plus if root_col == 2 else nf_tree
    terms: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {
        (single_node(d), single_node(d)): Fraction(1)
    }

    def mul(acc, extra):
        out: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {}
        for (l1, r1), c1 in acc.items():
            for (l2, r2), c2 in extra.items():
                from .forest import forest_product, join_roots

                l = left_nf(join_roots(forest_product(l1, l2)))
                rr = nf_plus(join_roots(forest_product(r1, r2)))
                k = (l, rr)
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return out

    # polynomial part of the root
    n = f.ndec[r]
    poly: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {}
    for j in mi_iter_leq(n):
        poly[(xpow(d, j), xpow(d, mi_sub(n, j)))] = Fraction(mi_binom(n, j))
    terms = mul(terms, poly)

    for etype, edec, sub in root_branches(f):
        branch: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {}
        inner = _delta2_rec_tree(sub, scaling, max_poly, project_right)
        for (l, rr), c in inner.items():
            if root_col == 2:
                branch_l = nf_plus(jhat(etype, edec, l))
            else:
                branch_l = nf_tree(integ(etype, edec, l))
            k = (branch_l, rr)
            branch[k] = branch.get(k, Fraction(0)) + c
        # Taylor terms: X^l/l! (x) planted factor with boosted decoration
        if project_right:
            g = degree_plus(sub, scaling) + scaling.type_degree(etype) - Degree(
                scaling.mi_degree(edec)
            )
            ls = [k for k in mi_iter_budget(d, scaling.s, g.a)
                  if (g - Degree(scaling.mi_degree(k))).is_positive()]
        else:
            assert max_poly is not None
            ls = list(mi_iter_budget(d, [Fraction(1)] * d, Fraction(max_poly)))
        for l in ls:
            factor = nf_plus(jhat(etype, mi_add(edec, l), sub))
            k = (xpow(d, l), factor)
            branch[k] = branch.get(k, Fraction(0)) + Fraction(1, mi_factorial(l))
        terms = mul(terms, branch)

    if root_col == 1:
        out: dict[tuple[DecoratedForest, DecoratedForest], Fraction] = {}
        for (l, rr), c in terms.items():
            if not l.is_tree:
                raise StructuralError("left leg of the recursion must be a tree")
            k = (nf_tree(rlabel(alpha, l)), rr)
            out[k] = out.get(k, Fraction(0)) + c
        return out
    return terms


# ---------------------------------------------------------------------------
# Cointeraction
# ---------------------------------------------------------------------------


def cointeraction_residual(x: LinComb, scaling: Scaling) -> TripleComb:
    """LHS - RHS of the cointeraction identity; zero iff the two coactions
    are compatible on the input."""
    if x.tag not in (SpaceTag.T_EX, SpaceTag.T_PLUS_EX):
        raise SpaceError("cointeraction residual expects the model or positive sector")
    tags = (SpaceTag.T_MINUS_EX, x.tag, SpaceTag.T_PLUS_EX)
    lhs = TripleComb(tags)
    rhs = TripleComb(tags)
    from .forest import forest_product

    dplus = delta_plus_ex(x, scaling)
    for (a, b), c in dplus.terms.items():
        da = delta_minus_ex(LinComb.basis(x.tag, a), scaling)
        db = delta_minus_ex(LinComb.basis(SpaceTag.T_PLUS_EX, b), scaling)
        for (a1, a2), ca in da.terms.items():
            for (b1, b2), cb in db.terms.items():
                lhs.add_term((nf_minus(forest_product(a1, b1)), a2, b2), c * ca * cb)
    dminus = delta_minus_ex(x, scaling)
    for (a, b), c in dminus.terms.items():
        for (b1, b2), cb in delta_plus_ex(LinComb.basis(x.tag, b), scaling).terms.items():
            rhs.add_term((a, b1, b2), c * cb)
    return lhs - rhs


def clear_caches() -> None:
    with _CACHE_LOCK:
        _MINUS_CACHE.clear()
        _PLUS_CACHE.clear()
