"""Decorated coloured rooted forests, stored up to isomorphism.

A forest value is immutable and canonical: node arrays are kept in a canonical
depth-first order computed by an AHU-style kernel, so two values compare equal
iff they are isomorphic as typed coloured decorated forests.  Every non-root
node owns the edge to its parent (type, colour and edge decoration live on the
child).

Colours take values in {0, 1, 2}: 1 marks extracted regions, 2 recentering
regions.  Node decorations: ``ndec`` (polynomial exponents), ``odec`` (the
extended label recording contracted material); edge decorations: ``edec``
(derivatives on kernels).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ._kernel import canonical_order
from .degrees import (
    Degree,
    ExtendedLabel,
    MultiIndex,
    Scaling,
    mi_add,
    mi_len,
    mi_zero,
)

NodeSpec = tuple[int, int, MultiIndex, ExtendedLabel, Optional[str], int, MultiIndex]
COLOURS = (0, 1, 2)


class StructuralError(ValueError):
    """A forest violating the decorated-forest invariants."""


class DecoratedForest:
    """Canonical immutable decorated coloured forest.

    Construct through :func:`make_forest` (or the builder helpers below); the
    constructor assumes pre-validated, pre-canonicalised arrays.
    """

    __slots__ = (
        "d",
        "parent",
        "ncol",
        "ndec",
        "odec",
        "etype",
        "ecol",
        "edec",
        "key",
        "_hash",
        "_children",
    )

    def __init__(self, d, parent, ncol, ndec, odec, etype, ecol, edec, key):
        self.d = d
        self.parent = parent
        self.ncol = ncol
        self.ndec = ndec
        self.odec = odec
        self.etype = etype
        self.ecol = ecol
        self.edec = edec
        self.key = key
        self._hash = hash(key)
        self._children: Optional[tuple[tuple[int, ...], ...]] = None

    # -- identity ----------------------------------------------------------

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DecoratedForest) and self.key == other.key

    def __repr__(self) -> str:
        from .grammar import print_forest

        return f"<forest {print_forest(self)}>"

    # -- structure ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def is_empty(self) -> bool:
        return not self.parent

    def children(self, v: int) -> tuple[int, ...]:
        if self._children is None:
            kids: list[list[int]] = [[] for _ in range(self.n)]
            for w, p in enumerate(self.parent):
                if p >= 0:
                    kids[p].append(w)
            self._children = tuple(tuple(k) for k in kids)
        return self._children[v]

    def roots(self) -> tuple[int, ...]:
        return tuple(v for v, p in enumerate(self.parent) if p < 0)

    def component_nodes(self) -> list[tuple[int, ...]]:
        """Node sets of the connected components, one per root, in order."""
        out = []
        for r in self.roots():
            nodes = [r]
            i = 0
            while i < len(nodes):
                nodes.extend(self.children(nodes[i]))
                i += 1
            out.append(tuple(sorted(nodes)))
        return out

    @property
    def is_tree(self) -> bool:
        return len(self.roots()) == 1

    def node_spec(self, v: int, parent: int) -> NodeSpec:
        return (
            parent,
            self.ncol[v],
            self.ndec[v],
            self.odec[v],
            self.etype[v],
            self.ecol[v],
            self.edec[v],
        )

    def nodes_spec(self) -> list[NodeSpec]:
        return [self.node_spec(v, self.parent[v]) for v in range(self.n)]

    def subforest_of_nodes(self, nodes: Iterable[int]) -> "DecoratedForest":
        """The induced subforest on ``nodes`` (edges with both ends inside)."""
        keep = sorted(set(nodes))
        pos = {v: i for i, v in enumerate(keep)}
        spec = []
        for v in keep:
            p = self.parent[v]
            if p in pos:
                spec.append(self.node_spec(v, pos[p]))
            else:
                spec.append((-1, self.ncol[v], self.ndec[v], self.odec[v], None, 0, mi_zero(self.d)))
        return make_forest(self.d, spec)

    def component_forests(self) -> list["DecoratedForest"]:
        return [self.subforest_of_nodes(c) for c in self.component_nodes()]

    def uncoloured_edge_count(self) -> int:
        return sum(1 for v in range(self.n) if self.parent[v] >= 0 and self.ecol[v] == 0)

    def edge_count(self) -> int:
        return sum(1 for p in self.parent if p >= 0)

    def coloured_nodes(self, colour: int) -> tuple[int, ...]:
        return tuple(v for v in range(self.n) if self.ncol[v] == colour)


def make_forest(d: int, nodes: Sequence[NodeSpec]) -> DecoratedForest:
    """Validate and canonicalise a forest given by per-node specs.

    Each spec is ``(parent, ncol, ndec, odec, etype, ecol, edec)`` with
    ``parent == -1`` for roots.  Raises :class:`StructuralError` naming the
    offending node or edge on any invariant violation.
    """
    n = len(nodes)
    parent = [s[0] for s in nodes]
    for v, p in enumerate(parent):
        if p >= 0 and not 0 <= p < n:
            raise StructuralError(f"node {v}: parent index {p} out of range")
    # acyclicity
    state = [0] * n
    for v in range(n):
        w = v
        seen = []
        while w >= 0 and state[w] == 0:
            seen.append(w)
            state[w] = 1
            w = parent[w]
        if w >= 0 and state[w] == 1:
            raise StructuralError(f"node {w}: parent links contain a cycle")
        for u in seen:
            state[u] = 2

    for v, (p, ncol, ndec, odec, etype, ecol, edec) in enumerate(nodes):
        if ncol not in COLOURS:
            raise StructuralError(f"node {v}: colour {ncol} not in {{0,1,2}}")
        if len(ndec) != d or any(a < 0 for a in ndec):
            raise StructuralError(f"node {v}: node decoration {ndec} not in N^{d}")
        if len(odec.poly) != d:
            raise StructuralError(f"node {v}: label dimension mismatch")
        if not odec.is_zero() and ncol == 0:
            raise StructuralError(f"node {v}: extended label on an uncoloured node")
        if p < 0:
            if etype is not None or ecol != 0 or any(edec):
                raise StructuralError(f"node {v}: root carries edge data")
            continue
        if etype is None:
            raise StructuralError(f"edge into node {v}: missing type")
        if ecol not in COLOURS:
            raise StructuralError(f"edge into node {v}: colour {ecol} not in {{0,1,2}}")
        if len(edec) != d or any(a < 0 for a in edec):
            raise StructuralError(f"edge into node {v}: decoration {edec} not in N^{d}")
        if ecol != 0:
            if nodes[p][1] != ecol or ncol != ecol:
                raise StructuralError(
                    f"edge into node {v}: coloured edge with mismatching endpoint colours"
                )
            if any(edec):
                raise StructuralError(f"edge into node {v}: decoration on a coloured edge")

    payloads = [
        repr((s[1], s[2], s[3].poly, s[3].types, s[4], s[5], s[6])).encode()
        for s in nodes
    ]
    order, key = canonical_order(parent, payloads)
    pos = {old: new for new, old in enumerate(order)}
    return DecoratedForest(
        d,
        tuple(-1 if nodes[old][0] < 0 else pos[nodes[old][0]] for old in order),
        tuple(nodes[old][1] for old in order),
        tuple(nodes[old][2] for old in order),
        tuple(nodes[old][3] for old in order),
        tuple(nodes[old][4] for old in order),
        tuple(nodes[old][5] for old in order),
        tuple(nodes[old][6] for old in order),
        bytes(key),
    )


def canonical_key(forest: DecoratedForest) -> bytes:
    """The canonical key; equal keys iff isomorphic decorated forests."""
    return forest.key


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def empty_forest(d: int) -> DecoratedForest:
    return make_forest(d, [])


def single_node(d: int, colour: int = 0, ndec: MultiIndex | None = None,
                odec: ExtendedLabel | None = None) -> DecoratedForest:
    return make_forest(
        d,
        [(-1, colour, ndec or mi_zero(d), odec or ExtendedLabel.zero(d), None, 0, mi_zero(d))],
    )


def one(d: int) -> DecoratedForest:
    """The unit tree: a bare uncoloured node."""
    return single_node(d)


def xpow(d: int, k: MultiIndex) -> DecoratedForest:
    """X^k as a tree: a bare node with polynomial decoration k."""
    return single_node(d, ndec=k)


def integ(type_name: str, k: MultiIndex, tree: DecoratedForest,
          root_colour: int = 0) -> DecoratedForest:
    """Graft ``tree`` onto a fresh root through an edge of the given type with
    decoration ``k`` (the abstract-integration constructor)."""
    if not tree.is_tree:
        raise StructuralError("abstract integration applies to a single tree")
    d = tree.d
    spec: list[NodeSpec] = [
        (-1, root_colour, mi_zero(d), ExtendedLabel.zero(d), None, 0, mi_zero(d))
    ]
    for v in range(tree.n):
        p = tree.parent[v]
        if p < 0:
            spec.append((0, tree.ncol[v], tree.ndec[v], tree.odec[v], type_name, 0, k))
        else:
            spec.append((1 + p, tree.ncol[v], tree.ndec[v], tree.odec[v],
                         tree.etype[v], tree.ecol[v], tree.edec[v]))
    return make_forest(d, spec)


def jhat(type_name: str, k: MultiIndex, tree: DecoratedForest) -> DecoratedForest:
    """Like :func:`integ` but the new root is coloured 2 (recentering)."""
    return integ(type_name, k, tree, root_colour=2)


def xi(d: int, type_name: str) -> DecoratedForest:
    """Noise sugar: a single edge of the given type below a bare root."""
    return integ(type_name, mi_zero(d), one(d))


def rlabel(alpha: ExtendedLabel, tree: DecoratedForest) -> DecoratedForest:
    """Colour the root 1 and add ``alpha`` to its extended label."""
    if not tree.is_tree:
        raise StructuralError("root labelling applies to a single tree")
    r = tree.roots()[0]
    if tree.ncol[r] == 2:
        raise StructuralError("cannot mark a recentering (colour-2) root as extracted")
    spec = tree.nodes_spec()
    p, _, ndec, odec, etype, ecol, edec = spec[r]
    spec[r] = (p, 1, ndec, odec + alpha, etype, ecol, edec)
    return make_forest(tree.d, spec)


def with_root_ndec(tree: DecoratedForest, k: MultiIndex) -> DecoratedForest:
    """Add ``k`` to the root polynomial decoration (tree product with X^k)."""
    if not tree.is_tree:
        raise StructuralError("expected a single tree")
    r = tree.roots()[0]
    spec = tree.nodes_spec()
    p, ncol, ndec, odec, etype, ecol, edec = spec[r]
    spec[r] = (p, ncol, mi_add(ndec, k), odec, etype, ecol, edec)
    return make_forest(tree.d, spec)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


def forest_product(a: DecoratedForest, b: DecoratedForest) -> DecoratedForest:
    """Disjoint union with decorations extended by zero."""
    if a.d != b.d:
        raise StructuralError("dimension mismatch in forest product")
    spec = a.nodes_spec()
    off = a.n
    for v in range(b.n):
        p = b.parent[v]
        spec.append(b.node_spec(v, p + off if p >= 0 else -1))
    return make_forest(a.d, spec)


def forest_product_many(forests: Iterable[DecoratedForest], d: int) -> DecoratedForest:
    out = empty_forest(d)
    for f in forests:
        out = forest_product(out, f)
    return out


def join_roots(forest: DecoratedForest) -> DecoratedForest:
    """Identify all roots into one node; polynomial and extended labels add,
    the colour of the joint root is the sup of the root colours."""
    if forest.is_empty:
        return forest
    roots = forest.roots()
    cols = {forest.ncol[r] for r in roots}
    if len(cols - {0}) > 1:
        raise StructuralError("cannot join roots of different nonzero colours")
    if len(roots) == 1:
        return forest
    d = forest.d
    ndec = mi_zero(d)
    odec = ExtendedLabel.zero(d)
    for r in roots:
        ndec = mi_add(ndec, forest.ndec[r])
        odec = odec + forest.odec[r]
    rootset = set(roots)
    pos = {}
    for v in range(forest.n):
        if v not in rootset:
            pos[v] = len(pos) + 1
    spec: list[NodeSpec] = [(-1, max(cols), ndec, odec, None, 0, mi_zero(d))]
    for v in range(forest.n):
        if v in rootset:
            continue
        p = forest.parent[v]
        spec.append(forest.node_spec(v, 0 if p in rootset else pos[p]))
    return make_forest(d, spec)


def tree_product(a: DecoratedForest, b: DecoratedForest) -> DecoratedForest:
    """Join-at-the-roots product; roots must have colours in {0, i} for a
    common i."""
    return join_roots(forest_product(a, b))


# ---------------------------------------------------------------------------
# Contraction and normalisation
# ---------------------------------------------------------------------------


def contract(forest: DecoratedForest) -> DecoratedForest:
    """Collapse every coloured connected region to a single node.

    Polynomial decorations add over the class; the extended label collects the
    labels of the class plus one formal generator per contracted edge type;
    edge decorations survive only on the remaining uncoloured edges.
    """
    n = forest.n
    if n == 0:
        return forest
    rep = list(range(n))

    def find(x: int) -> int:
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    erased_types: list[str] = []
    erased_owner: list[int] = []
    for v in range(n):
        if forest.parent[v] >= 0 and forest.ecol[v] != 0:
            erased_types.append(forest.etype[v])  # type: ignore[arg-type]
            erased_owner.append(v)
            a, b = find(v), find(forest.parent[v])
            if a != b:
                rep[a] = b

    classes: dict[int, list[int]] = {}
    for v in range(n):
        classes.setdefault(find(v), []).append(v)
    # class representative = tree-minimal node (closest to the root)
    depth = [0] * n
    for v in range(n):
        p = forest.parent[v]
        depth[v] = 0 if p < 0 else depth[p] + 1  # canonical order: parents first
    top: dict[int, int] = {}
    for c, members in classes.items():
        top[c] = min(members, key=lambda v: depth[v])

    order = sorted(classes, key=lambda c: depth[top[c]])
    pos = {c: i for i, c in enumerate(order)}
    d = forest.d
    spec: list[NodeSpec] = []
    for c in order:
        members = classes[c]
        t = top[c]
        ndec = mi_zero(d)
        odec = ExtendedLabel.zero(d)
        for v in members:
            ndec = mi_add(ndec, forest.ndec[v])
            odec = odec + forest.odec[v]
        for w, owner in zip(erased_types, erased_owner):
            if find(owner) == c:
                odec = odec.add_type(w)
        p = forest.parent[t]
        if p < 0:
            spec.append((-1, forest.ncol[t], ndec, odec, None, 0, mi_zero(d)))
        else:
            spec.append((pos[find(p)], forest.ncol[t], ndec, odec,
                         forest.etype[t], 0, forest.edec[t]))
    return make_forest(d, spec)


def normalize(forest: DecoratedForest, colour: int, hat: bool = False,
              join: bool = False) -> DecoratedForest:
    """Contraction followed by the colour-``i`` collapse (and optionally the
    root-label erasure and the root join).

    After contraction, the fully ``i``-coloured components are isolated
    ``i``-coloured nodes; they merge into a single node carrying the total
    polynomial decoration (dropped entirely when that total vanishes, which
    realises the identification of the bare coloured node with the unit).
    With ``hat`` the extended label is erased on ``i``-coloured roots; with
    ``join`` all roots are identified afterwards.
    """
    if colour not in (1, 2):
        raise StructuralError("normalisation colour must be 1 or 2")
    f = contract(forest)
    d = f.d
    if hat:
        spec = f.nodes_spec()
        changed = False
        for v in range(f.n):
            if f.parent[v] < 0 and f.ncol[v] == colour and not f.odec[v].is_zero():
                p, nc, ndec, _, etype, ecol, edec = spec[v]
                spec[v] = (p, nc, ndec, ExtendedLabel.zero(d), etype, ecol, edec)
                changed = True
        if changed:
            f = make_forest(d, spec)
    # collapse isolated colour-i components
    isolated = [v for v in range(f.n) if f.parent[v] < 0 and not f.children(v)
                and f.ncol[v] == colour]
    if isolated:
        total = mi_zero(d)
        for v in isolated:
            total = mi_add(total, f.ndec[v])
        keep = [v for v in range(f.n) if v not in set(isolated)]
        g = f.subforest_of_nodes(keep)
        if any(total):
            g = forest_product(g, single_node(d, colour, ndec=total))
        f = g
    if join:
        roots = f.roots()
        if any(f.ncol[r] not in (0, colour) for r in roots):
            raise StructuralError("join requires all root colours in {0, i}")
        f = join_roots(f)
    return f


# ---------------------------------------------------------------------------
# Degrees
# ---------------------------------------------------------------------------


def bigrading(forest: DecoratedForest) -> tuple[int, int]:
    """(total edge decoration, number of uncoloured non-root nodes and edges)."""
    tot = 0
    count = 0
    for v in range(forest.n):
        if forest.parent[v] >= 0:
            tot += mi_len(forest.edec[v])
            if forest.ecol[v] == 0:
                count += 1
            if forest.ncol[v] == 0:
                count += 1
        elif forest.ncol[v] == 0:
            pass  # uncoloured roots do not count
    return tot, count


def degree_minus(forest: DecoratedForest, scaling: Scaling) -> Degree:
    """Degree blind to colours and extended labels."""
    deg = Degree()
    for v in range(forest.n):
        deg = deg + Degree(scaling.mi_degree(forest.ndec[v]))
        if forest.parent[v] >= 0 and forest.ecol[v] == 0:
            deg = deg + scaling.type_degree(forest.etype[v])  # type: ignore[arg-type]
            deg = deg - Degree(scaling.mi_degree(forest.edec[v]))
    return deg


def degree_plus(forest: DecoratedForest, scaling: Scaling) -> Degree:
    """Degree counting extended labels, blind only to the colour-2 region."""
    deg = Degree()
    for v in range(forest.n):
        deg = deg + Degree(scaling.mi_degree(forest.ndec[v]))
        if forest.ncol[v] != 2:
            deg = deg + scaling.label_degree(forest.odec[v])
        if forest.parent[v] >= 0 and forest.ecol[v] != 2:
            deg = deg + scaling.type_degree(forest.etype[v])  # type: ignore[arg-type]
            deg = deg - Degree(scaling.mi_degree(forest.edec[v]))
    return deg


def degree_s(forest: DecoratedForest, scaling: Scaling) -> Degree:
    """Plain scaling degree; only defined on uncoloured, label-free forests."""
    for v in range(forest.n):
        if forest.ncol[v] != 0 or not forest.odec[v].is_zero():
            raise StructuralError(f"node {v}: plain degree needs an uncoloured tree")
        if forest.parent[v] >= 0 and forest.ecol[v] != 0:
            raise StructuralError(f"edge into node {v}: plain degree needs an uncoloured tree")
    return degree_minus(forest, scaling)


def degree(forest: DecoratedForest, which: str, scaling: Scaling):
    """Dispatch: ``bi`` (pair of naturals), ``minus``/``plus``/``s`` (Degree)."""
    if which == "bi":
        return bigrading(forest)
    if which == "minus":
        return degree_minus(forest, scaling)
    if which == "plus":
        return degree_plus(forest, scaling)
    if which == "s":
        return degree_s(forest, scaling)
    raise ValueError(f"unknown degree kind {which!r}")


# ---------------------------------------------------------------------------
# Structure predicates used across the Hopf-algebra layer
# ---------------------------------------------------------------------------


def is_bare_node(f: DecoratedForest) -> bool:
    return f.n == 1


def root_branches(tree: DecoratedForest) -> list[tuple[str, MultiIndex, DecoratedForest]]:
    """The planted factors of a tree: one (type, decoration, subtree) per root
    edge, with the subtree extracted as a stand-alone tree."""
    if not tree.is_tree:
        raise StructuralError("expected a single tree")
    r = tree.roots()[0]
    out = []
    for c in tree.children(r):
        nodes = [c]
        i = 0
        while i < len(nodes):
            nodes.extend(tree.children(nodes[i]))
            i += 1
        sub = tree.subforest_of_nodes(nodes)
        out.append((tree.etype[c], tree.edec[c], sub))
    return out


def is_planted(tree: DecoratedForest) -> bool:
    """Exactly one root edge, no root polynomial decoration, unmarked root."""
    if not tree.is_tree:
        return False
    r = tree.roots()[0]
    return (
        len(tree.children(r)) == 1
        and not any(tree.ndec[r])
        and tree.ncol[r] == 0
        and tree.odec[r].is_zero()
    )


def planted_trunk_type(tree: DecoratedForest) -> Optional[str]:
    if not is_planted(tree):
        return None
    r = tree.roots()[0]
    (c,) = tree.children(r)
    return tree.etype[c]
