"""Rules: which trees the machinery runs over.

A rule assigns to every edge type the multisets of edge types allowed to leave
a node below it.  This module parses rule files, decides normality and
subcriticality (a min-plus fixpoint with an exact symbolic infinitesimal),
enumerates conforming decorated trees below a degree, and implements the
completeness check and the completion closure.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:  # pragma: no cover - interpreter dependent
    import tomli as _toml

from .degrees import (
    Degree,
    KAPPA,
    MultiIndex,
    Scaling,
    TypeSymbol,
    mi_add,
    mi_iter_budget,
    mi_len,
    mi_zero,
)
from .forest import (
    DecoratedForest,
    StructuralError,
    degree_s,
    integ,
    is_planted,
    make_forest,
    one,
    planted_trunk_type,
    root_branches,
    tree_product,
    with_root_ndec,
    xpow,
)

Edge = tuple[str, MultiIndex]
NodeType = tuple[Edge, ...]  # sorted with multiplicity


def node_type(edges: Iterable[Edge]) -> NodeType:
    return tuple(sorted(edges))


def nt_sub(n: NodeType, m: NodeType) -> Optional[NodeType]:
    """n minus m with multiplicity, or None if m is not contained in n."""
    rest = list(n)
    for e in m:
        try:
            rest.remove(e)
        except ValueError:
            return None
    return tuple(rest)


def nt_submultisets(n: NodeType) -> set[NodeType]:
    out: set[NodeType] = set()

    def rec(i: int, acc: tuple[Edge, ...]) -> None:
        if i == len(n):
            out.add(node_type(acc))
            return
        rec(i + 1, acc)
        rec(i + 1, acc + (n[i],))

    rec(0, ())
    return out


@dataclass(frozen=True)
class Pattern:
    """A node-type pattern: a base multiset plus an optional repeatable edge
    (standing for all multisets base + n * repeat, n >= 0)."""

    base: NodeType
    repeat: Optional[Edge] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", node_type(self.base))

    def sort_key(self):
        return (self.base, self.repeat is not None, self.repeat or ())

    def matches(self, n: NodeType) -> bool:
        rest = nt_sub(n, self.base)
        if rest is None:
            return False
        if not rest:
            return True
        return self.repeat is not None and all(e == self.repeat for e in rest)

    def expansions(self, max_repeat: int) -> Iterator[NodeType]:
        if self.repeat is None:
            yield self.base
            return
        for n in range(max_repeat + 1):
            yield node_type(self.base + (self.repeat,) * n)


class RuleError(ValueError):
    """Malformed rule file or rule data."""


class Rule:
    """A rule over a scaling: per-type sets of node-type patterns."""

    def __init__(self, scaling: Scaling, entries: dict[str, Sequence[Pattern]],
                 name: str = "rule"):
        self.scaling = scaling
        self.name = name
        self.entries: dict[str, tuple[Pattern, ...]] = {}
        for t in scaling.types:
            pats = tuple(dict.fromkeys(entries.get(t, ())))
            if not pats:
                raise RuleError(f"type {t!r}: a rule must allow at least one node type")
            self.entries[t] = pats
        for t in entries:
            if t not in scaling.types:
                raise RuleError(f"rule entry for undeclared type {t!r}")
        self._hash = hash(
            (
                scaling,
                tuple(
                    sorted(
                        ((t, p) for t, ps in self.entries.items() for p in ps),
                        key=lambda tp: (tp[0],) + tp[1].sort_key(),
                    )
                ),
            )
        )

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Rule)
            and self.scaling == other.scaling
            and self.entries == other.entries
        )

    @property
    def d(self) -> int:
        return self.scaling.d

    def has_repeats(self) -> bool:
        return any(p.repeat is not None for ps in self.entries.values() for p in ps)

    def allows(self, t: str, n: NodeType) -> bool:
        return any(p.matches(n) for p in self.entries[t])

    def allows_some(self, n: NodeType) -> bool:
        return any(self.allows(t, n) for t in self.entries)

    def concrete_node_types(self, max_repeat: int = 0) -> dict[str, set[NodeType]]:
        """Finite expansions of all patterns (repeats unrolled up to the cap)."""
        return {
            t: {n for p in ps for n in p.expansions(max_repeat)}
            for t, ps in self.entries.items()
        }

    def extended(self, new: dict[str, set[NodeType]], name: Optional[str] = None) -> "Rule":
        entries: dict[str, list[Pattern]] = {t: list(ps) for t, ps in self.entries.items()}
        for t, nts in new.items():
            have = entries.setdefault(t, [])
            for n in sorted(nts):
                p = Pattern(n)
                if not any(q.matches(n) for q in have):
                    have.append(p)
        return Rule(self.scaling, entries, name or self.name)

    def entry_count(self) -> int:
        return sum(len(ps) for ps in self.entries.values())


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_edge(raw, d: int, where: str) -> Edge:
    if isinstance(raw, str):
        return (raw, mi_zero(d))
    if isinstance(raw, list) and raw and isinstance(raw[0], str):
        if len(raw) == 1:
            return (raw[0], mi_zero(d))
        if len(raw) == 2 and isinstance(raw[1], list):
            k = tuple(int(a) for a in raw[1])
            if len(k) != d or any(a < 0 for a in k):
                raise RuleError(f"{where}: edge decoration must lie in N^{d}")
            return (raw[0], k)
    raise RuleError(f"{where}: edge entries look like \"type\" or [\"type\", [k...]]")


def rule_from_dict(data: dict, name: str = "rule") -> Rule:
    try:
        sc = data["scaling"]
        s = [Fraction(str(x)) for x in sc["s"]]
    except KeyError as exc:
        raise RuleError(f"missing [scaling] section or key {exc}") from None
    if any(x < 1 for x in s):
        raise RuleError("[scaling]: all entries of s must be >= 1")
    d = int(sc.get("d", len(s)))
    if d != len(s):
        raise RuleError("[scaling]: d does not match the length of s")
    types = []
    for spec in data.get("types", []):
        try:
            types.append(TypeSymbol(spec["name"], Degree.parse(str(spec["degree"]))))
        except KeyError as exc:
            raise RuleError(f"[[types]]: missing key {exc}") from None
        except ValueError as exc:
            raise RuleError(f"[[types]] {spec.get('name')!r}: {exc}") from None
    if not types:
        raise RuleError("no [[types]] declared")
    scaling = Scaling(s, types)
    entries: dict[str, list[Pattern]] = {}
    for t, pats in data.get("rule", {}).items():
        if t not in scaling.types:
            raise RuleError(f"[[rule.{t}]]: undeclared type {t!r}")
        for i, p in enumerate(pats):
            where = f"[[rule.{t}]] #{i + 1}"
            if "node" not in p:
                raise RuleError(f"{where}: missing node entry")
            base = node_type(_parse_edge(e, d, where) for e in p["node"])
            rep = _parse_edge(p["repeat"], d, where) if "repeat" in p else None
            for nm, _ in base + ((rep,) if rep else ()):
                if nm not in scaling.types:
                    raise RuleError(f"{where}: undeclared type {nm!r}")
            entries.setdefault(t, []).append(Pattern(base, rep))
    return Rule(scaling, entries, name)


def parse_rule(text: str, name: str = "rule") -> Rule:
    """Parse a TOML rule file (see the shipped data files for the format)."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise RuleError(f"TOML syntax error: {exc}") from None
    return rule_from_dict(data, name)


def load_rule(path) -> Rule:
    from pathlib import Path

    p = Path(path)
    return parse_rule(p.read_text(encoding="utf-8"), name=p.stem)


# ---------------------------------------------------------------------------
# Normality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalityVerdict:
    normal: bool
    witness: Optional[tuple[str, NodeType, NodeType]] = None  # (type, M, N)

    def __bool__(self) -> bool:
        return self.normal


def is_normal(rule: Rule, repeat_probe: int = 2) -> NormalityVerdict:
    """Noise entries must be exactly the empty node type and every entry set
    must be closed under sub-multisets.  For repeat-marked patterns the
    closure is probed on expansions with up to ``repeat_probe`` repetitions
    (sub-multisets of larger expansions are covered by the same patterns)."""
    for t in rule.scaling.noise_types():
        pats = rule.entries[t]
        if any(p.base or p.repeat is not None for p in pats):
            bad = next(p for p in pats if p.base or p.repeat)
            return NormalityVerdict(False, (t, (), bad.base))
    for t in rule.scaling.kernel_types():
        seen: set[NodeType] = set()
        for p in rule.entries[t]:
            for n in p.expansions(repeat_probe):
                seen.add(n)
        for n in sorted(seen):
            for m in sorted(nt_submultisets(n)):
                if not rule.allows(t, m):
                    return NormalityVerdict(False, (t, m, n))
    return NormalityVerdict(True)


# ---------------------------------------------------------------------------
# Subcriticality: the min-plus fixpoint
# ---------------------------------------------------------------------------

_INF = None  # sentinel for +infinity in the iteration


@dataclass
class RegMap:
    """The regularity assignment reg: types -> Q + Q*kappa (or +/- infinity),
    together with the subcriticality verdict."""

    values: dict[str, Optional[Degree]]
    subcritical: bool
    iterations: int
    divergent: tuple[str, ...] = ()

    def reg(self, t: str) -> Degree:
        v = self.values[t]
        if v is None:
            raise RuleError(f"reg({t}) is not finite")
        return v

    def reg_edge(self, scaling: Scaling, e: Edge) -> Degree:
        return self.reg(e[0]) - Degree(scaling.mi_degree(e[1]))

    def reg_node(self, scaling: Scaling, n: NodeType) -> Degree:
        out = Degree()
        for e in n:
            out = out + self.reg_edge(scaling, e)
        return out


def _pattern_reg(rule: Rule, vals: dict[str, Optional[Degree]], p: Pattern):
    """reg of a pattern under the current map; None is +inf, 'div' is -inf."""
    total = Degree()
    for t, k in p.base:
        v = vals[t]
        if v is None:
            return None
        total = total + v - Degree(rule.scaling.mi_degree(k))
    if p.repeat is not None:
        t, k = p.repeat
        v = vals[t]
        if v is None:
            return None
        edge = v - Degree(rule.scaling.mi_degree(k))
        if edge.is_negative():
            return "div"
    return total


def compute_reg(rule: Rule, max_iter: int = 1000) -> RegMap:
    """Iterate the min-plus recursion ``reg(t) = |t| - kappa + inf reg(N)``
    from +infinity; a finite fixpoint certifies subcriticality (the strict
    defining inequality then holds because kappa is a positive
    infinitesimal), divergence reports the offending types."""
    scaling = rule.scaling
    vals: dict[str, Optional[Degree]] = {t: None for t in scaling.types}
    for it in range(1, max_iter + 1):
        new: dict[str, Optional[Degree]] = {}
        diverged: list[str] = []
        for t in scaling.types:
            best = None
            saw_div = False
            for p in rule.entries[t]:
                r = _pattern_reg(rule, vals, p)
                if r == "div":
                    saw_div = True
                    continue
                if r is None:
                    continue
                if best is None or r < best:
                    best = r
            if saw_div and best is None:
                diverged.append(t)
                new[t] = None
                continue
            if best is None:
                new[t] = None
            else:
                new[t] = scaling.type_degree(t) - KAPPA + best
        if diverged:
            return RegMap(new, False, it, tuple(sorted(diverged)))
        if new == vals:
            finite = all(v is not None for v in new.values())
            ok = finite and _verify_reg(rule, new)
            return RegMap(new, ok, it)
        vals = new
    # no fixpoint within the budget: report the still-moving types
    moving = tuple(sorted(t for t in scaling.types))
    return RegMap(vals, False, max_iter, moving)


def _verify_reg(rule: Rule, vals: dict[str, Optional[Degree]]) -> bool:
    """The strict defining inequality, checked by direct substitution."""
    for t in rule.scaling.types:
        best = None
        for p in rule.entries[t]:
            r = _pattern_reg(rule, vals, p)
            if r == "div":
                return False
            if r is None:
                return False
            if best is None or r < best:
                best = r
        assert best is not None
        if not (vals[t] < rule.scaling.type_degree(t) + best):  # type: ignore[operator]
            return False
    return True


def _kappa_ok(rule: Rule, reg: RegMap, kappa: Fraction) -> bool:
    scaling = rule.scaling
    for t in scaling.types:
        vals = []
        for p in rule.entries[t]:
            r = _pattern_reg(rule, reg.values, p)
            if r in (None, "div"):
                return False
            if p.repeat is not None and reg.reg_edge(scaling, p.repeat).eval_at(kappa) < 0:
                return False
            vals.append(r.eval_at(kappa))
        if reg.reg(t).eval_at(kappa) + kappa > scaling.type_degree(t).eval_at(kappa) + min(vals):
            return False
    return True


def choose_kappa(rule: Rule, reg: RegMap) -> Fraction:
    """A concrete positive rational at which the symbolic fixpoint inequality
    ``reg(t) + kappa <= |t| + inf reg(N)`` survives evaluation; used only to
    obtain integer enumeration bounds."""
    kappa = Fraction(1, 2)
    for _ in range(64):
        if _kappa_ok(rule, reg, kappa):
            return kappa
        kappa /= 2
    raise RuleError("could not find a concrete kappa for the enumeration bounds")


def _phi_budget(rule: Rule, gamma: Degree, kappa: Fraction, cap: int) -> Fraction:
    """A numeric budget dominating ``deg.eval_at(kappa)`` over all trees of
    symbolic degree <= gamma with at most ``cap`` edges (conservative when
    some type carries a positive infinitesimal part)."""
    maxb = max((t.degree.b for t in rule.scaling.types.values()), default=Fraction(0))
    slack = max(gamma.b, Fraction(0)) + max(maxb, Fraction(0)) * cap
    return gamma.a + kappa * slack


# ---------------------------------------------------------------------------
# Conformity
# ---------------------------------------------------------------------------


def strip_marks(forest: DecoratedForest) -> DecoratedForest:
    """Forget colours and extended labels (the symbol-level shadow)."""
    from .degrees import ExtendedLabel

    d = forest.d
    spec = []
    for v in range(forest.n):
        p = forest.parent[v]
        spec.append((p, 0, forest.ndec[v], ExtendedLabel.zero(d),
                     forest.etype[v], 0, forest.edec[v]))
    return make_forest(d, spec)


def node_type_at(tree: DecoratedForest, v: int) -> NodeType:
    return node_type(
        (tree.etype[c], tree.edec[c]) for c in tree.children(v)
    )


def conforms(rule: Rule, tree: DecoratedForest, strong: bool = False) -> bool:
    """Per-node multiset check against the rule; ``strong`` also constrains
    the root.  The input must be an uncoloured, label-free tree."""
    if not tree.is_tree:
        raise StructuralError("conformity applies to single trees")
    for v in range(tree.n):
        if tree.ncol[v] != 0 or not tree.odec[v].is_zero():
            raise StructuralError("conformity applies to unmarked trees")
    r = tree.roots()[0]
    for v in range(tree.n):
        nt = node_type_at(tree, v)
        if v == r:
            if strong and not rule.allows_some(nt):
                return False
        else:
            if not rule.allows(tree.etype[v], nt):
                return False
    return True


# ---------------------------------------------------------------------------
# Enumeration of conforming trees
# ---------------------------------------------------------------------------


class _Enumerator:
    """Root-upward generation of strongly conforming decorated trees with a
    degree bound, pruned by the reg-based budget from the finiteness proof."""

    def __init__(self, rule: Rule, reg: RegMap, kappa: Fraction, max_edges: int):
        if not reg.subcritical:
            raise RuleError("enumeration requires a subcritical rule")
        self.rule = rule
        self.scaling = rule.scaling
        self.reg = reg
        self.kappa = kappa
        self.max_edges = max_edges
        self.d = rule.scaling.d
        self._planted: dict[tuple[Edge, Fraction, int], list] = {}
        # concrete node types, repeats unrolled only as far as the edge cap
        self.node_types: dict[str, list[NodeType]] = {
            t: sorted(nts)
            for t, nts in rule.concrete_node_types(max_repeat=max_edges).items()
        }

    def phi(self, deg: Degree) -> Fraction:
        return deg.eval_at(self.kappa)

    def planted(self, e: Edge, budget: Fraction, max_edges: int):
        """All planted trees with trunk ``e``, phi-degree <= budget and at
        most ``max_edges`` edges, as (tree, phi-degree, edges)."""
        t, k = e
        lower = self.phi(self.reg.reg_edge(self.scaling, e))
        if budget < lower or max_edges < 1:
            return []
        key = (e, budget, max_edges)
        hit = self._planted.get(key)
        if hit is not None:
            return hit
        out = []
        trunk = self.phi(self.scaling.type_degree(t)) - self.scaling.mi_degree(k)
        for inner, ideg, iedges in self.inner_trees(t, budget - trunk, max_edges - 1):
            out.append((integ(t, k, inner), trunk + ideg, iedges + 1))
        self._planted[key] = out
        return out

    def inner_trees(self, t: str, budget: Fraction, max_edges: int):
        """Trees allowed below an edge of type ``t`` (node type in R(t)),
        including polynomial decorations, within the budget."""
        out = []
        seen: set = set()
        for nt in self.node_types[t]:
            if len(nt) > max_edges:
                continue
            lower = self.phi(self.reg.reg_node(self.scaling, nt))
            if budget < lower:
                continue
            for combo, cdeg, cedges in self._branches(nt, budget, max_edges):
                base = one(self.d)
                for tree in combo:
                    base = tree_product(base, tree)
                # polynomial decoration at this node
                for m in mi_iter_budget(self.d, self.scaling.s, budget - cdeg):
                    dec = with_root_ndec(base, m) if any(m) else base
                    if dec in seen:
                        continue
                    seen.add(dec)
                    out.append((dec, cdeg + self.scaling.mi_degree(m), cedges))
        return out

    def _branches(self, nt: NodeType, budget: Fraction, max_edges: int):
        """Choices of planted subtrees realising the node type, canonically
        ordered within groups of equal edge type to avoid duplicates."""
        groups: list[tuple[Edge, int]] = []
        for e in sorted(set(nt)):
            groups.append((e, nt.count(e)))
        lower_tail = [Fraction(0)] * (len(groups) + 1)
        for i in range(len(groups) - 1, -1, -1):
            e, cnt = groups[i]
            lower_tail[i] = lower_tail[i + 1] + cnt * (
                self.phi(self.reg.reg_edge(self.scaling, e)) + self.kappa
            )

        def rec(i: int, budget: Fraction, max_edges: int):
            if i == len(groups):
                yield (), Fraction(0), 0
                return
            e, cnt = groups[i]
            tail_lower = lower_tail[i + 1]
            cands = self.planted(e, budget - tail_lower - (cnt - 1) * (
                self.phi(self.reg.reg_edge(self.scaling, e)) + self.kappa
            ), max_edges)

            def pick(j: int, left: int, budget: Fraction, max_edges: int, acc):
                if left == 0:
                    for rest, rdeg, redges in rec(i + 1, budget, max_edges):
                        deg = sum((a[1] for a in acc), Fraction(0))
                        edges = sum(a[2] for a in acc)
                        yield tuple(a[0] for a in acc) + rest, deg + rdeg, edges + redges
                    return
                need_rest = (left - 1) * (
                    self.phi(self.reg.reg_edge(self.scaling, e)) + self.kappa
                ) + tail_lower
                for jj in range(j, len(cands)):
                    tree, deg, edges = cands[jj]
                    if deg > budget - need_rest or edges > max_edges - (left - 1):
                        continue
                    yield from pick(jj, left - 1, budget - deg, max_edges - edges,
                                    acc + [(tree, deg, edges)])

            yield from pick(0, cnt, budget, max_edges, [])

        yield from rec(0, budget, max_edges)


def edge_bound(rule: Rule, reg: RegMap, gamma: Degree, kappa: Fraction) -> int:
    """The edge-count bound from the finiteness argument:
    kappa * |E| <= |tree| + sup_t(|t| - reg(t)) at the chosen kappa."""
    sup = max(
        (rule.scaling.type_degree(t) - reg.reg(t)).eval_at(kappa)
        for t in rule.scaling.types
    )
    # iterate once: the budget itself depends mildly on the edge cap
    cap = 0
    for _ in range(4):
        val = _phi_budget(rule, gamma, kappa, cap) + sup
        new = 0 if val < 0 else int(val / kappa) + 1
        if new == cap:
            break
        cap = new
    return cap


def enumerate_trees(rule: Rule, reg: RegMap, gamma: Degree,
                    strict: bool = False, max_edges: Optional[int] = None,
                    kappa: Optional[Fraction] = None) -> list[DecoratedForest]:
    """All decorated trees strongly conforming to the rule with plain degree
    <= gamma (or < gamma with ``strict``), built root-upward with the
    reg-budget pruning; optionally capped at ``max_edges`` edges."""
    kappa = kappa if kappa is not None else choose_kappa(rule, reg)
    cap = edge_bound(rule, reg, gamma, kappa)
    if max_edges is not None:
        cap = min(cap, max_edges)
    enum = _Enumerator(rule, reg, kappa, cap)
    out: set[DecoratedForest] = set()
    gphi = _phi_budget(rule, gamma, kappa, cap)
    seen_shapes: set = set()
    for t in rule.scaling.types:
        for tree, _, _ in enum.inner_trees(t, gphi, cap):
            if tree in seen_shapes:
                continue
            seen_shapes.add(tree)
            deg = degree_s(tree, rule.scaling)
            if (deg < gamma if strict else deg <= gamma):
                if conforms(rule, tree, strong=True):
                    out.add(tree)
    return sorted(out, key=lambda f: (f.edge_count(), f.key))


def brute_force_trees(rule: Rule, gamma: Degree, max_edges: int,
                      max_poly: int = 2, strict: bool = False) -> list[DecoratedForest]:
    """Independent unpruned generator: grow every strongly conforming tree up
    to the edge bound with polynomial decorations up to ``max_poly`` per
    node, then filter by degree.  Only suitable as a small-scale oracle."""
    d = rule.scaling.d
    node_types = rule.concrete_node_types(max_repeat=max_edges)

    def all_trees(trunk: str, edges_left: int) -> list[DecoratedForest]:
        out = []
        for nt in sorted(node_types[trunk]):
            if len(nt) > edges_left:
                continue
            for combo in _combos(nt, edges_left - len(nt)):
                base = one(d)
                for tr in combo:
                    base = tree_product(base, tr)
                out.append(base)
        return out

    def _combos(nt: NodeType, spare: int) -> Iterator[tuple[DecoratedForest, ...]]:
        if not nt:
            yield ()
            return
        (t, k), rest = nt[0], node_type(nt[1:])
        for inner in all_trees(t, spare):
            e_in = inner.edge_count()
            if e_in > spare:
                continue
            for tail in _combos(rest, spare - e_in):
                yield (integ(t, k, inner),) + tail

    out: set[DecoratedForest] = set()
    for t in rule.scaling.types:
        for shape in all_trees(t, max_edges):
            for decorated in _decorations(shape, rule.scaling, max_poly):
                deg = degree_s(decorated, rule.scaling)
                if (deg < gamma if strict else deg <= gamma):
                    if conforms(rule, decorated, strong=True):
                        out.add(decorated)
    return sorted(out, key=lambda f: (f.edge_count(), f.key))


def _decorations(shape: DecoratedForest, scaling: Scaling, max_poly: int):
    """All polynomial node decorations with total unscaled length <= max_poly."""
    d = shape.d
    n = shape.n

    def rec(v: int, budget: int):
        if v == n:
            yield []
            return
        for m in mi_iter_budget(d, [Fraction(1)] * d, Fraction(budget)):
            for rest in rec(v + 1, budget - mi_len(m)):
                yield [m] + rest

    for decs in rec(0, max_poly):
        spec = []
        for v in range(n):
            p, ncol, _, odec, etype, ecol, edec = shape.node_spec(v, shape.parent[v])
            spec.append((p, ncol, decs[v], odec, etype, ecol, edec))
        yield make_forest(d, spec)


# ---------------------------------------------------------------------------
# The negative generator set and the basis families
# ---------------------------------------------------------------------------


def trees_minus(rule: Rule, reg: RegMap) -> list[DecoratedForest]:
    """Negative-degree strongly conforming trees with undecorated root that
    are not planted with a positive trunk type (the extraction generators
    consumed by completeness and renormalisation)."""
    out = []
    for tree in enumerate_trees(rule, reg, Degree(), strict=True):
        r = tree.roots()[0]
        if any(tree.ndec[r]):
            continue
        t = planted_trunk_type(tree)
        if t is not None and rule.scaling.type_degree(t).is_positive():
            continue
        out.append(tree)
    return out


def basis(rule: Rule, which: str, bound: Degree, reg: Optional[RegMap] = None,
          max_edges: Optional[int] = None) -> list[DecoratedForest]:
    """Basis families: ``B_circ`` (strongly conforming trees up to the degree
    bound), ``B_circ_neg`` (negative ones), ``B_circ_sharp`` / ``gens_minus``
    (negative, not planted with positive trunk), ``gens_plus`` (polynomial
    generators and positive planted generators up to the bound)."""
    reg = reg or compute_reg(rule)
    if which == "B_circ":
        return enumerate_trees(rule, reg, bound, max_edges=max_edges)
    if which == "B_circ_neg":
        return enumerate_trees(rule, reg, Degree(), strict=True, max_edges=max_edges)
    if which in ("B_circ_sharp", "gens_minus"):
        neg = enumerate_trees(rule, reg, Degree(), strict=True, max_edges=max_edges)
        out = []
        for tree in neg:
            t = planted_trunk_type(tree)
            if t is not None and rule.scaling.type_degree(t).is_positive():
                continue
            out.append(tree)
        return out
    if which == "gens_plus":
        scaling = rule.scaling
        gens: set[DecoratedForest] = set()
        for i in range(1, scaling.d + 1):
            from .degrees import mi_unit

            gens.add(xpow(scaling.d, mi_unit(scaling.d, i)))
        trees = enumerate_trees(rule, reg, bound, max_edges=max_edges)
        for tree in trees:
            deg = degree_s(tree, scaling)
            for t in scaling.kernel_types():
                td = scaling.type_degree(t)
                top = (deg + td).a  # |k|_s must stay below this
                for k in mi_iter_budget(scaling.d, scaling.s, top):
                    g = deg + td - Degree(scaling.mi_degree(k))
                    if g.is_positive() and g <= bound:
                        gens.add(integ(t, k, tree))
        return sorted(gens, key=lambda f: (f.edge_count(), f.key))
    raise ValueError(f"unknown basis family {which!r}")


# ---------------------------------------------------------------------------
# Completeness
# ---------------------------------------------------------------------------


def partial_m(n: NodeType, m: MultiIndex) -> set[NodeType]:
    """All ways of distributing the derivative ``m`` over the edges of ``n``."""
    d = len(m)
    out: set[NodeType] = set()

    def rec(i: int, left: MultiIndex, acc: tuple[Edge, ...]) -> None:
        if i == len(n):
            if not any(left):
                out.add(node_type(acc))
            return
        t, k = n[i]
        for mi in mi_iter_budget(d, [Fraction(1)] * d, Fraction(mi_len(left))):
            if all(a <= b for a, b in zip(mi, left)):
                rec(i + 1, tuple(b - a for a, b in zip(mi, left)),
                    acc + ((t, mi_add(k, mi)),))

    rec(0, m, ())
    return out


def substitute(n: NodeType, at: NodeType, repl: Sequence[NodeType]) -> Optional[NodeType]:
    """Replace one copy of ``at`` inside ``n`` by the union of ``repl``."""
    rest = nt_sub(n, at)
    if rest is None:
        return None
    acc = list(rest)
    for r in repl:
        acc.extend(r)
    return node_type(acc)


def completion_data(rule: Rule, tree: DecoratedForest,
                    max_repeat: int = 6) -> tuple[dict[int, set[NodeType]], dict[int, list]]:
    """The possible node types seen along each edge after extractions below
    it, computed leaves-down, plus the per-node product sets.

    Returns ``(nbar, msets)`` where ``nbar[child-node]`` is the set for the
    edge into that node, and ``msets[node]`` is the list of per-edge sets for
    the node's outgoing edges (its substitution choices).
    """
    if not conforms(rule, tree, strong=True):
        raise RuleError("completion data requires a strongly conforming tree")
    node_types = rule.concrete_node_types(max_repeat=max(max_repeat, tree.edge_count()))
    nbar: dict[int, set[NodeType]] = {}
    msets: dict[int, list] = {}
    order = sorted(range(tree.n), key=lambda v: -_depth(tree, v))
    for v in order:
        kids = tree.children(v)
        msets[v] = [None] * len(kids)
        for j, c in enumerate(kids):
            msets[v][j] = sorted(nbar[c])
        if tree.parent[v] < 0:
            continue
        t = tree.etype[v]
        own = node_type_at(tree, v)
        if not kids:
            nbar[v] = set(node_types[t])
            continue
        acc: set[NodeType] = set()
        for n in node_types[t]:
            if nt_sub(n, own) is None:
                continue
            for repl in _product_sets(msets[v]):
                s = substitute(n, own, repl)
                if s is not None:
                    acc.add(s)
        nbar[v] = acc
    return nbar, msets


def _product_sets(sets: list) -> Iterator[tuple[NodeType, ...]]:
    if not sets:
        yield ()
        return
    for head in sets[0]:
        for tail in _product_sets(sets[1:]):
            yield (head,) + tail


def _depth(tree: DecoratedForest, v: int) -> int:
    d = 0
    while tree.parent[v] >= 0:
        v = tree.parent[v]
        d += 1
    return d


def _mset_at_root(rule: Rule, tree: DecoratedForest) -> Iterator[tuple[NodeType, ...]]:
    _, msets = completion_data(rule, tree)
    yield from _product_sets(msets[tree.roots()[0]])


def _completion_additions(rule: Rule, tree: DecoratedForest,
                          weak_inequality: bool) -> dict[str, set[NodeType]]:
    """Node types forced by extracting ``tree``; the closure map uses the
    non-strict degree window, the check the strict one."""
    scaling = rule.scaling
    tau_deg = degree_s(tree, scaling)
    root_nt = node_type_at(tree, tree.roots()[0])
    out: dict[str, set[NodeType]] = {}
    ms = list(_mset_at_root(rule, tree))
    node_types = rule.concrete_node_types(max_repeat=max(6, tree.edge_count() + 2))
    for t in scaling.types:
        for n in node_types[t]:
            if nt_sub(n, root_nt) is None:
                continue
            for repl in ms:
                s = substitute(n, root_nt, repl)
                if s is None:
                    continue
                for m in mi_iter_budget(scaling.d, scaling.s, -tau_deg.a):
                    md = Degree(scaling.mi_degree(m)) + tau_deg
                    keep = (md <= Degree()) if weak_inequality else md.is_negative()
                    if not keep:
                        continue
                    for nd in partial_m(s, m):
                        if not rule.allows(t, nd):
                            out.setdefault(t, set()).add(nd)
    return out


@dataclass(frozen=True)
class CompletenessVerdict:
    complete: bool
    witness: Optional[tuple[str, NodeType]] = None
    tree: Optional[DecoratedForest] = None

    def __bool__(self) -> bool:
        return self.complete


def is_complete(rule: Rule, reg: Optional[RegMap] = None) -> CompletenessVerdict:
    """Whether extracting any negative generator keeps all derived node types
    inside the rule (strict degree window)."""
    reg = reg or compute_reg(rule)
    if not reg.subcritical:
        raise RuleError("completeness is defined for subcritical rules")
    for tree in trees_minus(rule, reg):
        missing = _completion_additions(rule, tree, weak_inequality=False)
        for t, nts in sorted(missing.items()):
            if nts:
                return CompletenessVerdict(False, (t, sorted(nts)[0]), tree)
    return CompletenessVerdict(True)


def complete(rule: Rule, max_iter: int = 12) -> Rule:
    """Iterate the closure map to a fixpoint (with the non-strict window, so
    the output is complete for the strict check); subcriticality of the
    output is re-verified with the original regularity map."""
    reg = compute_reg(rule)
    if not reg.subcritical:
        raise RuleError("completion is defined for subcritical rules")
    current = rule
    for it in range(max_iter):
        additions: dict[str, set[NodeType]] = {}
        for tree in trees_minus(current, reg):
            for t, nts in _completion_additions(current, tree, weak_inequality=True).items():
                additions.setdefault(t, set()).update(nts)
        # close under sub-multisets to preserve normality
        closed: dict[str, set[NodeType]] = {}
        for t, nts in additions.items():
            news = set()
            for n in nts:
                for m in nt_submultisets(n):
                    if not current.allows(t, m):
                        news.add(m)
            if news:
                closed[t] = news
        if not closed:
            if not _verify_reg(current, reg.values):
                raise RuleError("completion broke subcriticality (unexpected)")
            return current
        current = current.extended(closed, name=rule.name + "-completed")
    raise RuleError(
        f"no completion fixpoint within {max_iter} rounds; last additions: "
        + ", ".join(sorted(closed))
    )
