"""Tree-expression grammar: parsing and deterministic printing.

Grammar (UTF-8, whitespace-insensitive)::

    forest  := expr ('.' expr)*
    expr    := term ('*' term)*
    term    := 'one'
             | 'X' ['^(' ints ')'] | 'X_' digits
             | 'I[' type [';(' ints ')'] '](' expr ')'
             | 'Xi_' type
             | 'R[(' ints ')' [';' lincomb] '](' expr ')'
             | type '(' expr ')'            -- sugar for I[type](expr)
             | type                         -- sugar for Xi_type on noise types
    lincomb := [-]int '*' type (('+'|'-') int '*' type)*

Printing is canonical: given a canonical forest value the emitted string is
unique, components and branches are ordered deterministically, and parsing the
string back reproduces the value.
"""

from __future__ import annotations

import re
from typing import Optional

from .degrees import ExtendedLabel, MultiIndex, Scaling, mi_unit, mi_zero
from .forest import (
    DecoratedForest,
    StructuralError,
    empty_forest,
    forest_product,
    integ,
    one,
    rlabel,
    root_branches,
    tree_product,
    with_root_ndec,
    xpow,
)


class ParseError(ValueError):
    """Syntax or type error in a tree expression, with position info."""


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"-?\d+")


class _Parser:
    def __init__(self, text: str, scaling: Scaling):
        self.text = re.sub(r"\s+", "", text)
        self.pos = 0
        self.scaling = scaling
        self.d = scaling.d

    def error(self, msg: str) -> ParseError:
        return ParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def peek(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def eat(self, s: str) -> None:
        if not self.peek(s):
            raise self.error(f"expected {s!r}")
        self.pos += len(s)

    def ident(self) -> str:
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("expected identifier")
        self.pos = m.end()
        return m.group(0)

    def int_(self) -> int:
        m = _INT.match(self.text, self.pos)
        if not m:
            raise self.error("expected integer")
        self.pos = m.end()
        return int(m.group(0))

    def ints(self) -> tuple[int, ...]:
        self.eat("(")
        vals = [self.int_()]
        while self.peek(","):
            self.eat(",")
            vals.append(self.int_())
        self.eat(")")
        if len(vals) != self.d:
            raise self.error(f"expected {self.d} components, got {len(vals)}")
        return tuple(vals)

    def lincomb(self) -> dict[str, int]:
        out: dict[str, int] = {}
        sign = 1
        if self.peek("-"):
            self.eat("-")
            sign = -1
        while True:
            n = self.int_()
            self.eat("*")
            t = self.ident()
            self._check_type(t)
            out[t] = out.get(t, 0) + sign * n
            if self.peek("+"):
                self.eat("+")
                sign = 1
            elif self.peek("-"):
                self.eat("-")
                sign = -1
            else:
                return out

    def _check_type(self, name: str) -> None:
        if name not in self.scaling.types:
            raise self.error(f"unknown type {name!r}")

    def forest(self) -> DecoratedForest:
        parts = [self.expr()]
        while self.peek("."):
            self.eat(".")
            parts.append(self.expr())
        out = empty_forest(self.d)
        for p in parts:
            out = forest_product(out, p)
        return out

    def expr(self) -> DecoratedForest:
        t = self.term()
        while self.peek("*"):
            self.eat("*")
            t = tree_product(t, self.term())
        return t

    def term(self) -> DecoratedForest:
        if self.peek("I["):
            return self._integ_term()
        if self.peek("R["):
            return self._rlabel_term()
        if self.peek("Xi_"):
            self.eat("Xi_")
            t = self.ident()
            self._check_type(t)
            return integ(t, mi_zero(self.d), one(self.d))
        if self.peek("X^"):
            self.eat("X^")
            k = self.ints()
            if any(a < 0 for a in k):
                raise self.error("negative polynomial exponent")
            return xpow(self.d, k)
        if self.peek("X_"):
            self.eat("X_")
            i = self.int_()
            return xpow(self.d, mi_unit(self.d, i))
        m = _IDENT.match(self.text, self.pos)
        if m:
            name = m.group(0)
            if name == "one":
                self.pos = m.end()
                return one(self.d)
            if name == "X":
                self.pos = m.end()
                return one(self.d)  # bare X == X^0
            if name in self.scaling.types:
                self.pos = m.end()
                if self.peek("("):
                    self.eat("(")
                    inner = self.expr()
                    self.eat(")")
                    return integ(name, mi_zero(self.d), inner)
                return integ(name, mi_zero(self.d), one(self.d))
            raise self.error(f"unknown type {name!r}")
        raise self.error("expected a tree term")

    def _integ_term(self) -> DecoratedForest:
        self.eat("I[")
        t = self.ident()
        self._check_type(t)
        k = mi_zero(self.d)
        if self.peek(";"):
            self.eat(";")
            kk = self.ints()
            if any(a < 0 for a in kk):
                raise self.error("negative edge decoration")
            k = kk
        self.eat("](")
        inner = self.expr()
        self.eat(")")
        return integ(t, k, inner)

    def _rlabel_term(self) -> DecoratedForest:
        self.eat("R[")
        poly = self.ints()
        types: dict[str, int] = {}
        if self.peek(";"):
            self.eat(";")
            types = self.lincomb()
        self.eat("](")
        inner = self.expr()
        self.eat(")")
        return rlabel(ExtendedLabel.make(poly, types), inner)


def parse_forest(text: str, scaling: Scaling, plus_root: bool = False,
                 minus_unit: bool = False) -> DecoratedForest:
    """Parse a forest expression.

    ``plus_root``: interpret the expression in the positive (recentering)
    sector, colouring the root 2 unless the result is a bare polynomial node.
    ``minus_unit``: read ``one`` as the empty forest (the unit of the forest
    algebra), as appropriate for the negative sector.
    """
    p = _Parser(text, scaling)
    f = p.forest()
    if p.pos != len(p.text):
        raise p.error("trailing input")
    if minus_unit and f.n == 1 and f.ncol[0] == 0 and not any(f.ndec[0]) and f.odec[0].is_zero():
        return empty_forest(scaling.d)
    if plus_root and not f.is_empty:
        if not f.is_tree:
            raise ParseError("positive-sector elements are single trees")
        r = f.roots()[0]
        if f.children(r) or any(f.ndec[r]):
            if f.ncol[r] == 1:
                raise ParseError("positive-sector root cannot be extraction-marked")
            if f.children(r):
                spec = f.nodes_spec()
                pr, _, ndec, odec, etype, ecol, edec = spec[r]
                spec[r] = (pr, 2, ndec, odec, etype, ecol, edec)
                from .forest import make_forest

                f = make_forest(f.d, spec)
    return f


def parse_tree(text: str, scaling: Scaling) -> DecoratedForest:
    f = parse_forest(text, scaling)
    if not f.is_tree:
        raise ParseError(f"expected a single tree, got a forest: {text!r}")
    return f


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


class PrintError(ValueError):
    """Forest not representable in the surface grammar (transient colouring)."""


def _fmt_ints(k: tuple[int, ...]) -> str:
    return "(" + ",".join(str(a) for a in k) + ")"


def _fmt_x(k: MultiIndex) -> Optional[str]:
    if not any(k):
        return None
    if sum(k) == 1:
        return f"X_{k.index(1) + 1}"
    return "X^" + _fmt_ints(k)


def _fmt_label(o: ExtendedLabel) -> str:
    out = _fmt_ints(o.poly)
    if o.types:
        parts = []
        for i, (t, n) in enumerate(o.types):
            if i == 0:
                parts.append(f"{n}*{t}")
            else:
                parts.append(f"+{n}*{t}" if n >= 0 else f"{n}*{t}")
        out += ";" + "".join(parts)
    return out


def _print_tree(tree: DecoratedForest, root_is_top: bool) -> str:
    r = tree.roots()[0]
    if any(tree.ecol[v] for v in range(tree.n) if tree.parent[v] >= 0):
        raise PrintError("forest has coloured edges; contract before printing")
    factors: list[str] = []
    x = _fmt_x(tree.ndec[r])
    if x:
        factors.append(x)
    for etype, edec, sub in root_branches(tree):
        srt = sub.roots()[0]
        noise_leaf = (
            sub.n == 1
            and not any(sub.ndec[srt])
            and sub.odec[srt].is_zero()
            and sub.ncol[srt] == 0
            and not any(edec)
        )
        if noise_leaf:
            factors.append(f"Xi_{etype}")
        elif any(edec):
            factors.append(f"I[{etype};{_fmt_ints(edec)}]({_print_tree(sub, False)})")
        else:
            factors.append(f"I[{etype}]({_print_tree(sub, False)})")
    factors.sort()
    base = "*".join(factors) if factors else "one"
    col = tree.ncol[r]
    if col == 1:
        return f"R[{_fmt_label(tree.odec[r])}]({base})"
    if col == 2:
        if not root_is_top:
            raise PrintError("interior recentering colour is not printable")
        return base
    if not tree.odec[r].is_zero():
        raise PrintError("extended label on an uncoloured node")
    return base


def print_forest(forest: DecoratedForest) -> str:
    """Canonical string form; parsing it back reproduces the value (up to the
    sector conventions for units and recentering roots)."""
    if forest.is_empty:
        return "one"
    try:
        parts = sorted(_print_tree(c, True) for c in forest.component_forests())
    except PrintError:
        return "raw:" + forest.key.hex()
    return ".".join(parts)


# ---------------------------------------------------------------------------
# LaTeX emitter
# ---------------------------------------------------------------------------


def _latex_tree(tree: DecoratedForest, root_is_top: bool) -> str:
    r = tree.roots()[0]
    factors: list[str] = []
    k = tree.ndec[r]
    if any(k):
        if sum(k) == 1:
            factors.append(f"X_{{{k.index(1) + 1}}}")
        else:
            factors.append(f"X^{{{_fmt_ints(k)}}}")
    for etype, edec, sub in root_branches(tree):
        srt = sub.roots()[0]
        if (sub.n == 1 and not any(sub.ndec[srt]) and sub.odec[srt].is_zero()
                and sub.ncol[srt] == 0 and not any(edec)):
            factors.append(f"\\Xi_{{{etype}}}")
        else:
            sup = f"^{{{_fmt_ints(edec)}}}" if any(edec) else ""
            factors.append(f"\\mathcal{{I}}_{{{etype}}}{sup}({_latex_tree(sub, False)})")
    factors.sort()
    base = "\\,".join(factors) if factors else "\\mathbf{1}"
    if tree.ncol[r] == 1:
        lbl = _fmt_label(tree.odec[r]).replace("*", "\\,")
        return f"\\mathcal{{R}}_{{{lbl}}}({base})"
    return base


def latex_forest(forest: DecoratedForest) -> str:
    if forest.is_empty:
        return "\\mathbf{1}"
    parts = sorted(_latex_tree(c, True) for c in forest.component_forests())
    return " \\cdot ".join(parts)
