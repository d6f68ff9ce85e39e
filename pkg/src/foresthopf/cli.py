"""Command-line front end.

Exit codes: 0 success, 1 domain/usage error, 2 verification failure.  All
output is deterministic: reports are assembled in canonical-key order and
JSON is emitted with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .comb import LinComb, SpaceError, SpaceTag, TensorComb
from .coalgebra import delta_generic, delta_minus_ex, delta_plus_ex
from .degrees import Degree
from .forest import StructuralError
from .grammar import ParseError, latex_forest, parse_forest, print_forest
from .hopf import Character, CharacterError, antipode, seeded_character, twisted_antipode
from .renorm import Valuation, bphz_character, renorm_map, renorm_map_symbolic
from .rules import (
    Rule,
    RuleError,
    basis,
    complete,
    compute_reg,
    is_complete,
    is_normal,
    load_rule,
)
from .suites import SUITE_NAMES, SuiteParams, verify_suite


class CliError(Exception):
    pass


def _emit(payload, args) -> None:
    if getattr(args, "format", "text") == "json" or getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, indent=2, default=str))
    else:
        _emit_text(payload)


def _emit_text(payload, indent: str = "") -> None:
    if isinstance(payload, dict):
        for k in sorted(payload):
            v = payload[k]
            if isinstance(v, (dict, list)):
                print(f"{indent}{k}:")
                _emit_text(v, indent + "  ")
            else:
                print(f"{indent}{k}: {v}")
    elif isinstance(payload, list):
        for v in payload:
            _emit_text(v, indent)
    else:
        print(f"{indent}{payload}")


def _tensor_payload(t: TensorComb) -> dict:
    return {
        "left_space": t.left_tag.value,
        "right_space": t.right_tag.value,
        "terms": [
            {"left": print_forest(l), "right": print_forest(r), "coeff": str(c)}
            for (l, r), c in t.sorted_terms()
        ],
    }


def _lincomb_payload(x: LinComb) -> dict:
    return {
        "space": x.tag.value,
        "terms": [
            {"forest": print_forest(f), "coeff": str(c)} for f, c in x.sorted_terms()
        ],
    }


def _tensor_latex(t: TensorComb) -> str:
    bits = []
    for (l, r), c in t.sorted_terms():
        coeff = "" if c == 1 else f"{c}\\,"
        bits.append(f"{coeff}{latex_forest(l)} \\otimes {latex_forest(r)}")
    return " + ".join(bits) if bits else "0"


def _load_rule(args) -> Rule:
    if not getattr(args, "rule", None):
        raise CliError("a rule file is required (--rule FILE)")
    return load_rule(args.rule)


def _character_from_args(args, rule: Rule) -> Character:
    if getattr(args, "character", None):
        data = json.loads(Path(args.character).read_text(encoding="utf-8"))
        return character_from_json(data, rule)
    if getattr(args, "seed", None) is not None:
        return seeded_character(SpaceTag.T_MINUS_EX, args.seed)
    raise CliError("provide --character FILE or --seed N")


def character_from_json(data: dict, rule: Rule) -> Character:
    space = {
        "minus": SpaceTag.T_MINUS_EX,
        "plus": SpaceTag.T_PLUS_EX,
        "free_minus": SpaceTag.FREE_MINUS_HAT,
    }.get(data.get("space", "minus"))
    if space is None:
        raise CliError(f"unknown character space {data.get('space')!r}")
    values = {}
    for key, sval in data.get("values", {}).items():
        forest = parse_forest(key, rule.scaling,
                              plus_root=(space is SpaceTag.T_PLUS_EX),
                              minus_unit=(space is not SpaceTag.T_PLUS_EX))
        try:
            values[forest] = Fraction(sval)
        except ValueError:
            import sympy

            values[forest] = sympy.sympify(sval)
    return Character(space, values, fallback=lambda gen: Fraction(0))


def character_to_json(char: Character, gens) -> dict:
    space = {"T_minus_ex": "minus", "T_plus_ex": "plus", "Free_minus_hat": "free_minus"}[
        char.space.value
    ]
    values = {}
    for g in gens:
        values[print_forest(g)] = str(char.eval_forest(g))
    return {"space": space, "values": values}


def rule_to_toml(rule: Rule) -> str:
    lines = ["[scaling]", f"d = {rule.scaling.d}",
             "s = [" + ", ".join(f'"{x}"' for x in rule.scaling.s) + "]", ""]
    for name in sorted(rule.scaling.types):
        t = rule.scaling.types[name]
        lines += ["[[types]]", f'name = "{name}"', f'degree = "{t.degree}"', ""]
    for name in sorted(rule.entries):
        for p in sorted(rule.entries[name], key=lambda q: q.sort_key()):
            lines.append(f"[[rule.{name}]]")
            edges = ", ".join(
                f'["{t}", {list(k)}]' for t, k in p.base
            )
            lines.append(f"node = [{edges}]")
            if p.repeat is not None:
                t, k = p.repeat
                lines.append(f'repeat = ["{t}", {list(k)}]')
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_rule_check(args) -> int:
    rule = load_rule(args.rule_file)
    normal = is_normal(rule)
    reg = compute_reg(rule, max_iter=args.max_iter)
    payload = {
        "normal": bool(normal),
        "subcritical": reg.subcritical,
        "reg": {t: str(v) if v is not None else "+inf" for t, v in sorted(reg.values.items())},
    }
    if not normal:
        t, m, n = normal.witness
        payload["normality_witness"] = {"type": t, "missing": _nt_str(m), "inside": _nt_str(n)}
    if reg.divergent:
        payload["divergent_types"] = list(reg.divergent)
    if normal and reg.subcritical:
        verdict = is_complete(rule, reg)
        payload["complete"] = bool(verdict)
        if not verdict:
            t, nt = verdict.witness
            payload["completeness_witness"] = {"type": t, "missing": _nt_str(nt),
                                               "tree": print_forest(verdict.tree)}
    _emit(payload, args)
    return 0


def _nt_str(nt) -> str:
    return "(" + ",".join(f"{t}{list(k)}" for t, k in nt) + ")"


def cmd_rule_complete(args) -> int:
    rule = load_rule(args.rule_file)
    done = complete(rule, max_iter=args.max_iter)
    text = rule_to_toml(done)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        _emit({"written": args.output, "entries": done.entry_count()}, args)
    else:
        print(text)
    return 0


def cmd_trees_enum(args) -> int:
    from .rules import enumerate_trees

    rule = _load_rule(args)
    reg = compute_reg(rule)
    gamma = Degree.parse(args.max_degree)
    trees = enumerate_trees(rule, reg, gamma, strict=args.strict, max_edges=args.max_edges)
    payload = {
        "count": len(trees),
        "max_degree": str(gamma),
        "trees": [print_forest(t) for t in trees],
    }
    _emit(payload, args)
    return 0


def cmd_basis(args) -> int:
    rule = _load_rule(args)
    which = {
        "circ": "B_circ",
        "neg": "B_circ_neg",
        "sharp": "B_circ_sharp",
        "gens-minus": "gens_minus",
        "gens-plus": "gens_plus",
    }[args.which]
    gamma = Degree.parse(args.max_degree)
    out = basis(rule, which, gamma, max_edges=args.max_edges)
    payload = {"which": args.which, "count": len(out),
               "trees": [print_forest(t) for t in out]}
    _emit(payload, args)
    return 0


def cmd_coprod(args) -> int:
    rule = _load_rule(args)
    sc = rule.scaling
    if args.side == "minus":
        x = parse_forest(args.expr, sc, minus_unit=False)
        t = delta_minus_ex(LinComb.basis(SpaceTag.T_EX, x), sc)
    elif args.side == "plus":
        x = parse_forest(args.expr, sc)
        t = delta_plus_ex(LinComb.basis(SpaceTag.T_EX, x), sc)
    else:
        i = 1 if args.side == "generic1" else 2
        x = parse_forest(args.expr, sc)
        t = delta_generic(i, x, args.eps_cutoff)
    if args.format == "latex":
        print(_tensor_latex(t))
    else:
        _emit(_tensor_payload(t), args)
    return 0


def cmd_antipode(args) -> int:
    rule = _load_rule(args)
    sc = rule.scaling
    if args.side == "minus":
        x = parse_forest(args.expr, sc, minus_unit=True)
        out = antipode(SpaceTag.T_MINUS_EX, LinComb.basis(SpaceTag.T_MINUS_EX, x), sc)
    else:
        x = parse_forest(args.expr, sc, plus_root=True)
        out = antipode(SpaceTag.T_PLUS_EX, LinComb.basis(SpaceTag.T_PLUS_EX, x), sc)
    if args.format == "latex":
        bits = [f"{c}\\,{latex_forest(f)}" for f, c in out.sorted_terms()]
        print(" + ".join(bits) if bits else "0")
    else:
        _emit(_lincomb_payload(out), args)
    return 0


def cmd_twisted(args) -> int:
    rule = _load_rule(args)
    sc = rule.scaling
    if args.side == "minus":
        x = parse_forest(args.expr, sc, minus_unit=True)
        out = twisted_antipode("minus", LinComb.basis(SpaceTag.T_MINUS_EX, x), sc)
    else:
        x = parse_forest(args.expr, sc, plus_root=True)
        out = twisted_antipode("plus", LinComb.basis(SpaceTag.T_PLUS_EX, x), sc)
    _emit(_lincomb_payload(out), args)
    return 0


def cmd_bphz(args) -> int:
    import sympy

    rule = _load_rule(args)
    sc = rule.scaling
    reg = compute_reg(rule)
    if args.valuation:
        data = json.loads(Path(args.valuation).read_text(encoding="utf-8"))
        values = {}
        for key, sval in data.get("values", {}).items():
            forest = parse_forest(key, sc)
            try:
                values[forest] = Fraction(sval)
            except ValueError:
                values[forest] = sympy.sympify(sval)
        val = Valuation(values, fallback=lambda gen: Fraction(0))
    elif args.seed is not None:
        val = Valuation.seeded(args.seed)
    else:
        val = Valuation.symbolic()
    char = bphz_character(val, sc)
    gamma = Degree.parse(args.max_degree) if args.max_degree else Degree()
    neg = basis(rule, "B_circ_neg", gamma, reg, args.max_edges)
    from .forest import degree_s, planted_trunk_type

    report = []
    for tau in neg:
        entry = {"tree": print_forest(tau), "degree": str(degree_s(tau, sc))}
        t = planted_trunk_type(tau)
        if t is not None and sc.type_degree(t).is_positive():
            entry["character"] = None  # not an extraction generator
        else:
            entry["character"] = str(char.eval_forest(tau))
        expanded = renorm_map_symbolic(char, LinComb.basis(SpaceTag.T_EX, tau), sc)
        entry["renormalised"] = [
            {"forest": print_forest(f), "coeff": str(v)}
            for f, v in sorted(expanded.items(), key=lambda kv: kv[0].key)
        ]
        report.append(entry)
    _emit({"rule": rule.name, "trees": report}, args)
    return 0


def cmd_renorm(args) -> int:
    rule = _load_rule(args)
    sc = rule.scaling
    g = _character_from_args(args, rule)
    x = parse_forest(args.expr, sc)
    out = renorm_map(g, LinComb.basis(SpaceTag.T_EX, x), sc)
    _emit(_lincomb_payload(out), args)
    return 0


def cmd_verify(args) -> int:
    rule = _load_rule(args)
    gamma = Degree.parse(args.max_degree) if args.max_degree else None
    params = SuiteParams(rule, max_edges=args.max_edges, max_degree=gamma,
                         seed=args.seed, threads=args.threads)
    names = SUITE_NAMES if args.suite == "all" else [args.suite]
    results = [verify_suite(n, params) for n in names]
    payload = {
        "rule": rule.name,
        "max_edges": args.max_edges,
        "seed": args.seed,
        "results": [
            {"suite": r.suite, "passed": r.passed, "checked": r.checked,
             **({"counterexample": r.counterexample} if r.counterexample else {})}
            for r in results
        ],
    }
    _emit(payload, args)
    return 0 if all(r.passed for r in results) else 2


def cmd_export(args) -> int:
    rule = _load_rule(args)
    x = parse_forest(args.expr, rule.scaling)
    if args.format == "latex":
        print(latex_forest(x))
    elif args.format == "json":
        _emit(_lincomb_payload(LinComb.basis(SpaceTag.T_EX, x)), args)
    else:
        print(print_forest(x))
    return 0


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_common(p, rule_flag: bool = True) -> None:
    if rule_flag:
        p.add_argument("--rule", help="rule file (TOML)")
    p.add_argument("--format", choices=["text", "json", "latex"], default="text")
    p.add_argument("--json", action="store_true", help="shorthand for --format json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="foresthopf",
        description="Exact Hopf-algebra machinery on decorated rooted forests",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    rule = sub.add_parser("rule", help="rule-file operations")
    rsub = rule.add_subparsers(dest="rule_verb", required=True)
    rc = rsub.add_parser("check", help="normality / subcriticality / completeness report")
    rc.add_argument("rule_file")
    rc.add_argument("--max-iter", type=int, default=1000)
    _add_common(rc, rule_flag=False)
    rc.set_defaults(fn=cmd_rule_check)
    rk = rsub.add_parser("complete", help="closure of a rule under extractions")
    rk.add_argument("rule_file")
    rk.add_argument("-o", "--output")
    rk.add_argument("--max-iter", type=int, default=12)
    _add_common(rk, rule_flag=False)
    rk.set_defaults(fn=cmd_rule_complete)

    trees = sub.add_parser("trees", help="tree enumeration")
    tsub = trees.add_subparsers(dest="trees_verb", required=True)
    te = tsub.add_parser("enum", help="conforming trees below a degree")
    te.add_argument("--max-degree", required=True, help='degree bound "a+b*k"')
    te.add_argument("--strict", action="store_true", help="strict inequality")
    te.add_argument("--max-edges", type=int, default=None)
    _add_common(te)
    te.set_defaults(fn=cmd_trees_enum)

    b = sub.add_parser("basis", help="basis families")
    b.add_argument("--which", choices=["circ", "neg", "sharp", "gens-minus", "gens-plus"],
                   required=True)
    b.add_argument("--max-degree", default="0")
    b.add_argument("--max-edges", type=int, default=None)
    _add_common(b)
    b.set_defaults(fn=cmd_basis)

    cp = sub.add_parser("coprod", help="coproducts")
    cp.add_argument("side", choices=["minus", "plus", "generic1", "generic2"])
    cp.add_argument("expr")
    cp.add_argument("--eps-cutoff", type=int, default=0)
    _add_common(cp)
    cp.set_defaults(fn=cmd_coprod)

    an = sub.add_parser("antipode", help="antipodes")
    an.add_argument("side", choices=["minus", "plus"])
    an.add_argument("expr")
    _add_common(an)
    an.set_defaults(fn=cmd_antipode)

    tw = sub.add_parser("twisted", help="twisted antipodes")
    tw.add_argument("side", choices=["minus", "plus"])
    tw.add_argument("expr")
    _add_common(tw)
    tw.set_defaults(fn=cmd_twisted)

    bp = sub.add_parser("bphz", help="renormalisation-character report")
    bp.add_argument("--valuation", help="valuation JSON file")
    bp.add_argument("--seed", type=int, default=None)
    bp.add_argument("--max-degree", default=None)
    bp.add_argument("--max-edges", type=int, default=None)
    _add_common(bp)
    bp.set_defaults(fn=cmd_bphz)

    rn = sub.add_parser("renorm", help="apply a renormalisation character")
    rn.add_argument("expr")
    rn.add_argument("--character", help="character JSON file")
    rn.add_argument("--seed", type=int, default=None)
    _add_common(rn)
    rn.set_defaults(fn=cmd_renorm)

    vf = sub.add_parser("verify", help="identity suites")
    vf.add_argument("--suite", default="all", choices=["all", *SUITE_NAMES])
    vf.add_argument("--max-edges", type=int, default=5)
    vf.add_argument("--max-degree", default=None)
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--threads", type=int, default=1)
    _add_common(vf)
    vf.set_defaults(fn=cmd_verify)

    ex = sub.add_parser("export", help="canonical / LaTeX form of an expression")
    ex.add_argument("expr")
    _add_common(ex)
    ex.set_defaults(fn=cmd_export)

    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (CliError, RuleError, ParseError, StructuralError, SpaceError,
            CharacterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:  # console entry point
    sys.exit(run())
