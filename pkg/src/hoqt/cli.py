"""``hoqt`` command-line front end.

Exit codes: 0 verdict true / pass, 1 verdict false / fail, 2 usage or parse
error, 3 numeric error.  Diagnostics go to standard error on one line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import cells, scenarios, superop
from .errors import (
    DimensionError,
    HoqtError,
    InstantiationError,
    NormalizationError,
    NotRepresentableError,
)
from .expr import format_expr, parse
from .superop import ChoiOperator
from .theory import Theory

EXIT_TRUE, EXIT_FALSE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (DimensionError, InstantiationError, NormalizationError)


class _Out:
    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream
        self.color = os.environ.get("HOQT_COLOR", "0") == "1"

    def verdict(self, word: str, good: bool) -> str:
        if not self.color:
            return word
        code = "32" if good else "31"
        return f"\x1b[{code}m{word}\x1b[0m"

    def emit(self, text: str, payload: dict) -> None:
        if self.fmt == "json":
            self.stream.write(json.dumps(payload, sort_keys=True) + "\n")
        else:
            self.stream.write(text if text.endswith("\n") else text + "\n")


def _theory(args, required=True) -> Optional[Theory]:
    if args.theory is None:
        if required:
            raise _Usage("this command needs a theory file (-t)")
        return None
    return Theory.load(args.theory)


class _Usage(Exception):
    pass


# ---------------------------------------------------------------- commands


def cmd_parse(args, out):
    th = _theory(args, required=False)
    e = parse(args.expr, th)
    text = format_expr(e)
    out.emit(text, {"command": "parse", "expr": text})
    return EXIT_TRUE


def _binary(args, out, fn, yes, no, name):
    th = _theory(args)
    verdict = fn(parse(args.lhs, th), parse(args.rhs, th), th)
    word = yes if verdict else no
    out.emit(out.verdict(word, verdict), {"command": name, "verdict": verdict, "result": word})
    return EXIT_TRUE if verdict else EXIT_FALSE


def cmd_eq(args, out):
    return _binary(args, out, cells.eq, "EQUAL", "NOT EQUAL", "eq")


def cmd_subset(args, out):
    return _binary(args, out, cells.subset, "SUBSET", "NOT SUBSET", "subset")


def cmd_nosig(args, out):
    th = _theory(args, required=False)
    sub, atoms = cells.nosig_subset(parse(args.expr, th))
    text = format_expr(sub)
    negated = {w: atoms.negated(w) for w in atoms.wires}
    out.emit(text, {"command": "nosig", "expr": text, "negated": negated})
    return EXIT_TRUE


def cmd_canonical(args, out):
    th = _theory(args)
    try:
        form = cells.canonical_form(parse(args.expr, th), th, args.max_wires)
    except NotRepresentableError as exc:
        witness = list(exc.witness) if exc.witness is not None else None
        out.emit(
            out.verdict("NOT REPRESENTABLE", False) + f": {exc}",
            {"command": "canonical", "representable": False, "reason": str(exc), "witness": witness},
        )
        return EXIT_FALSE
    text = str(form)
    terms = [[list(p) for p in term] for term in form.terms]
    out.emit(text, {"command": "canonical", "representable": True, "form": text, "terms": terms})
    return EXIT_TRUE


def cmd_orders(args, out):
    th = _theory(args)
    rep = cells.order_report(parse(args.expr, th), th, args.max_wires)
    lines = []
    for name in ("forced", "admissible", "realizable"):
        perms = getattr(rep, name)
        lines.append(f"{name}: {len(perms)}")
        lines += [f"  {rep.chain_text(p)}" for p in perms]
    payload = {"command": "orders"}
    for name in ("forced", "admissible", "realizable"):
        payload[name] = [list(p) for p in getattr(rep, name)]
    out.emit("\n".join(lines), payload)
    return EXIT_TRUE


def cmd_matrix(args, out):
    th = _theory(args)
    e = parse(args.expr, th)
    S = superop.projector_matrix(e, th)
    norm = float(superop.expected_norm(e, th))
    # vec index runs over (column multi-index, row multi-index)
    text = superop.format_matrix(S.dims + S.dims, norm, S.matrix)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        text = f"wrote {args.output}: rank {S.rank} of {S.D**2}"
    out.emit(text, {"command": "matrix", "dims": list(S.dims), "rank": S.rank, "norm": norm, "output": args.output})
    return EXIT_TRUE


def _load_operator(path, wires) -> ChoiOperator:
    return ChoiOperator.load(path, wires)


def cmd_validate(args, out):
    th = _theory(args)
    e = parse(args.expr, th)
    wires = cells.wires_of(e, th)
    W = _load_operator(args.matrix, wires)
    v = superop.validate(W, e, th, args.tol)
    word = "PASS" if v.passed else "FAIL"
    text = (
        f"{out.verdict(word, v.passed)}\n"
        f"positive: {v.positive} (min eigenvalue {v.min_eigenvalue:.3e})\n"
        f"trace: {v.trace_ok} (residual {v.trace_residual:.3e})\n"
        f"in structure: {v.in_structure} (residual {v.projector_residual:.3e})"
    )
    out.emit(text, {"command": "validate", **v.to_json()})
    return EXIT_TRUE if v.passed else EXIT_FALSE


def cmd_signal(args, out):
    th = _theory(args)
    e_A = parse(args.structure, th)
    wires = tuple(args.wires) if args.wires else th.labels
    W = _load_operator(args.matrix, wires)
    group = cells.wires_of(e_A, th)
    quiet = superop.signaling_test(W, group, e_A, th, args.tol)
    word = "NO SIGNALING" if quiet else "SIGNALING"
    text = f"{out.verdict(word, quiet)} from {','.join(group)}"
    out.emit(text, {"command": "signal", "group": list(group), "no_signaling": quiet})
    return EXIT_TRUE if quiet else EXIT_FALSE


def cmd_game(args, out):
    th = _theory(args, required=False)
    game = scenarios.load_game(args.game, th)
    table = scenarios.play(game, args.tol)
    lines = []
    rows = []
    for s, probs in table.rows():
        for o in np.ndindex(*table.outcomes):
            p = float(probs[o])
            lines.append(f"p({','.join(map(str, o))}|{','.join(map(str, s))}) = {p:.12f}")
            rows.append({"settings": list(s), "outcomes": list(o), "p": p})
    out.emit("\n".join(lines), {"command": "game", "table": rows})
    return EXIT_TRUE


def cmd_selftest(args, out):
    rep = scenarios.regression_battery(args.tol, force_generic=args.force_generic)
    if out.fmt == "json":
        out.emit("", {"command": "selftest", **rep.to_json()})
    else:
        lines = []
        for item in rep.items:
            word = out.verdict(f"{item.status:5}", item.ok)
            lines.append(f"{word} {item.name}" + (f"  {item.detail}" if item.detail else ""))
        lines.append(f"{sum(i.ok for i in rep.items)}/{len(rep.items)} items ok")
        out.emit("\n".join(lines), {})
    return EXIT_TRUE if rep.ok else EXIT_FALSE


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-t", "--theory", metavar="FILE", help="theory file (JSON)")
    common.add_argument("--tol", type=float, default=superop.DEFAULT_TOL, help="numeric tolerance")
    common.add_argument("--max-wires", type=int, default=cells.DEFAULT_MAX_WIRES, help="permutation limit")
    common.add_argument("--format", choices=("text", "json"), default="text")

    parser = argparse.ArgumentParser(prog="hoqt", description="Projector algebra of higher-order quantum theories.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    add("parse", cmd_parse, "echo an expression with minimal parentheses").add_argument("expr")
    for name, fn, text in (
        ("eq", cmd_eq, "decide equality of two structures"),
        ("subset", cmd_subset, "decide inclusion of the first structure in the second"),
    ):
        p = add(name, fn, text)
        p.add_argument("lhs")
        p.add_argument("rhs")
    add("nosig", cmd_nosig, "no-signaling subset by bar counting").add_argument("expr")
    add("canonical", cmd_canonical, "canonical union of prec chains").add_argument("expr")
    add("orders", cmd_orders, "forced, admissible and realizable causal orders").add_argument("expr")
    p = add("matrix", cmd_matrix, "emit the superoperator projector as a matrix file")
    p.add_argument("expr")
    p.add_argument("-o", "--output", metavar="FILE")
    p = add("validate", cmd_validate, "check an operator against a structure")
    p.add_argument("expr")
    p.add_argument("matrix")
    p = add("signal", cmd_signal, "test whether a wire group can signal to the rest")
    p.add_argument("matrix")
    p.add_argument("structure", help="structure of what is plugged in at the group")
    p.add_argument("--wires", nargs="+", metavar="LABEL", help="tensor order of the matrix file (default: theory order)")
    add("game", cmd_game, "play a signaling game").add_argument("game")
    p = add("selftest", cmd_selftest, "run the regression battery")
    p.add_argument("--force-generic", action="store_true", help="run comb/network items on generic wires")
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_TRUE
    out = _Out(args.format, stdout)
    try:
        return args.func(args, out)
    except _Usage as exc:
        stderr.write(f"hoqt: error: {exc}\n")
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        stderr.write(f"hoqt: numeric error: {exc}\n")
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        stderr.write(f"hoqt: numeric error: {exc}\n")
        return EXIT_NUMERIC
    except HoqtError as exc:
        stderr.write(f"hoqt: error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
