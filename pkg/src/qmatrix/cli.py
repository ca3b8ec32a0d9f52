"""Command-line front end.

Every command prints a human-readable report (or JSON with ``--json``)
and can write the JSON report to ``-o``.  Errors exit with the code of
their category; see ``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, dsl
from .compiler import CompilerConfig, compile, deviation, execute, leakage
from .densesim.registry import MatrixRegistry
from .errors import QmatError
from .estimators import (
    CIRCUIT,
    IDEAL,
    estimate_determinant,
    estimate_inner_product,
    estimate_quadratic_form,
    estimate_schatten_p,
    estimate_trace,
    quadratic_form_program,
)
from .functions import DEFAULT_FUNCTIONS, lookup

EXIT_CODES = {"OK": 0, "INTERNAL": 1, "PARSE": 2, "DIM": 3, "BUDGET": 4, "DOMAIN": 5, "STAT": 6}


class CliError(QmatError):
    category = "PARSE"


# ------------------------------------------------------------------- inputs
def _expr_text(value):
    if value.startswith("@"):
        try:
            return Path(value[1:]).read_text().strip()
        except OSError as exc:
            raise CliError(f"cannot read expression file: {exc}") from None
    return value


def _registry(paths):
    try:
        return MatrixRegistry.from_files(paths or [])
    except OSError as exc:
        raise CliError(f"cannot read matrix file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"matrix file is not valid JSON: {exc}") from None


def _functions(aliases):
    if not aliases:
        return None
    table = dict(DEFAULT_FUNCTIONS)
    for item in aliases:
        name, sep, target = item.partition("=")
        if not sep or not name or not target:
            raise CliError(f"--function expects NAME=BUILTIN, got {item!r}")
        table[name] = dataclasses.replace(lookup(target), name=name)
    return table


def parse_vector(text):
    """A vector from inline text ("1,0.5j,2") or a JSON file of numbers or [re, im] pairs."""
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read vector file {text!r}: {exc}") from None
        if isinstance(data, dict):
            data = data.get("entries", data.get("vector"))
        try:
            return np.array([complex(z[0], z[1]) if isinstance(z, list) else complex(z) for z in data])
        except (TypeError, ValueError, IndexError):
            raise CliError(f"vector file {text!r} must hold numbers or [re, im] pairs") from None
    try:
        return np.array([complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()])
    except ValueError:
        raise CliError(f"cannot parse vector {text!r}") from None


def _load(args):
    functions = _functions(args.function)
    registry = _registry(args.matrices)
    node = dsl.parse(_expr_text(args.expr), registry, functions)
    return node, registry, functions


# ------------------------------------------------------------------ reports
def budget_tree(budget):
    """Indented rendering of the budget entries, one line per lowered node."""
    lines = []
    for b in sorted(budget, key=lambda e: [int(p) if p.isdigit() else -1 for p in e["path"].split("/")]):
        depth = b["path"].count("/")
        reps = f" n={b['reps']}" if b["reps"] != 1 else ""
        lines.append(
            f"{'  ' * depth}{b['kind']:<8} eps_node={b['eps_node']:.3g} eps={b['eps']:.3g} t={b['t']:.4g}{reps}"
        )
    return "\n".join(lines)


def _text_report(report):
    out = [f"command: {report['command']}", f"expression: {report.get('expression', '-')}", f"seed: {report['seed']}"]
    res = report.get("result", {})
    if "budget" in report:
        out.append("budget tree:")
        out.append(budget_tree(report["budget"]))
    if "query_counts" in report:
        qc = ", ".join(f"{k}: {v}" for k, v in sorted(report["query_counts"].items()))
        out.append(f"query counts: {qc} (total {report['query_count']})")
    for key in ("deviation", "leakage", "within_eps"):
        if key in report:
            out.append(f"{key}: {report[key]}")
    if res:
        v = res["value"]
        vs = f"{v['re']:.6g}{v['im']:+.6g}j" if isinstance(v, dict) else f"{v:.6g}"
        out.append(f"value: {vs}  (std error {res['std_error']:.3g}, samples {res['samples']})")
        if res.get("bound") is not None:
            out.append(f"error bound: {res['bound']:.4g} at failure probability {res['confidence']}")
    return "\n".join(out)


def _program_report(program):
    data = program.to_json()
    return {"budget": data["budget"], "query_counts": data["query_counts"],
            "query_count": int(sum(data["query_counts"].values()))}


# ----------------------------------------------------------------- commands
def cmd_compile(args):
    node, registry, functions = _load(args)
    config = CompilerConfig(c_add=args.c_add, c_mult=args.c_mult)
    program = compile(node, registry, args.t, args.eps, functions=functions, config=config,
                      controlled=args.controlled)
    report = {"program": program.to_json(), **_program_report(program)}
    return report


def cmd_verify(args):
    node, registry, functions = _load(args)
    config = CompilerConfig(c_add=args.c_add, c_mult=args.c_mult)
    if args.reps:
        rows = []
        for r in args.reps:
            program = compile(node, registry, args.t, args.eps, functions=functions, config=config, reps=r)
            root = next(b for b in program.budget if b.path == "root")
            rows.append({"reps": r, "step_count": root.step_count, "deviation": deviation(program)})
        return {"sweep": rows}
    program = compile(node, registry, args.t, args.eps, functions=functions, config=config)
    u = execute(program)
    dev = deviation(program, u)
    return {**_program_report(program), "deviation": dev, "leakage": leakage(program, u),
            "within_eps": bool(dev <= args.eps)}


def cmd_expect(args):
    node, registry, functions = _load(args)
    program, bound = quadratic_form_program(node, registry, args.qpe_bits, args.eps, functions=functions)
    res = estimate_quadratic_form(parse_vector(args.x), parse_vector(args.y), program, args.shots, args.qpe_bits,
                                  seed=args.seed, norm_bound=bound, floor=args.floor, functions=functions)
    return {"result": res.to_json(), "query_count": program.query_count,
            "query_counts": program.query_counts()}


def cmd_innerprod(args):
    res = estimate_inner_product(parse_vector(args.x), parse_vector(args.y), args.shots, seed=args.seed)
    return {"result": res.to_json()}


def _sampling_kw(args, functions):
    return dict(T=args.T, rel_target=args.eps, confidence=args.confidence, mode=args.mode, qpe_bits=args.qpe_bits,
                seed=args.seed, functions=functions)


def cmd_trace(args):
    node, registry, functions = _load(args)
    res = estimate_trace(node, registry, shift=args.shift, **_sampling_kw(args, functions))
    return {"result": res.to_json()}


def cmd_schatten(args):
    node, registry, functions = _load(args)
    res = estimate_schatten_p(node, registry, args.p, **_sampling_kw(args, functions))
    return {"result": res.to_json()}


def cmd_det(args):
    node, registry, functions = _load(args)
    res = estimate_determinant(node, registry, **_sampling_kw(args, functions))
    return {"result": res.to_json()}


COMMANDS = {
    "compile": cmd_compile,
    "verify": cmd_verify,
    "expect": cmd_expect,
    "trace": cmd_trace,
    "schatten": cmd_schatten,
    "det": cmd_det,
    "innerprod": cmd_innerprod,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qmatrix", description="Compile and sample matrix-function expressions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", help="write the JSON report here")
    common.add_argument("--json", action="store_true", help="print JSON instead of the text report")

    expr = argparse.ArgumentParser(add_help=False)
    expr.add_argument("-e", "--expr", required=True, help="expression text, or @file")
    expr.add_argument("-m", "--matrices", action="append", default=[], help="matrix JSON file (repeatable)")
    expr.add_argument("--function", action="append", default=[], metavar="NAME=BUILTIN",
                      help="alias a built-in eigenvalue function, e.g. h=sin")

    compiling = argparse.ArgumentParser(add_help=False)
    compiling.add_argument("-t", type=float, default=1.0, help="evolution time")
    compiling.add_argument("--eps", type=float, default=0.01, help="spectral-norm error budget")
    compiling.add_argument("--c-add", type=float, default=2.0)
    compiling.add_argument("--c-mult", type=float, default=2.0)

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("-T", type=int, default=None, help="eigenvalue samples (auto-sized when omitted)")
    sampling.add_argument("--eps", type=float, default=0.2, help="total relative error target")
    sampling.add_argument("--confidence", type=float, default=0.01, help="failure probability a")
    sampling.add_argument("--mode", choices=[IDEAL, CIRCUIT], default=IDEAL)
    sampling.add_argument("--qpe-bits", type=int, default=8)

    p = sub.add_parser("compile", parents=[common, expr, compiling], help="lower an expression to a program")
    p.add_argument("--controlled", action="store_true")
    p = sub.add_parser("verify", parents=[common, expr, compiling], help="compare the program with the oracle")
    p.add_argument("--reps", type=lambda s: [int(x) for x in s.split(",")], default=None,
                   help="comma-separated root repetition counts; prints a CSV error sweep")
    p.add_argument("--csv", action="store_true", help="emit the sweep as CSV")

    p = sub.add_parser("expect", parents=[common, expr], help="estimate x^dag f y")
    p.add_argument("-x", required=True)
    p.add_argument("-y", required=True)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--qpe-bits", type=int, default=6)
    p.add_argument("--eps", type=float, default=1e-4, help="compile error budget")
    p.add_argument("--floor", type=float, default=1e-3, help="minimum postselection probability")

    p = sub.add_parser("innerprod", parents=[common], help="Hadamard-test inner product")
    p.add_argument("-x", required=True)
    p.add_argument("-y", required=True)
    p.add_argument("--shots", type=int, default=10_000)

    p = sub.add_parser("trace", parents=[common, expr, sampling], help="estimate Tr f")
    p.add_argument("--shift", type=float, default=None, help="spectral shift c (auto when omitted)")
    p = sub.add_parser("schatten", parents=[common, expr, sampling], help="estimate the Schatten p-norm")
    p.add_argument("-p", type=float, required=True)
    sub.add_parser("det", parents=[common, expr, sampling], help="estimate det f for positive definite f")
    return parser


def _dump(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    base = {"command": args.command, "seed": args.seed}
    if getattr(args, "expr", None):
        base["expression"] = args.expr
    try:
        body = COMMANDS[args.command](args)
    except QmatError as exc:
        err = {**base, "error": {"category": exc.category, "type": type(exc).__name__, "message": str(exc)}}
        stderr.write(f"error [{exc.category}] {type(exc).__name__}: {exc}\n")
        if args.output:
            Path(args.output).write_text(_dump(err))
        if getattr(args, "json", False):
            stdout.write(_dump(err))
        return EXIT_CODES[exc.category]
    report = {**base, **body}
    if args.output:
        Path(args.output).write_text(_dump(report))
    if "sweep" in report and getattr(args, "csv", False):
        stdout.write("reps,step_count,deviation\n")
        for row in report["sweep"]:
            stdout.write(f"{row['reps']},{row['step_count']!r},{row['deviation']!r}\n")
    elif args.json:
        stdout.write(_dump(report))
    else:
        stdout.write(_text_report(report) + "\n")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
