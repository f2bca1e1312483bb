"""Command-line front end: ``ultrajet <subcommand> ...``.

Reports go to standard output, diagnostics to standard error.  Exit codes:
0 holds/success, 1 fails, 2 inconclusive, 64 usage error, 65 data error.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .conditions import (DiscreteSearch, check_discrete_condition, check_r_strong,
                         growth_index, kappa)
from .conjugate import ConjugateBoundaryError, phi_of, weight_matrix, young_conjugate
from .core import DEFAULT_GRID, GeometricGrid, UltrajetError, Verdict
from .expr import ExpressionDomainError, ExpressionSyntaxError
from .jets import JetFormatError, beurling_seminorms, parse_jet
from .pipeline import PipelineConfig, beurling_to_roumieu_pipeline
from .reduction import ReductionInput, build_reduction, nq_tail, validate_reduction
from .report import Report, write_csv
from .weights import WeightFunction, check_weight_axioms, infer_t_min

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _verdict_code(v: Verdict) -> int:
    return {Verdict.HOLDS: EXIT_OK, Verdict.FAILS: EXIT_FAIL}.get(v, EXIT_INCONCLUSIVE)


def _combine(verdicts) -> int:
    verdicts = list(verdicts)
    if any(v is Verdict.FAILS for v in verdicts):
        return EXIT_FAIL
    if any(v is Verdict.INCONCLUSIVE for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _weight(text: str, tmin: float | None = None) -> WeightFunction:
    if tmin is None:
        tmin = infer_t_min(text) or 1.0
    return WeightFunction.parse(text, t_min=tmin)


def _params(report: Report, args, weights=()):
    sec = report.section("parameters")
    for k, v in sorted(vars(args).items()):
        if k in ("func", "command"):
            continue
        sec.add(k, v)
    for label, w in weights:
        sec.add(f"t_min[{label}]", w.t_min)
    return sec


def _witness_table(sec, witnesses):
    if witnesses:
        sec.table(["t", "index", "value"], witnesses)


# ------------------------------------------------------------------ commands

def cmd_check_weight(args, out):
    w = _weight(args.expr, args.tmin)
    grid = GeometricGrid.parse(args.grid)
    rep = check_weight_axioms(w, grid)
    r = Report("check-weight")
    _params(r, args, [("omega", w)])
    sec = r.section("axioms")
    names = ["increasing", "moderate_growth", "log_small", "phi_convex", "concave"]
    for n in names:
        sec.add(n, getattr(rep, n).verdict)
    for n in names:
        v = getattr(rep, n)
        if v.witnesses:
            r.section(f"witnesses {n}").table(["t", "value"], [tuple(x)[:2] for x in v.witnesses])
    out.write(r.render())
    return _combine(getattr(rep, n).verdict for n in names)


def cmd_conjugate(args, out):
    w = _weight(args.expr, args.tmin)
    g = args.ygrid.split(":")
    if len(g) != 3:
        raise UsageError("--ygrid must be LO:HI:N")
    ys = np.linspace(float(g[0]), float(g[1]), int(g[2]))
    tab = young_conjugate(phi_of(w.truncated(1.0)), ys)
    r = Report("conjugate")
    _params(r, args, [("omega", w)])
    rows = list(zip(tab.y_grid, tab.values, tab.argmax))
    r.section("conjugate").table(["y", "phi_star", "argmax"], rows)
    if args.csv:
        write_csv(args.csv, ["y", "phi_star", "argmax"], rows)
    out.write(r.render())
    return EXIT_OK


def cmd_weight_matrix(args, out):
    w = _weight(args.expr, args.tmin)
    m = weight_matrix(w, args.x, args.kmax)
    r = Report("weight-matrix")
    _params(r, args, [("omega", w)])
    sec = r.section("sequence").add("overflow", m.overflow)
    rows = [(k, math.exp(lw) if lw < 709 else math.inf, lw) for k, lw in enumerate(m.log_entries)]
    sec.table(["k", "W", "log_W"], rows)
    if args.csv:
        write_csv(args.csv, ["index", "value", "log_value"], rows)
        sec.add("csv", args.csv)
    out.write(r.render())
    return EXIT_OK


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def cmd_check_pair(args, out):
    w, s = _weight(args.omega, args.tmin), _weight(args.sigma, args.tmin_sigma)
    r = Report("check-pair")
    _params(r, args, [("omega", w), ("sigma", s)])
    if args.discrete:
        search = DiscreteSearch(_floats(args.K_grid), _floats(args.H_exponents),
                                _floats(args.t0_grid), args.jmax)
        v = check_discrete_condition(w, s, search)
    else:
        v = check_r_strong(w, s, args.r, GeometricGrid.parse(args.grid))
    sec = r.section("verdict").add("condition", v.condition).add("verdict", v.verdict)
    for k in sorted(v.constants):
        sec.add(k, v.constants[k])
    _witness_table(r.section("witnesses"), v.witnesses)
    out.write(r.render())
    return _verdict_code(v.verdict)


def cmd_growth_index(args, out):
    s, w = _weight(args.sigma, args.tmin_sigma), _weight(args.omega, args.tmin)
    g = growth_index(s, w, tol=args.tol)
    r = Report("growth-index")
    _params(r, args, [("sigma", s), ("omega", w)])
    r.section("growth_index").add("gamma", g.label).add("lower", g.lower) \
        .add("upper", g.upper).add("strong", g.strong)
    out.write(r.render())
    return EXIT_OK if g.strong else EXIT_FAIL


def cmd_kappa(args, out):
    w = _weight(args.omega, args.tmin)
    q = kappa(w, args.t, args.tol)
    r = Report("kappa")
    _params(r, args, [("omega", w)])
    r.section("kappa").add("value", q.value).add("diverges", q.diverges) \
        .add("error", q.error).add("cutoff", q.cutoff)
    out.write(r.render())
    return EXIT_FAIL if q.diverges else EXIT_OK


def cmd_reduce(args, out):
    w, s = _weight(args.omega, args.tmin), _weight(args.sigma, args.tmin_sigma)
    f = _weight(args.f, args.tmin_f)
    r = Report("reduce")
    _params(r, args, [("omega", w), ("sigma", s), ("f", f)])
    disc = check_discrete_condition(w, s)
    sec = r.section("discrete condition").add("verdict", disc.verdict)
    for k in sorted(disc.constants):
        sec.add(k, disc.constants[k])
    if not disc.holds:
        _witness_table(r.section("witnesses"), disc.witnesses)
        out.write(r.render())
        return _verdict_code(disc.verdict)
    res = build_reduction(ReductionInput(w, s, f, disc.constants, args.nmax, args.nq))
    rep = validate_reduction(res)
    rows = res.sequence_rows()
    seq = r.section("sequences")
    if args.nq:
        seq.table(["n", "x", "y", "z", "nq_tail"],
                  [row + (nq_tail(s, row[1]) if row[0] > 1 else math.nan,) for row in rows])
    else:
        seq.table(["n", "x", "y", "z"], rows)
    cl = r.section("claims").add("all_hold", rep.ok)
    cl.table(["claim", "ok", "margin"], [(c.name, c.ok, c.margin) for c in rep.claims])
    cs = r.section("recertified")
    for k in sorted(rep.constants):
        cs.add(k, rep.constants[k])
    if args.csv:
        write_csv(args.csv, ["n", "x", "y", "z"], rows)
    if args.plot:
        from .plots import plot_reduction
        plot_reduction(res, args.plot)
    out.write(r.render())
    return EXIT_OK if rep.ok else EXIT_FAIL


def _read_jet(path):
    with open(path, encoding="utf-8") as fh:
        return parse_jet(fh.read())


def cmd_jet_seminorm(args, out):
    jet = _read_jet(args.jetfile)
    w = _weight(args.omega, args.tmin)
    sups = beurling_seminorms(jet, w, args.m, args.pmax)
    r = Report("jet-seminorm")
    _params(r, args, [("omega", w)])
    r.section("seminorms").add("norm", sups.norm).add("norm_at", sups.norm_at) \
        .add("seminorm", sups.seminorm).add("seminorm_at", sups.seminorm_at) \
        .table(["k", "sup"], list(enumerate(sups.per_order)))
    out.write(r.render())
    return EXIT_OK


def cmd_jet_reduce(args, out):
    jet = _read_jet(args.jetfile)
    w, s = _weight(args.omega, args.tmin), _weight(args.sigma, args.tmin_sigma)
    cfg = PipelineConfig(j_max=args.jmax, p_max=args.pmax, n_max=args.nmax)
    rep = beurling_to_roumieu_pipeline(jet, w, s, cfg)
    r = Report("jet-reduce")
    _params(r, args, [("omega", w), ("sigma", s)])
    sec = r.section("stages").add("aborted", rep.aborted)
    sec.table(["stage", "ok", "detail"], [(st.name, st.ok, st.detail) for st in rep.stages])
    if rep.artifacts.get("witness"):
        wsec = r.section("abort witness")
        for k in sorted(rep.artifacts["witness"]):
            wsec.add(k, rep.artifacts["witness"][k])
    if args.plot:
        from .plots import plot_pipeline
        plot_pipeline(rep, args.plot)
    out.write(r.render())
    return EXIT_OK if rep.ok else EXIT_FAIL


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ultrajet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def cmd(name, fn, help_):
        q = sub.add_parser(name, help=help_)
        q.set_defaults(func=fn)
        return q

    def tmin(q, *extra):
        q.add_argument("--tmin", type=float, default=None,
                       help="start of the expression's range (default: inferred)")
        for e in extra:
            q.add_argument(f"--tmin-{e}", type=float, default=None)

    q = cmd("check-weight", cmd_check_weight, "grid checks of the weight axioms")
    q.add_argument("expr")
    tmin(q)
    q.add_argument("--grid", default=str(DEFAULT_GRID))

    q = cmd("conjugate", cmd_conjugate, "Young conjugate of phi = omega o exp")
    q.add_argument("expr")
    tmin(q)
    q.add_argument("--ygrid", required=True, help="linear grid LO:HI:N")
    q.add_argument("--csv")

    q = cmd("weight-matrix", cmd_weight_matrix, "one weight sequence W^x_k")
    q.add_argument("expr")
    tmin(q)
    q.add_argument("--x", type=float, required=True)
    q.add_argument("--kmax", type=int, required=True)
    q.add_argument("--csv")

    q = cmd("check-pair", cmd_check_pair, "r-strong or discrete growth condition for a pair")
    q.add_argument("omega")
    q.add_argument("sigma")
    tmin(q, "sigma")
    mode = q.add_mutually_exclusive_group(required=True)
    mode.add_argument("--r", type=float)
    mode.add_argument("--discrete", action="store_true")
    q.add_argument("--grid", default=str(DEFAULT_GRID))
    d = DiscreteSearch()
    q.add_argument("--K-grid", default=",".join(f"{x:.17g}" for x in d.K_grid))
    q.add_argument("--H-exponents", default=",".join(f"{x:g}" for x in d.H_exponents))
    q.add_argument("--t0-grid", default=",".join(f"{x:g}" for x in d.t0_grid))
    q.add_argument("--jmax", type=int, default=d.j_max)

    q = cmd("growth-index", cmd_growth_index, "sup of s with (omega, sigma) 1/s-strong")
    q.add_argument("sigma")
    q.add_argument("omega")
    tmin(q, "sigma")
    q.add_argument("--tol", type=float, default=0.05)

    q = cmd("kappa", cmd_kappa, "log-kernel integral of omega at t")
    q.add_argument("omega")
    tmin(q)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--tol", type=float, default=1e-8)

    q = cmd("reduce", cmd_reduce, "build and validate the reduced pair")
    q.add_argument("omega")
    q.add_argument("sigma")
    tmin(q, "sigma", "f")
    q.add_argument("--f", required=True)
    q.add_argument("--nmax", type=int, required=True)
    q.add_argument("--nq", action="store_true", help="also push x_n past the tail threshold")
    q.add_argument("--csv")
    q.add_argument("--plot", help="write a figure of the reduced pair")

    q = cmd("jet-seminorm", cmd_jet_seminorm, "Beurling-type sups of a jet")
    q.add_argument("jetfile")
    q.add_argument("omega")
    tmin(q)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--pmax", type=int, required=True)

    q = cmd("jet-reduce", cmd_jet_reduce, "Beurling jet bound to Roumieu certificate")
    q.add_argument("jetfile")
    q.add_argument("omega")
    q.add_argument("sigma")
    tmin(q, "sigma")
    q.add_argument("--jmax", type=int, required=True)
    q.add_argument("--pmax", type=int, required=True)
    q.add_argument("--nmax", type=int, required=True)
    q.add_argument("--plot", help="write a figure of the growth profile")
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"ultrajet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExpressionSyntaxError, ExpressionDomainError, JetFormatError, ConjugateBoundaryError,
            UltrajetError, ValueError, OSError) as exc:
        print(f"ultrajet: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
