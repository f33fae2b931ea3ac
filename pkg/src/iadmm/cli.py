"""Command-line front end.

Subcommands::

    iadmm solve  --synthetic d=100,n=100,r=5,scols=5,sigma=0.01,seed=42 --variant iadmm-mm
    iadmm audit  --synthetic ... --variant admm-mm
    iadmm bench  --synthetic ... --seeds 1-20 --iters 300

Exit codes: 0 converged (audit: no violated inequality), 1 configuration or
parameter error, 2 budget exhausted, 3 audit failure.
"""

import argparse
import csv
import dataclasses
import os
import sys

from . import diagnostics as diag
from . import framework as fw
from .data_io import parse_synthetic, read_matrix, synth_lrr, write_matrix
from .errors import (
    DimensionError,
    EmptyBasisError,
    InvalidParametersError,
    MatrixFormatError,
    SolverAbort,
    UnsupportedAutoError,
)
from .lrr import PRESETS, VARIANTS, build_model, lrr_config, lrr_problem

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2
EXIT_AUDIT = 3

DEFAULT_SYNTHETIC = "d=100,n=100,r=5,scols=5,sigma=0.01,seed=42"

_CONFIG_TYPES = {
    "synthetic": str, "input": str, "variant": str, "preset": str, "lambda1": float,
    "lam": float, "theta": float, "beta": float, "alpha": float, "delta": float,
    "zeta_cap": float, "mode": str, "iters": int, "seconds": float, "tol_feas": float,
    "tol_delta": float, "out": str, "seeds": str, "fault_inject": float, "seed": int,
    "c_x": float, "c_y": float,
}


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so usage errors map to exit code 1, not 2."""

    def error(self, message):
        raise ValueError(f"{self.prog}: {message}")


def _add_common(sp):
    src = sp.add_argument_group("data")
    src.add_argument("--synthetic", metavar="SPEC",
                     help=f"synthetic instance, e.g. {DEFAULT_SYNTHETIC} (default when no --input)")
    src.add_argument("--input", metavar="PATH", help="data matrix D in the text matrix format")
    mdl = sp.add_argument_group("model")
    mdl.add_argument("--variant", choices=VARIANTS, default="iadmm-mm")
    mdl.add_argument("--preset", choices=sorted(PRESETS), default="hopkins")
    mdl.add_argument("--lambda1", type=float, help="nuclear-norm weight (overrides preset)")
    mdl.add_argument("--lam", type=float, help="column penalty weight (overrides preset)")
    mdl.add_argument("--theta", type=float, help="column penalty sharpness (overrides preset)")
    slv = sp.add_argument_group("solver")
    slv.add_argument("--beta", type=float, help="penalty parameter (default: automatic)")
    slv.add_argument("--alpha", type=float, help="dual over-relaxation in (0, 2)")
    slv.add_argument("--delta", type=float, help="constant extrapolation weight for Z")
    slv.add_argument("--zeta-cap", type=float, help="cap of the Nesterov weights (iadmm-mm)")
    slv.add_argument("--c-x", type=float, help="constant C_x in (0, 1)")
    slv.add_argument("--c-y", type=float, help="constant C_y in (0, 1)")
    slv.add_argument("--mode", choices=("global", "subsequential"), default="global")
    slv.add_argument("--iters", type=int, default=500, help="outer iteration budget")
    slv.add_argument("--seconds", type=float, help="wall-clock budget")
    slv.add_argument("--tol-feas", type=float, help="relative feasibility tolerance")
    slv.add_argument("--tol-delta", type=float, help="relative step tolerance")
    slv.add_argument("--fault-inject", type=float, default=0.0, metavar="SCALE",
                     help="add SCALE * N(0, 1) noise to every block after its update")
    slv.add_argument("--seed", type=int, default=0, help="seed of the fault-injection noise")
    sp.add_argument("--out", default="iadmm_out", help="output directory")
    sp.add_argument("--config", metavar="PATH", help="key=value file; command-line flags win")


def build_parser():
    parser = _Parser(prog="iadmm", description="Inertial MM-ADMM solver for low-rank representation.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="solve one instance and write trace and matrices")
    _add_common(p_solve)
    p_audit = sub.add_parser("audit", help="solve with descent audits; exit 3 on a violated inequality")
    _add_common(p_audit)
    p_bench = sub.add_parser("bench", help="run all variants over several seeds")
    _add_common(p_bench)
    p_bench.add_argument("--seeds", default="1-20", help="seed list, e.g. 1-20 or 1,5,9")
    return parser


def read_config(path):
    """Parse a ``key=value`` file (``#`` comments) into argparse destinations."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            dest = key.replace("-", "_").lower()
            if dest not in _CONFIG_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[dest] = _CONFIG_TYPES[dest](val)
    return out


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def parse_seeds(text):
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("empty seed list")
    return seeds


def _data(args, seed=None):
    if args.input and args.synthetic:
        raise ValueError("give either --input or --synthetic, not both")
    if args.input:
        return read_matrix(args.input)
    spec = parse_synthetic(args.synthetic or DEFAULT_SYNTHETIC)
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    return synth_lrr(spec).D


def _model(args, D, variant):
    pr = PRESETS[args.preset]
    return build_model(
        D,
        args.lambda1 if args.lambda1 is not None else pr.lambda1,
        args.lam if args.lam is not None else pr.lam,
        args.theta if args.theta is not None else pr.theta,
        variant,
    )


def _config(args, variant, audit, full_budget=False):
    kw = dict(mode=args.mode, max_outer=args.iters, max_seconds=args.seconds, audit=audit,
              fault_inject=args.fault_inject, seed=args.seed)
    for name, field in (("beta", "beta"), ("alpha", "alpha"), ("delta", "delta"),
                        ("c_x", "C_x"), ("c_y", "C_y"), ("tol_feas", "tol_feas"),
                        ("tol_delta", "tol_delta")):
        val = getattr(args, name)
        if val is not None:
            kw[field] = val
    if full_budget:
        kw.setdefault("tol_feas", 0.0)
        kw.setdefault("tol_delta", 0.0)
    if args.zeta_cap is not None and variant == "iadmm-mm":
        C_x = kw.get("C_x", PRESETS[args.preset].C_x)
        kw["x_extrapolation"] = fw.NesterovZeta(C_x, cap=args.zeta_cap)
    return lrr_config(variant, args.preset, **kw)


def _solve(args, D, variant, audit, full_budget=False):
    m = _model(args, D, variant)
    p = lrr_problem(m, variant)
    c = _config(args, variant, audit, full_budget)
    return fw.run(p, c)


def _write_outputs(res, out):
    os.makedirs(out, exist_ok=True)
    diag.write_trace(res.trace, os.path.join(out, "trace.csv"), s=2)
    X, Y = res.state.x
    for name, mat in (("X", X), ("Y", Y), ("Z", res.state.y), ("W", res.state.w)):
        write_matrix(mat, os.path.join(out, f"{name}.txt"))


def _summary(variant, res):
    last = res.trace[-1] if res.trace else None
    status = "converged" if res.converged else "budget exhausted"
    if last is None:
        return f"{variant}: no iterations run ({status})"
    return (f"{variant}: {status} after {res.iterations} iterations, "
            f"objective {last.objective:.10g}, feasibility {last.feas:.3e}")


def cmd_solve(args):
    D = _data(args)
    res = _solve(args, D, args.variant, audit=False)
    _write_outputs(res, args.out)
    print(_summary(args.variant, res))
    return EXIT_OK if res.converged else EXIT_BUDGET


def cmd_audit(args):
    D = _data(args)
    res = _solve(args, D, args.variant, audit=True)
    _write_outputs(res, args.out)
    print(_summary(args.variant, res))
    hit = diag.first_violation(res.trace)
    if hit is not None:
        k, name = hit
        print(f"audit failed: {name} violated at iteration {k}", file=sys.stderr)
        return EXIT_AUDIT
    print(f"audit passed: {len(res.trace)} iterations, no violated inequality")
    return EXIT_OK


def cmd_bench(args):
    seeds = parse_seeds(args.seeds)
    if args.input:
        raise ValueError("bench draws synthetic instances; --input is not supported")
    rows = []
    for seed in seeds:
        D = _data(args, seed)
        for variant in VARIANTS:
            res = _solve(args, D, variant, audit=False, full_budget=True)
            last = res.trace[-1]
            rows.append((seed, variant, last.objective, last.feas, res.iterations, res.converged))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "comparison.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "variant", "final_objective", "final_feasibility", "iterations", "converged"])
        for seed, variant, obj, feas, its, conv in rows:
            w.writerow([seed, variant, "%.17g" % obj, "%.17g" % feas, its, int(conv)])
    final = {(r[0], r[1]): r[2] for r in rows}
    n = len(seeds)
    wins_i = sum(final[(s, "iadmm-mm")] <= final[(s, "admm-mm")] for s in seeds)
    wins_a = sum(final[(s, "admm-mm")] <= final[(s, "linearizedadmm")] for s in seeds)
    print(f"iadmm-mm <= admm-mm in {wins_i}/{n} seeds")
    print(f"admm-mm <= linearizedadmm in {wins_a}/{n} seeds")
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "audit": cmd_audit, "bench": cmd_bench}


def main(argv=None):
    try:
        args = parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (InvalidParametersError, UnsupportedAutoError, MatrixFormatError, EmptyBasisError, DimensionError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SolverAbort as exc:
        print(f"error: solver aborted: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
