"""Command-line entry point.

Every subcommand writes CSV to stdout (or ``--out FILE``; ``--format json``
for a JSON record) and a run manifest with the parameters, seeds, version,
wall-clock time and a SHA-256 of the output.  ``rerun MANIFEST`` replays a
run and checks that the output is unchanged.

CSV columns by subcommand:
  bounds   k,p,L_k,U_k,width
  coeffs   k,a_k
  series   mode,p,h_max,value,tail_bound,formal,terms
  speed    label,steps,estimate,std_error,seed,stream
  graph    stream,n,p,longest,seed,method
  sweep    p,steps,estimate,std_error,seed
  brw      N,speed,std_error,prediction
  uniform  k,k_times_wk,mode
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__, brw, chain, montecarlo, selftest, words
from .config import ALTERNATIVE, CANONICAL
from .chain import ConvergenceError, ReducibleChainError, render
from .distribution import Geometric, as_fraction, parse_distribution, parse_number
from .exact import SingularMatrixError

log = logging.getLogger("binspeed")

NUMERIC_ERRORS = (ArithmeticError, ConvergenceError, ReducibleChainError,
                  SingularMatrixError, brw.BracketError, RuntimeError)


class Output:
    """Tabular result plus optional extra fields for the JSON record."""

    def __init__(self, columns: Sequence[str], rows: list, **extra):
        self.columns = list(columns)
        self.rows = rows
        self.extra = extra

    def csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def json(self, command: str) -> str:
        rec = {"command": command, "columns": self.columns,
               "rows": [list(r) for r in self.rows]}
        rec.update(self.extra)
        return json.dumps(rec, indent=2, default=str) + "\n"


# --- argument types ---------------------------------------------------------

def _probability(text: str):
    try:
        p = parse_number(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 <= p <= 1:
        raise argparse.ArgumentTypeError(f"probability out of range: {text}")
    return p


def _open_probability(text: str):
    p = _probability(text)
    if not 0 < p < 1:
        raise argparse.ArgumentTypeError(f"p must lie in (0, 1): {text}")
    return p


def _int_list(text: str) -> list[int]:
    try:
        out = []
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 3,6,9 or 1-12: {text!r}")


def _prob_list(text: str) -> list:
    return [_open_probability(t) for t in text.split(",")]


def _dist(text: str):
    try:
        return parse_distribution(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _grid(text: str) -> list[float]:
    try:
        return montecarlo.parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return v


# --- subcommands ------------------------------------------------------------

def cmd_bounds(a) -> Output:
    mode = chain.EXACT if a.exact else (chain.ITERATIVE if a.iterative else None)
    rows = []
    for k in a.k:
        for p in a.p:
            if mode == chain.EXACT:
                p = as_fraction(p)
            lo, hi = chain.cp_bounds(k, p, mode)
            rows.append((k, render(p), render(lo), render(hi), render(hi - lo)))
    return Output(["k", "p", "L_k", "U_k", "width"], rows)


def cmd_coeffs(a) -> Output:
    X, label = (ALTERNATIVE, "alternative") if a.config == "alt" else (CANONICAL, "canonical")
    table = words.coeff_table(a.kmax, X, label, workers=a.threads)
    rows = list(enumerate(table.values))
    return Output(["k", "a_k"], rows, configuration=label,
                  conjecture_holds=table.conjecture_holds(),
                  classes=table.diagnostics())


def cmd_series(a) -> Output:
    dist = a.dist if a.dist is not None else Geometric(float(a.p))
    if hasattr(dist, "mass_at_infinity") and dist.mass_at_infinity:
        dist = dist.conditioned()
    mode = words.SeriesMode.CESARO if a.cesaro else words.SeriesMode.PLAIN
    res = words.series_speed(dist, CANONICAL, a.hmax, mode)
    p = getattr(dist, "p", "")
    row = (mode.value, p, a.hmax, repr(float(res.value)), f"{res.tail_bound:.6g}",
           "formal" if res.formal else "absolute", res.terms)
    return Output(["mode", "p", "h_max", "value", "tail_bound", "formal", "terms"], [row],
                  partial_sums=res.partial_sums)


def cmd_speed(a) -> Output:
    ests = montecarlo.simulate_replicas(a.dist, a.steps, a.replicas, a.seed,
                                        threads=a.threads)
    rows = [(e.label, e.steps, repr(float(e.mean)), repr(float(e.std_error)), e.seed,
             e.stream) for e in ests]
    extra = {}
    if len(ests) > 1:
        m, se = montecarlo.pooled(ests)
        extra = {"pooled_mean": m, "pooled_std_error": se}
    return Output(["label", "steps", "estimate", "std_error", "seed", "stream"], rows, **extra)


def cmd_graph(a) -> Output:
    p = float(a.p)
    vals = montecarlo.sample_longest_paths(a.n, p, a.replicas, a.seed, a.method, a.threads)
    rows = [(r, a.n, p, int(v), a.seed, a.method) for r, v in enumerate(vals)]
    return Output(["stream", "n", "p", "longest", "seed", "method"], rows,
                  mean=float(vals.mean()))


def cmd_sweep(a) -> Output:
    pts = montecarlo.sweep_cp(a.grid, a.steps, a.seed, a.threads)
    return Output(["p", "steps", "estimate", "std_error", "seed"],
                  montecarlo.sweep_rows(pts), grid=a.grid)


def cmd_brw(a) -> Output:
    spec = brw.BrwSpec(a.rate)
    params = brw.brw_params(spec)
    rows = []
    for N in a.N:
        est = brw.simulate_nbrw(spec, N, a.horizon, a.seed)
        pred = brw.predicted_speed_gap(params, N) if N >= 2 else float("nan")
        rows.append((N, repr(float(est.speed.mean)), repr(float(est.speed.std_error)),
                     repr(float(pred))))
    return Output(["N", "speed", "std_error", "prediction"], rows,
                  v=params.v, phi_star=params.phi_star, tau2=params.tau2,
                  burn_in_fraction=brw.BURN_IN)


def cmd_uniform(a) -> Output:
    ks = a.k if len(a.k) > 1 else list(range(1, a.k[0] + 1))
    table = brw.uniform_table(ks, a.mode)
    rows = [(k, render(kw), m) for k, kw, m in table]
    extra = {}
    fit = [(k, float(kw)) for k, kw, _ in table if k >= 8] if a.fit else []
    if len(fit) >= 2:
        extra["log_correction_fit"] = brw.fit_log_correction(*zip(*fit))
        extra["reference_constant"] = math.pi**2 * math.e / 2
    return Output(["k", "k_times_wk", "mode"], rows, **extra)


def cmd_selftest(a) -> Output:
    rows = []
    ok = selftest.run(lambda line: rows.append(tuple(line.split(" ", 1))))
    out = Output(["status", "check"], rows, all_passed=ok)
    out.failed = not ok
    return out


COMMANDS = {
    "bounds": cmd_bounds, "coeffs": cmd_coeffs, "series": cmd_series,
    "speed": cmd_speed, "graph": cmd_graph, "sweep": cmd_sweep,
    "brw": cmd_brw, "uniform": cmd_uniform, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    default_threads = int(os.environ.get("BINSPEED_THREADS", "1") or 1)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--manifest", help="manifest path (default: OUT.manifest.json, "
                        "or stderr without --out)")
    common.add_argument("--threads", type=_positive_int, default=default_threads,
                        help="worker threads (default: $BINSPEED_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="binspeed", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="bracket [L_k(p), U_k(p)] on C(p)")
    p.add_argument("--k", type=_int_list, required=True)
    p.add_argument("--p", type=_prob_list, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="rational arithmetic")
    g.add_argument("--iterative", action="store_true", help="floating-point iteration")

    p = sub.add_parser("coeffs", parents=[common], help="coefficients of C(1-q)")
    p.add_argument("--kmax", type=int, required=True, choices=range(0, words.COEFF_MAX_K + 1),
                   metavar=f"0..{words.COEFF_MAX_K}")
    p.add_argument("--config", choices=("canonical", "alt"), default="canonical")

    p = sub.add_parser("series", parents=[common], help="word-series partial sums")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--p", type=_open_probability, help="geometric law with parameter p")
    src.add_argument("--dist", type=_dist, help="any law in the distribution mini-language")
    p.add_argument("--hmax", type=int, default=8)
    p.add_argument("--cesaro", action="store_true")

    p = sub.add_parser("speed", parents=[common], help="simulated front speed")
    p.add_argument("--dist", type=_dist, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=_positive_int, default=1)

    p = sub.add_parser("graph", parents=[common], help="longest paths in random DAGs")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_probability, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("dag", "coupled"), default="dag")
    p.add_argument("--replicas", type=_positive_int, default=1)

    p = sub.add_parser("sweep", parents=[common], help="growth-rate curve over a p grid")
    p.add_argument("--grid", "--p-grid", dest="grid", type=_grid,
                   default=montecarlo.parse_grid("0.02:0.02:0.98"))
    p.add_argument("--steps", type=_positive_int, default=600_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("brw", parents=[common], help="N-particle branching walk speeds")
    p.add_argument("--N", type=_int_list, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("uniform", parents=[common], help="k * w_k for uniform moves")
    p.add_argument("--k", type=_int_list, required=True,
                   help="largest k (table 1..k) or an explicit list")
    p.add_argument("--mode", choices=(chain.EXACT, chain.ITERATIVE, brw.SIMULATE))
    p.add_argument("--fit", action="store_true",
                   help="fit the (log k)^-2 correction over k >= 8")

    sub.add_parser("selftest", parents=[common], help="run the invariant checks")

    p = sub.add_parser("rerun", help="replay a manifest and compare outputs")
    p.add_argument("manifest")
    return parser


def _params(args: argparse.Namespace) -> dict:
    skip = {"format", "out", "manifest", "verbose", "command"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        if isinstance(v, Fraction):
            v = render(v)
        elif isinstance(v, list):
            v = [render(x) if isinstance(x, Fraction) else x for x in v]
        elif hasattr(v, "label"):
            v = v.label
        out[k] = v
    return out


def execute(argv: Sequence[str]):
    """Parse and run; returns ``(exit code, rendered output, manifest, args)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False)
                        else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "rerun":
        return (*_rerun(args.manifest), args)
    t0 = time.perf_counter()
    try:
        result = COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"binspeed {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 1, "", {}, args
    except ValueError as exc:
        print(f"binspeed {args.command}: {exc}", file=sys.stderr)
        return 1, "", {}, args
    text = result.json(args.command) if args.format == "json" else result.csv()
    seeds = {k: v for k, v in vars(args).items() if k == "seed"}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "params": _params(args),
        "seeds": seeds,
        "version": __version__,
        "wall_clock_s": round(time.perf_counter() - t0, 6),
        "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
    }
    code = 1 if getattr(result, "failed", False) else 0
    return code, text, manifest, args


def _rerun(path: str) -> tuple[int, str, dict]:
    with open(path) as fh:
        old = json.load(fh)
    argv = [a for a in old["argv"]]
    # drop output destinations so the replay only renders in memory
    for opt in ("--out", "--manifest"):
        while opt in argv:
            i = argv.index(opt)
            del argv[i:i + 2]
    code, text, manifest, _ = execute(argv)
    same = manifest.get("output_sha256") == old["output_sha256"]
    msg = (f"rerun {old['command']}: output {'identical' if same else 'DIFFERS'} "
           f"(sha256 {manifest.get('output_sha256', '-')[:16]})\n")
    return (0 if same and code == 0 else 1), msg, {}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        code, text, manifest, args = execute(argv)
    except SystemExit as exc:  # argparse: usage errors exit with 2
        return int(exc.code or 0)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if manifest:
        dest = getattr(args, "manifest", None) if args.command != "rerun" else None
        dest = dest or (out + ".manifest.json" if out else None)
        if dest:
            with open(dest, "w") as fh:
                fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        else:
            print(json.dumps(manifest, sort_keys=True), file=sys.stderr)
    return code
