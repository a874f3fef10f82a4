"""Command-line front end.

Subcommands map one-to-one onto library calls; this module only parses
arguments and formats output.

Examples:
  betacount count --beta-quad 1,1 --x 1 --n 2
  betacount density --beta-quad 1,1 --n 1 --out f1.csv
  betacount simulate --beta 1.8 --orbits 1000 --steps 5000 --seed 42

Caps default to the library values and can be overridden from the
environment: BETACOUNT_N_MAX, BETACOUNT_PIECE_BUDGET, BETACOUNT_ENUM_MAX_N,
BETACOUNT_OUTPUT_CAP.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from . import counting, density, garsia, random_beta
from .core import DEFAULT_TAU, BetaParam, fmt_num, make_beta, word_str
from .errors import BetaCountError

ENV_CAPS = {
    "n_max": ("BETACOUNT_N_MAX", counting.DEFAULT_N_MAX),
    "piece_budget": ("BETACOUNT_PIECE_BUDGET", density.DEFAULT_PIECE_BUDGET),
    "enum_max_n": ("BETACOUNT_ENUM_MAX_N", garsia.DEFAULT_ENUM_MAX_N),
    "output_cap": ("BETACOUNT_OUTPUT_CAP", counting.DEFAULT_OUTPUT_CAP),
}


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(ENV_CAPS[name][0])
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise BetaCountError(f"{ENV_CAPS[name][0]}={raw!r} is not an integer")


@dataclass(frozen=True)
class RunConfig:
    beta_spec: object          # float or (a, b)
    tau: float = DEFAULT_TAU
    seed: int = random_beta.DEFAULT_SEED
    n_max: int = counting.DEFAULT_N_MAX
    piece_budget: int = density.DEFAULT_PIECE_BUDGET
    enum_max_n: int = garsia.DEFAULT_ENUM_MAX_N
    output_cap: int = counting.DEFAULT_OUTPUT_CAP
    out: Optional[str] = None
    fmt: str = "pretty"
    digits: int = 17

    def beta(self) -> BetaParam:
        return make_beta(self.beta_spec, self.tau)


def _quad_pair(text: str):
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b' integers, got {text!r}")
    return a, b


def parse_point(text: str, beta: BetaParam):
    """Float backend: a decimal. Exact backend: a rational like ``3/7`` or
    ``0.25``, or ``p,q`` meaning ``p + q*beta``."""
    if beta.backend == "float":
        return float(text)
    if "," in text:
        p, q = text.split(",")
        return beta.point((Fraction(p), Fraction(q)))
    return beta.point(Fraction(text))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta", type=float, help="beta in (1,2), float backend")
    g.add_argument("--beta-quad", type=_quad_pair, metavar="A,B",
                   help="exact backend: beta is the larger root of x^2 = A x + B")
    common.add_argument("--tol", type=float, default=DEFAULT_TAU, help="float-backend tolerance (default 1e-10)")
    common.add_argument("--seed", type=int, default=random_beta.DEFAULT_SEED, help="random seed (default 42)")
    common.add_argument("--n-max", type=int, default=None, help="depth cap for counting (default 30)")
    common.add_argument("--piece-budget", type=int, default=None, help="piece cap for densities (default 2e6)")
    common.add_argument("--enum-max-n", type=int, default=None, help="cap on n for 2^n enumeration (default 24)")
    common.add_argument("--out", default=None, help="write CSV to this path")
    common.add_argument("--format", choices=["csv", "pretty"], default="pretty", dest="fmt")
    common.add_argument("--digits", type=int, default=17, help="significant digits in CSV (default 17)")

    p = argparse.ArgumentParser(prog="betacount", description="Counting beta-expansions and Bernoulli convolution diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("count", parents=[common], help="N_n(x; beta) and normalisations")
    c.add_argument("--x", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--list", action="store_true", help="also list the prefixes")

    c = sub.add_parser("growth", parents=[common], help="counts for n = 1..N with tail envelope")
    c.add_argument("--x", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--window", type=float, default=0.5)

    c = sub.add_parser("density", parents=[common], help="f_n = P^n((beta-1) 1_I) as piecewise constant")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--normalize", action="store_true", help="renormalise to integral 1")
    c.add_argument("--exact-columns", action="store_true", help="add exact p,q columns (exact backend)")

    c = sub.add_parser("entropy", parents=[common], help="Garsia entropy H(nu_n)/n table")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--measure", action="store_true", help="export nu_n itself instead of the table")
    c.add_argument("--windows", type=int, default=None, help="also print a clustering profile of D_n")

    c = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of mu_beta(S) and c(beta)")
    c.add_argument("--orbits", type=int, default=10_000)
    c.add_argument("--steps", type=int, default=10_000)
    c.add_argument("--burn-in", type=int, default=None, help="default 10%% of steps")
    c.add_argument("--workers", type=int, default=1)

    c = sub.add_parser("bound", parents=[common], help="check (1/n) ln N_n >= c(beta) - slack on random x")
    c.add_argument("--samples", type=int, default=50)
    c.add_argument("--n", type=int, default=18)
    c.add_argument("--slack", type=float, default=0.05)
    c.add_argument("--orbits", type=int, default=10_000)
    c.add_argument("--steps", type=int, default=10_000)
    c.add_argument("--burn-in", type=int, default=None)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--extra-x", action="append", default=[], help="additional x to check (repeatable)")

    c = sub.add_parser("diagnose", parents=[common], help="pointwise convergence diagnostic for f_n (exploratory)")
    c.add_argument("--samples", type=int, default=20)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--window", type=float, default=0.5)
    return p


def config_from_args(args) -> RunConfig:
    spec = args.beta if args.beta is not None else tuple(args.beta_quad)
    return RunConfig(
        beta_spec=spec,
        tau=args.tol,
        seed=args.seed,
        n_max=args.n_max if args.n_max is not None else _env_int("n_max", counting.DEFAULT_N_MAX),
        piece_budget=args.piece_budget if args.piece_budget is not None else _env_int("piece_budget", density.DEFAULT_PIECE_BUDGET),
        enum_max_n=args.enum_max_n if args.enum_max_n is not None else _env_int("enum_max_n", garsia.DEFAULT_ENUM_MAX_N),
        output_cap=_env_int("output_cap", counting.DEFAULT_OUTPUT_CAP),
        out=args.out,
        fmt=args.fmt,
        digits=args.digits,
    )


def _table(header: list, rows: list) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, csv_text: str, pretty_text: str, out) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(csv_text)
        out.write(pretty_text if cfg.fmt == "pretty" else "")
        out.write(f"wrote {cfg.out}\n")
    elif cfg.fmt == "csv":
        out.write(csv_text)
    else:
        out.write(pretty_text)


# -- subcommands ------------------------------------------------------------


def cmd_count(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    x = parse_point(args.x, beta)
    r = counting.count_prefixes(x, args.n, beta, n_max=cfg.n_max)
    d = cfg.digits
    csv_text = "n,count,f_n,garsia_erdos,log_rate,near_boundary\n" + ",".join(
        [str(r.n), str(r.count), fmt_num(r.f_n_value, d), fmt_num(r.garsia_erdos, d),
         fmt_num(r.log_rate, d), str(int(r.near_boundary))]) + "\n"
    pretty = (f"N={r.count}\nf_n={fmt_num(r.f_n_value, d)}\ngarsia_erdos={fmt_num(r.garsia_erdos, d)}\n"
              f"log_rate={fmt_num(r.log_rate, d)}\n")
    if r.near_boundary:
        pretty += "warning: a branch was admitted only within the tolerance of an endpoint\n"
    if args.list:
        words = counting.enumerate_prefixes(x, args.n, beta, n_max=cfg.n_max, output_cap=cfg.output_cap)
        pretty += "".join(word_str(w) + "\n" for w in words)
    _emit(cfg, csv_text, pretty, out)


def cmd_growth(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    rep = counting.growth_sequence(parse_point(args.x, beta), beta, args.n, window=args.window, cap=cfg.n_max)
    d = cfg.digits
    rows = [(r.n, r.count, fmt_num(float(r.f_n_value), 8), fmt_num(float(r.garsia_erdos), 8),
             fmt_num(r.log_rate, 8)) for r in rep.results]
    pretty = _table(["n", "N_n", "f_n", "garsia_erdos", "log_rate"], rows)
    pretty += (f"tail window n >= {rep.tail_start}: f_n in [{fmt_num(rep.tail_min_f, d)}, {fmt_num(rep.tail_max_f, d)}]; "
               f"max garsia_erdos={fmt_num(rep.running_max_garsia_erdos[-1], d)}\n")
    _emit(cfg, counting.growth_to_csv(rep, d), pretty, out)


def cmd_density(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    if args.normalize:
        f = density.density_estimate(beta, args.n, budget=cfg.piece_budget)
    else:
        f = density.iterate_f_n(beta, args.n, budget=cfg.piece_budget)
    csv_text = density.density_to_csv(f, cfg.digits, exact=args.exact_columns)
    pretty = f"pieces={f.pieces}\nintegral={fmt_num(f.integral(), cfg.digits)}\n"
    if not cfg.out and cfg.fmt == "pretty" and f.pieces <= 64:
        rows = [(fmt_num(f.breakpoints[i], 10), fmt_num(f.breakpoints[i + 1], 10), fmt_num(v, 10))
                for i, v in enumerate(f.values)]
        pretty += _table(["left", "right", "value"], rows)
    _emit(cfg, csv_text, pretty, out)


def cmd_entropy(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    d = cfg.digits
    if args.measure:
        m = garsia.build_nu_n(beta, args.n, max_n=cfg.enum_max_n)
        csv_text = garsia.measure_to_csv(m, d)
        pretty = (f"atoms={len(m)} (of 2^{args.n}={2 ** args.n} words)\n"
                  f"H={fmt_num(garsia.entropy(m), d)}\n")
        if m.suspicious_merges:
            pretty += "warning: atoms merged at separations within [tau/10, tau]\n"
    else:
        tab = garsia.garsia_ratio(beta, args.n, max_n=cfg.enum_max_n)
        csv_text = garsia.entropy_table_to_csv(tab, d)
        pretty = _table(["n", "H", "H/n", "ln_beta"],
                        [(n, fmt_num(h, 10), fmt_num(r, 10), fmt_num(lb, 10)) for n, h, r, lb in tab.rows])
        pretty += tab.trend + "\n"
    if args.windows:
        prof = garsia.clustering_profile(beta, args.n, args.windows, max_n=cfg.enum_max_n)
        pretty += _table(["window", "distinct", "weighted", "density"],
                         [(i, a, w, fmt_num(v, 8)) for i, (a, w, v) in
                          enumerate(zip(prof.distinct_counts, prof.weighted_counts, prof.normalized))])
        pretty += (f"distinct={prof.total_distinct} weighted={prof.total_weighted} "
                   f"max/mean={fmt_num(prof.dispersion, 8)}\n")
    _emit(cfg, csv_text, pretty, out)


def cmd_simulate(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    est = random_beta.estimate_mu_S(beta, args.orbits, args.steps, args.burn_in, cfg.seed, args.workers)
    d = cfg.digits
    pretty = (f"seed={cfg.seed} orbits={est.orbit_count} steps={est.steps} burn_in={est.burn_in}\n"
              f"mu_S_estimate={fmt_num(est.estimate, d)}\nstd_error={fmt_num(est.std_error, d)}\n"
              f"c_beta={fmt_num(est.c_beta, d)}\n")
    _emit(cfg, random_beta.simulation_to_csv(est, d), pretty, out)


def cmd_bound(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    extra = [parse_point(t, beta) for t in args.extra_x]
    rep = random_beta.bound_check(
        beta, args.samples, args.n, slack=args.slack, seed=cfg.seed, samples=extra,
        mc_params=dict(orbit_count=args.orbits, steps=args.steps, burn_in=args.burn_in, workers=args.workers),
    )
    d = cfg.digits
    pretty = (f"seed={cfg.seed} n={rep.n} c_beta={fmt_num(rep.c_beta, d)} slack={rep.slack}\n"
              f"fraction={fmt_num(rep.fraction, d)} ({len(rep.samples) - len(rep.violations)}/{len(rep.samples)})\n")
    for i in rep.violations:
        pretty += f"flagged x={fmt_num(rep.samples[i], d)} log_rate={fmt_num(rep.log_rates[i], d)}\n"
    _emit(cfg, random_beta.bound_to_csv(rep, d), pretty, out)


def cmd_diagnose(args, cfg: RunConfig, out) -> None:
    beta = cfg.beta()
    rng = random.Random(cfg.seed)
    xs = [beta.random_point(rng) for _ in range(args.samples)]
    rep = density.convergence_diagnostic(beta, xs, args.n, args.window)
    d = cfg.digits
    lines = ["sample,x,f_n_last,tail_oscillation"]
    for x, seq, o in zip(xs, rep.sequences, rep.oscillations):
        lines.append(f"{len(lines) - 1},{fmt_num(x, d)},{fmt_num(seq[-1], d)},{fmt_num(o, d)}")
    csv_text = "\n".join(lines) + "\n"
    pretty = (f"{rep.label}\nseed={cfg.seed} samples={len(xs)} n_max={rep.n_max} tail from n={rep.tail_start}\n"
              f"median_oscillation={fmt_num(rep.median_oscillation, d)}\n"
              f"mean_oscillation={fmt_num(rep.mean_oscillation, d)}\n"
              f"max_oscillation={fmt_num(rep.max_oscillation, d)}\n")
    _emit(cfg, csv_text, pretty, out)


COMMANDS = {
    "count": cmd_count,
    "growth": cmd_growth,
    "density": cmd_density,
    "entropy": cmd_entropy,
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "diagnose": cmd_diagnose,
}


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](args, cfg, out)
    except BetaCountError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except (ValueError, ZeroDivisionError) as exc:
        err.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
