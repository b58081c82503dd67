"""Command-line front-end.

Subcommands:
  ridge-synthetic   grid-searched solver comparison on generated ridge data
  ridge-csv         same on a headered numeric CSV dataset
  attack-surrogate  universal sparse perturbation against the shipped
                    linear-softmax black box
  check-theory      print the closed-form constants for a parameter set

Exit codes: 0 success, 1 usage error, 2 runtime/numeric error.
"""

import argparse
import sys

from .core import spawn_stream
from .harness import ALGO_TOKENS, ExperimentSpec, emit_csv, emit_svg, run_experiment
from .problems import attack_surrogate_problem, ridge_from_csv, ridge_synthetic
from .theory import (
    TheoryParams,
    alpha,
    complexity_estimate,
    epsilon_constants,
    pm_eta_interval,
    sarah_eta_interval,
    szoht_conditions,
    vrszht_eta_interval,
)
from .vr import LAW_P_SAGA, LAW_SVRG_VARIANT
from .zo import ZoEstimatorConfig

DEFAULT_ALGOS = "fgzoht,szoht,vr,saga,sarah"
DEFAULT_ETA_GRID = "0.005,0.01,0.05,0.1,0.5"
CSV_ETA_GRID = ",".join("1e-%d" % i for i in range(1, 8))
ATTACK_ETA_GRID = "0.001,0.005,0.01,0.05"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(1)


def _comma_floats(text):
    return [float(tok) for tok in text.split(",") if tok]


def _comma_ints(text):
    return [int(tok) for tok in text.split(",") if tok]


def _comma_algos(text):
    algos = [tok.strip() for tok in text.split(",") if tok.strip()]
    for a in algos:
        if a not in ALGO_TOKENS:
            raise argparse.ArgumentTypeError(
                "unknown algorithm %r (known: %s)" % (a, ",".join(sorted(ALGO_TOKENS)))
            )
    return algos


def _add_run_options(sub, eta_default):
    sub.add_argument("--seeds", type=_comma_ints, default=[1, 2, 3])
    sub.add_argument("--eta-grid", type=_comma_floats, default=_comma_floats(eta_default))
    sub.add_argument("--algos", type=_comma_algos, default=_comma_algos(DEFAULT_ALGOS))
    sub.add_argument("--p", type=int, default=1, help="memory update rate")
    sub.add_argument("--law", choices=[LAW_P_SAGA, LAW_SVRG_VARIANT], default=LAW_P_SAGA)
    sub.add_argument("--record-every", type=int, default=1)
    sub.add_argument("--select", choices=["final", "min"], default="final")
    sub.add_argument("--data-seed", type=int, default=0)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--svg", action="store_true", help="also emit SVG charts")
    sub.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = _Parser(prog="zoht", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    rs = subs.add_parser("ridge-synthetic", help="synthetic ridge benchmark")
    rs.add_argument("--n", type=int, default=10)
    rs.add_argument("--d", type=int, default=5)
    rs.add_argument("--lambda", dest="lam", type=float, default=0.5)
    rs.add_argument("--k", type=int, default=3)
    rs.add_argument("--q", type=int, default=200)
    rs.add_argument("--mu", type=float, default=1e-4)
    rs.add_argument("--s2", type=int, default=5)
    rs.add_argument("--m", type=int, default=10)
    rs.add_argument("--budget", type=int, default=80_000)
    _add_run_options(rs, DEFAULT_ETA_GRID)

    rc = subs.add_parser("ridge-csv", help="ridge benchmark on a CSV dataset")
    rc.add_argument("--file", required=True)
    rc.add_argument("--target", required=True, help="target column name")
    rc.add_argument("--lambda", dest="lam", type=float, default=0.5)
    rc.add_argument("--k", type=int, default=3)
    rc.add_argument("--q", type=int, default=200)
    rc.add_argument("--mu", type=float, default=1e-4)
    rc.add_argument("--s2", type=int, default=None, help="default: d")
    rc.add_argument("--m", type=int, default=None, help="default: floor(n/2)")
    rc.add_argument("--budget", type=int, default=100_000)
    _add_run_options(rc, CSV_ETA_GRID)

    at = subs.add_parser("attack-surrogate", help="sparse black-box attack")
    at.add_argument("--n", type=int, default=4)
    at.add_argument("--d", type=int, default=48)
    at.add_argument("--classes", type=int, default=10)
    at.add_argument("--k", type=int, default=6)
    at.add_argument("--q", type=int, default=10)
    at.add_argument("--mu", type=float, default=1e-3)
    at.add_argument("--s2", type=int, default=None, help="default: d")
    at.add_argument("--m", type=int, default=10)
    at.add_argument("--budget", type=int, default=600)
    _add_run_options(at, ATTACK_ETA_GRID)

    ct = subs.add_parser("check-theory", help="print closed-form constants")
    for flag, typ in [
        ("--d", int), ("--n", int), ("--q", int), ("--s2", int),
        ("--k", int), ("--kstar", int),
        ("--rho-plus", float), ("--rho-minus", float), ("--mu", float),
    ]:
        ct.add_argument(flag, type=typ, required=True)
    ct.add_argument("--p", type=int, default=None)
    ct.add_argument("--m", type=int, default=None)
    return parser


def _run_and_emit(spec, args):
    result = run_experiment(spec, workers=args.workers)
    paths = emit_csv(result, args.out)
    if args.svg:
        paths.append(emit_svg(result, "izo", args.out))
        paths.append(emit_svg(result, "nht", args.out))
    for token in spec.algorithms:
        print("%s: best eta %g" % (token, result.best_eta[token]))
    diverged = result.diverged_cells()
    if diverged:
        print("diverged cells: %d" % len(diverged))
    print("wrote %d files to %s" % (len(paths), args.out))
    return 0


def _cmd_ridge_synthetic(args):
    rng = spawn_stream(args.data_seed, "data-gen")
    problem = ridge_synthetic(args.n, args.d, args.lam, rng)
    spec = ExperimentSpec(
        problem=problem,
        algorithms=args.algos,
        k=args.k,
        zo=ZoEstimatorConfig(q=args.q, s2=args.s2, mu=args.mu, d=args.d),
        eta_grid=args.eta_grid,
        seeds=args.seeds,
        izo_budget=args.budget,
        m=args.m,
        p=args.p,
        law=args.law,
        record_every=args.record_every,
        select=args.select,
        problem_name="ridge-synthetic",
    )
    return _run_and_emit(spec, args)


def _cmd_ridge_csv(args):
    problem = ridge_from_csv(args.file, args.target, args.lam)
    s2 = problem.d if args.s2 is None else args.s2
    m = max(problem.n // 2, 1) if args.m is None else args.m
    spec = ExperimentSpec(
        problem=problem,
        algorithms=args.algos,
        k=args.k,
        zo=ZoEstimatorConfig(q=args.q, s2=s2, mu=args.mu, d=problem.d),
        eta_grid=args.eta_grid,
        seeds=args.seeds,
        izo_budget=args.budget,
        m=m,
        p=args.p,
        law=args.law,
        record_every=args.record_every,
        select=args.select,
        problem_name="ridge-csv:%s" % args.file,
    )
    return _run_and_emit(spec, args)


def _cmd_attack(args):
    rng = spawn_stream(args.data_seed, "data-gen")
    problem = attack_surrogate_problem(args.n, args.d, args.classes, rng)
    s2 = args.d if args.s2 is None else args.s2
    spec = ExperimentSpec(
        problem=problem,
        algorithms=args.algos,
        k=args.k,
        zo=ZoEstimatorConfig(q=args.q, s2=s2, mu=args.mu, d=args.d),
        eta_grid=args.eta_grid,
        seeds=args.seeds,
        izo_budget=args.budget,
        m=args.m,
        p=args.p,
        law=args.law,
        record_every=args.record_every,
        select=args.select,
        problem_name="attack-surrogate",
    )
    return _run_and_emit(spec, args)


def _cmd_check_theory(args):
    tp = TheoryParams(
        d=args.d, n=args.n, q=args.q, s2=args.s2, k=args.k, kstar=args.kstar,
        rho_minus=args.rho_minus, rho_plus=args.rho_plus, mu=args.mu,
        p=args.p, m=args.m,
    )
    eps = epsilon_constants(tp)
    print("s = 2k + kstar      : %d" % tp.s)
    print("kappa               : %.9g" % tp.kappa)
    if tp.k > tp.kstar:
        print("alpha               : %.9g" % alpha(tp.k, tp.kstar))
    else:
        print("alpha               : undefined (k <= kstar)")
    print("eps_mu              : %.9g" % eps.eps_mu)
    print("eps_I               : %.9g" % eps.eps_I)
    print("eps_Ic              : %.9g   (%s)" % (eps.eps_Ic, "(d-1) denominator"))
    print("eps_abs             : %.9g" % eps.eps_abs)
    k_lo, k_hi, q_lo = szoht_conditions(tp)
    print("szoht k interval    : [%.9g, %.9g]%s"
          % (k_lo, k_hi, "  (EMPTY)" if k_lo > k_hi else ""))
    print("szoht q lower bound : %.9g" % q_lo)
    if tp.k > tp.kstar:
        if tp.p is not None:
            iv = pm_eta_interval(tp)
            print("pm eta interval     : %s  (discriminant %.9g)"
                  % (_fmt_interval(iv), iv.discriminant))
        vr_iv, vr_eta = vrszht_eta_interval(tp)
        print("vr eta interval     : %s  (discriminant %.9g)"
              % (_fmt_interval(vr_iv), vr_iv.discriminant))
        print("vr recommended eta  : %.9g" % vr_eta)
        sa_iv = sarah_eta_interval(tp)
        print("sarah eta interval  : %s  (discriminant %.9g)"
              % (_fmt_interval(sa_iv), sa_iv.discriminant))
    zo_q, ht_q = complexity_estimate(tp, 1e-3)
    print("complexity @1e-3    : %.9g zo queries, %.9g ht ops" % (zo_q, ht_q))
    return 0


def _fmt_interval(iv):
    if not iv.nonempty:
        return "EMPTY"
    return "[%.9g, %.9g]" % (iv.lo, iv.hi)


_COMMANDS = {
    "ridge-synthetic": _cmd_ridge_synthetic,
    "ridge-csv": _cmd_ridge_csv,
    "attack-surrogate": _cmd_attack,
    "check-theory": _cmd_check_theory,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
