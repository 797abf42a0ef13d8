"""Command-line interface.

Exit codes: 0 on success, 2 on bad input, 3 on numerical failure.
"""

import argparse
import contextlib
import csv
from dataclasses import replace
import sys

import numpy as np

from ._rng import make_rng
from .complexity import BoundInputs, lemma1_bound, rademacher_estimate
from .data_io import augment_noise, load_csv, save_csv, wishart_covariance
from .errors import InputError, NumericalError
from .evaluation import knn_error, random_baseline
from .experiment import ExperimentConfig, load_config, run_experiment, write_results
from .hardness import lowerbound_experiment
from .losses import LossSpec
from .metric import Metric, format_metric, load_metric
from .optimizer import FitOptions, SrmParams, erm_fit, make_pairs, shuffled_pairs, srm_select

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
KEY_CLI_PAIRS = 501
KEY_CLI_COMPLEXITY = 502


def _ints(text):
    return [int(t) for t in text.replace(",", " ").split()]


@contextlib.contextmanager
def _out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_data(p, name="--data"):
    p.add_argument(name, required=True, help="CSV file, label in one column")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--label-column", type=int, default=-1)


def _add_fit(p):
    p.add_argument("--lam", type=float, help="loss slope")
    p.add_argument("--U", type=float, help="same-class distance limit")
    p.add_argument("--L", type=float, help="different-class distance limit")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--step0", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--pair-passes", type=int, default=1,
                   help="1 pairs rows in file order; more reshuffles and concatenates")


def _base_config(args):
    if args.config:
        return load_config(args.config, ExperimentConfig(dataset=""))
    return None


def _spec_and_opts(args):
    cfg = _base_config(args)
    spec = cfg.spec if cfg else LossSpec()
    opts = cfg.fit if cfg else FitOptions()
    spec = LossSpec(lam=spec.lam if args.lam is None else args.lam,
                    U=spec.U if args.U is None else args.U,
                    L=spec.L if args.L is None else args.L)
    opts = FitOptions(max_iters=opts.max_iters if args.max_iters is None else args.max_iters,
                      step0=opts.step0 if args.step0 is None else args.step0,
                      tol=opts.tol if args.tol is None else args.tol,
                      seed=args.seed, patience=opts.patience)
    return spec, opts


def _pairs(args, ds):
    if args.pair_passes == 1:
        return make_pairs(ds.points, ds.labels)
    rng = make_rng(args.seed, KEY_CLI_PAIRS)
    return shuffled_pairs(ds.points, ds.labels, rng, args.pair_passes)


def cmd_fit(args):
    ds = load_csv(args.data, args.has_header, args.label_column)
    spec, opts = _spec_and_opts(args)
    M = erm_fit(_pairs(args, ds), spec, args.Lambda, opts)
    with _out(args.output) as fh:
        fh.write(format_metric(M))


def cmd_srm(args):
    ds = load_csv(args.data, args.has_header, args.label_column)
    spec, opts = _spec_and_opts(args)
    B = args.B if args.B is not None else ds.support_bound()
    p = SrmParams.uniform(B=B, lam=spec.lam, delta=args.delta, D=ds.D)
    M, d_hat = srm_select(_pairs(args, ds), spec, p, opts)
    print(f"d_hat {d_hat}", file=sys.stderr)
    with _out(args.output) as fh:
        fh.write(format_metric(M))


def cmd_eval(args):
    train = load_csv(args.train, args.has_header, args.label_column)
    test = load_csv(args.test, args.has_header, args.label_column)
    M = load_metric(args.metric) if args.metric else Metric.identity(train.D)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "knn_error", "random_baseline"))
        w.writerow((args.k, repr(knn_error(M, train, test, args.k)),
                    repr(random_baseline(train, test))))


def cmd_augment(args):
    ds = load_csv(args.data, args.has_header, args.label_column)
    if args.noise_dim < 0:
        raise InputError("--noise-dim must be >= 0")
    if args.noise_dim:
        ds = augment_noise(ds, wishart_covariance(args.noise_dim, args.seed), args.seed)
    with _out(args.output) as fh:
        save_csv(fh, ds)


def cmd_complexity(args):
    ds = load_csv(args.data, args.has_header, args.label_column)
    B = ds.support_bound()
    rng = make_rng(args.seed, KEY_CLI_COMPLEXITY)
    order = rng.permutation(ds.n)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("m", "D", "estimate", "stderr", "lemma1_bound"))
        for m in _ints(args.m):
            if m < 1 or 2 * m > ds.n:
                raise InputError(f"m={m} needs 2m <= {ds.n} observations")
            idx = order[:2 * m]
            S = make_pairs(ds.points[idx], ds.labels[idx])
            est, se = rademacher_estimate(S, args.draws, args.seed)
            bound = lemma1_bound(BoundInputs(B=B, lam=args.lam, D=ds.D, m=m, delta=args.delta))
            w.writerow((m, ds.D, repr(est), repr(se), repr(bound)))


def cmd_hardness(args):
    rows = lowerbound_experiment(args.D, args.alpha, _ints(args.m), args.trials,
                                 eps=args.eps, seed=args.seed)
    cols = ("D", "alpha", "m", "trials", "failure_fraction", "threshold_m")
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])


def cmd_experiment(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.data:
        cfg = ExperimentConfig(dataset=args.data)
    else:
        raise InputError("experiment needs --config or --data")
    overrides = {}
    if args.seed_given:
        overrides["seed"] = args.seed
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.noise_dims is not None:
        overrides["noise_dims"] = tuple(_ints(args.noise_dims))
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = replace(cfg, **overrides)
    rows = run_experiment(cfg)
    with _out(args.output or cfg.output) as fh:
        write_results(rows, fh)


def build_parser():
    p = argparse.ArgumentParser(prog="metricbounds",
                                description="Regularised metric learning with "
                                            "sample-complexity tools.")
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--config", help="'key = value' experiment config file")
    # the same options after the subcommand; SUPPRESS keeps a global value if not repeated
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", parents=[common], help="fit a metric by regularised ERM")
    _add_data(f)
    _add_fit(f)
    f.add_argument("--Lambda", type=float, default=0.0, help="Frobenius penalty weight")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("srm", parents=[common], help="fit a metric by structural risk minimisation")
    _add_data(s)
    _add_fit(s)
    s.add_argument("--B", type=float, help="support bound (default: max row norm)")
    s.add_argument("--delta", type=float, default=0.1)
    s.set_defaults(func=cmd_srm)

    e = sub.add_parser("eval", parents=[common], help="k-NN test error under a metric")
    e.add_argument("--train", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--has-header", action="store_true")
    e.add_argument("--label-column", type=int, default=-1)
    e.add_argument("--metric", help="metric file (default identity)")
    e.add_argument("--k", type=int, default=3)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("augment", parents=[common],
                       help="append Wishart-correlated Gaussian noise features")
    _add_data(a)
    a.add_argument("--noise-dim", type=int, required=True)
    a.set_defaults(func=cmd_augment)

    c = sub.add_parser("complexity", parents=[common],
                       help="empirical Rademacher complexity vs the uniform bound")
    _add_data(c)
    c.add_argument("--m", default="8,16,32", help="pair counts, comma separated")
    c.add_argument("--draws", type=int, default=1000)
    c.add_argument("--lam", type=float, default=1.0)
    c.add_argument("--delta", type=float, default=0.1)
    c.set_defaults(func=cmd_complexity)

    h = sub.add_parser("hardness", parents=[common],
                       help="ERM failure rate on the adversarial simplex family")
    h.add_argument("--D", type=int, default=16)
    h.add_argument("--alpha", type=float, default=0.25)
    h.add_argument("--eps", type=float, default=0.05)
    h.add_argument("--m", default="50,5000", help="pair counts, comma separated")
    h.add_argument("--trials", type=int, default=200)
    h.set_defaults(func=cmd_hardness)

    x = sub.add_parser("experiment", parents=[common],
                       help="noise-augmentation experiment, CSV out")
    x.add_argument("--data", help="dataset CSV when no --config is given")
    x.add_argument("--runs", type=int)
    x.add_argument("--noise-dims", help="comma separated, overrides the config")
    x.add_argument("--workers", type=int, help="worker processes (output is unchanged)")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
