"""Command-line entry point: ``dksd {test,bench,sample,select-kappa,oracle}``."""

import argparse
import logging
import sys

from .bench import emit_results, ingest_csv, load_plan, run_experiment, write_samples
from .errors import DKSDError
from .gof import DEFAULT_GRID, DEFAULT_LAMBDA, DEFAULT_SPLIT, TestConfig, select_kappa
from .gof import test_dksd_u, test_dksd_v
from .models import parse_model_spec, render_model_spec
from .oracle import dksd_quadrature_oracle
from .rng import make_rng
from .samplers import sample_model

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_REJECT = 2


def _kappa(text):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a real, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("kappa must be positive")
    return value


def _reals(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="dksd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run a dKSD goodness-of-fit test on a data file")
    p.add_argument("--model", required=True, help="null model spec, e.g. 'vmf:mu=1,0;kappa=2'")
    p.add_argument("--data", required=True, help="CSV of unit vectors")
    p.add_argument("--method", choices=("u", "v"), default="u")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--kappa", type=_kappa, default="auto")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="run an experiment plan and write a results CSV")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sample", help="draw samples from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("select-kappa", help="select the kernel concentration on a data split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--grid", type=_reals, default=DEFAULT_GRID)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--split", type=float, default=DEFAULT_SPLIT)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oracle", help="population dKSD^2 on the circle by quadrature")
    p.add_argument("--p", required=True, help="data model spec (d = 2)")
    p.add_argument("--q", required=True, help="null model spec (d = 2)")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--grid-points", type=int, default=512)
    return parser


def _cmd_test(args):
    model = parse_model_spec(args.model)
    x = ingest_csv(args.data)
    config = TestConfig(alpha=args.alpha, bootstrap=args.bootstrap, kappa=args.kappa,
                        seed=args.seed)
    run = test_dksd_u if args.method == "u" else test_dksd_v
    out = run(x, model, config)
    print(f"statistic {out.statistic:.10g}")
    print(f"threshold {out.threshold:.10g}")
    print(f"kappa {out.selected_kappa:g}")
    print(f"n_used {out.n_used}")
    print(f"decision {'reject' if out.reject else 'accept'}")
    return EXIT_REJECT if out.reject else EXIT_ACCEPT


def _cmd_bench(args):
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    plan = load_plan(args.plan)
    stats = {}
    rows = run_experiment(plan, workers=args.workers, stats=stats)
    emit_results(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out} in {stats['wall_seconds']:.2f} s")
    return EXIT_ACCEPT


def _cmd_sample(args):
    if args.n < 1:
        raise ValueError("--n must be >= 1")
    model = parse_model_spec(args.model)
    x, report = sample_model(model, args.n, make_rng(args.seed))
    write_samples(x, args.out, header=render_model_spec(model))
    print(f"wrote {args.n} samples to {args.out} (acceptance rate {report.acceptance_rate:.4g})")
    return EXIT_ACCEPT


def _cmd_select(args):
    model = parse_model_spec(args.model)
    x = ingest_csv(args.data)
    if x.shape[1] != model.d:
        raise ValueError(f"data has d = {x.shape[1]}, model has d = {model.d}")
    kappa = select_kappa(x, model, args.grid, args.split, args.lam, make_rng(args.seed))
    print(f"{kappa:g}")
    return EXIT_ACCEPT


def _cmd_oracle(args):
    value = dksd_quadrature_oracle(parse_model_spec(args.p), parse_model_spec(args.q),
                                   args.kappa, args.grid_points)
    print(f"{value:.12g}")
    return EXIT_ACCEPT


COMMANDS = {"test": _cmd_test, "bench": _cmd_bench, "sample": _cmd_sample,
            "select-kappa": _cmd_select, "oracle": _cmd_oracle}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as "rejected"
        return EXIT_ACCEPT if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DKSDError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
