"""Command line entry point: ``siameseduo run`` and ``siameseduo gen``."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .exceptions import ConfigParseError, ConfigurationError, ExperimentError, \
    IngestionError
from .harness import emit_results, parse_config, run_experiment
from .learners import LEARNERS
from .streams import N_CLASSES, VARIANTS, StreamSpec, make_stream, write_delimited


def _seeds(text):
    try:
        return [int(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="siameseduo",
                                     description="Active stream learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("--config", required=True, help="YAML configuration file")
    run.add_argument("--learner", choices=sorted(LEARNERS))
    run.add_argument("--dataset", help="sea, circles, blobs or a real dataset name")
    run.add_argument("--variant", choices=sorted(VARIANTS))
    run.add_argument("--budget", type=float)
    run.add_argument("--seeds", type=_seeds, help="e.g. '0,1,2'")
    run.add_argument("--path", help="delimited data file for real datasets")
    run.add_argument("--header", action=argparse.BooleanOptionalAction, default=None,
                     help="skip (or keep) the first line of --path; detected if omitted")
    run.add_argument("--length", type=int)
    run.add_argument("--out", help="output directory")

    gen = sub.add_parser("gen", help="write a synthetic stream as a delimited file")
    gen.add_argument("--dataset", required=True, choices=sorted(N_CLASSES))
    gen.add_argument("--variant", default="original", choices=sorted(VARIANTS))
    gen.add_argument("--out", required=True, help="output CSV file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--length", type=int, default=18000)
    gen.add_argument("--no-header", action="store_true")
    return parser


def cmd_run(args):
    text = Path(args.config).read_text(encoding="utf-8")
    overrides = dict(learner=args.learner, dataset=args.dataset, variant=args.variant,
                     budget=args.budget, seeds=args.seeds, length=args.length,
                     path=args.path, header=args.header, out=args.out)
    config = parse_config(text, overrides)
    logs = run_experiment(config)
    csv_path, json_path = emit_results(logs, config.out, config.evaluation.checkpoints)
    summary = json.loads(json_path.read_text(encoding="utf-8"))
    for run in summary["runs"]:
        final = run["final"]
        print(f"{run['learner']} on {run['dataset']}: "
              f"gmean {final['gmean']['mean']:.4f} +- {final['gmean']['std']:.4f}, "
              f"pmauc {final['pmauc']['mean']:.4f} +- {final['pmauc']['std']:.4f}, "
              f"queried {final['query_fraction']['mean']:.4f}")
    print(f"wrote {csv_path} and {json_path}")


def cmd_gen(args):
    spec = StreamSpec.variant(args.dataset, args.variant, seed=args.seed,
                              length=args.length)
    stream = make_stream(spec)
    # the initial labelled set goes first, so loading the file and taking the
    # first examples of every class reproduces the same split
    X = np.vstack((stream.X_seed, stream.X))
    y = np.concatenate((stream.y_seed, stream.y))
    path = write_delimited(args.out, X, y, header=not args.no_header)
    print(f"wrote {len(y)} rows to {path}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cmd_run(args)
        else:
            cmd_gen(args)
    except (ConfigParseError, ConfigurationError, IngestionError, ExperimentError,
            OSError) as err:
        print(f"siameseduo: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
