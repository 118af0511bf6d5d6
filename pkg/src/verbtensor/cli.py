"""Command-line entry point.

Exit codes: 0 on success, 1 for configuration or validation problems, 2 for
runtime failures. Global flags go before the subcommand, for example::

    verbtensor --config config.ini --log-level INFO build-vectors
    verbtensor --config config.ini experiment --which full-cv
"""

import argparse
import json
import logging
import sys

from . import pipeline
from .config import load_config
from .util import ValidationError, VerbTensorError

log = logging.getLogger("verbtensor")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verbtensor",
        description="Transitive-verb tensor learning over a plausibility sentence space",
    )
    parser.add_argument("--config", required=True, help="pipeline config file (INI)")
    parser.add_argument("--out", default=None, help="override the configured output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="rebase all pipeline seeds from this value")
    parser.add_argument("--jobs", type=int, default=1, help="parallel verbs for experiments")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-vectors", help="scan the corpus and write noun embeddings")
    sub.add_parser("gen-data", help="build per-verb datasets with confounder negatives")

    exp = sub.add_parser("experiment", help="run an evaluation protocol")
    exp.add_argument("--which", required=True, choices=list(pipeline.EXPERIMENT_KINDS))

    train = sub.add_parser("train", help="train and save one verb's tensor model")
    train.add_argument("--verb", required=True)
    train.add_argument("--k", type=int, default=None)

    predict = sub.add_parser("predict", help="classify one subject-verb-object triple")
    predict.add_argument("--verb", required=True)
    predict.add_argument("--subject", required=True)
    predict.add_argument("--object", dest="object_", required=True)
    predict.add_argument("--k", type=int, default=None)

    evalv = sub.add_parser("eval-vectors", help="Spearman check of embeddings on word pairs")
    evalv.add_argument("--pairs", default=None, help="word-pair TSV (defaults to dev_pairs)")
    evalv.add_argument("--k", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, out_override=args.out, seed_override=args.seed)
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION

    try:
        if args.command == "build-vectors":
            result = pipeline.build_vectors(config)
        elif args.command == "gen-data":
            result = pipeline.gen_data(config)
        elif args.command == "experiment":
            result = pipeline.experiment(config, args.which, jobs=args.jobs)
        elif args.command == "train":
            result = pipeline.train_verb(config, args.verb, k=args.k)
        elif args.command == "predict":
            result = pipeline.predict_one(config, args.verb, args.subject, args.object_, k=args.k)
        elif args.command == "eval-vectors":
            result = pipeline.eval_vectors(config, pairs_path=args.pairs, k=args.k)
        else:  # pragma: no cover - argparse enforces choices
            raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except VerbTensorError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # unexpected runtime failure
        log.exception("unexpected failure: %s", exc)
        return EXIT_RUNTIME

    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
