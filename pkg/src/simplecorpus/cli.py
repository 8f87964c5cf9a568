"""Command-line entry point.

Two subcommands: `prepare` builds corruption pairs from corpora, `eval`
scores a system-output file. Every config-file key is mirrored by a flag;
precedence is CLI > config file > environment > defaults. Exit codes:
0 success, 1 usage/config, 2 fatal I/O, 3 scorer-protocol fatal.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .client import DEFAULT_RETRIES, DEFAULT_TIMEOUT
from .errors import CorpusIOError, ScorerError, UsageError
from .masking import MODE_COMPLEX, MODE_SIMPLE, MaskingPolicy
from .pipeline import (
    ABLATION_BOTH,
    ABLATIONS,
    METRIC_DSARI,
    METRIC_SARI,
    SCORER_KINDS,
    SCORER_LEXICON,
    PipelineConfig,
    run_eval,
    run_prepare,
)
from .substitution import BACKEND_BUILTIN, BACKEND_EXTERNAL, SubstitutionPolicy

SCORER_ADDR_ENV = "SIMPLECORPUS_SCORER_ADDR"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the CLI contract reserves 2 for I/O
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplecorpus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prepare", help="corrupt corpora into training pairs")
    prep.add_argument("--config", metavar="FILE", help="TOML config file")
    prep.add_argument("--simple-corpus", metavar="FILE")
    prep.add_argument("--ordinary-corpus", metavar="FILE")
    prep.add_argument(
        "--exclusion", action="append", metavar="FILE", help="held-out text file (repeatable)"
    )
    prep.add_argument("--output", metavar="FILE")
    prep.add_argument("--shards", type=int)
    prep.add_argument("--ablation", choices=ABLATIONS)
    prep.add_argument("--progress-every", type=int, metavar="N")
    prep.add_argument("--mode", choices=(MODE_SIMPLE, MODE_COMPLEX))
    prep.add_argument("--mask-threshold", type=float, metavar="T")
    prep.add_argument("--max-mask-prob", type=float)
    prep.add_argument("--poisson-lambda", type=float)
    prep.add_argument("--mask-token")
    prep.add_argument("--seed", type=int)
    prep.add_argument("--rules", metavar="FILE")
    prep.add_argument("--similarity-threshold", type=float)
    prep.add_argument("--similarity-backend", choices=(BACKEND_BUILTIN, BACKEND_EXTERNAL))
    prep.add_argument("--min-readability", type=float)
    prep.add_argument("--scorer", choices=SCORER_KINDS)
    prep.add_argument("--lexicon", metavar="FILE")
    prep.add_argument("--frequencies", metavar="FILE")
    prep.add_argument(
        "--scorer-addr", metavar="ADDR", help="host:port to connect, or a command line to spawn"
    )
    prep.add_argument("--scorer-timeout", type=float, metavar="SECONDS")
    prep.add_argument("--scorer-retries", type=int)

    ev = sub.add_parser("eval", help="score a system-output JSONL file")
    ev.add_argument("metric", choices=(METRIC_SARI, METRIC_DSARI))
    ev.add_argument("--system", required=True, metavar="FILE")
    ev.add_argument("--no-lowercase", action="store_true")
    ev.add_argument("--per-instance", action="store_true")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc


def _build_prepare_config(args) -> PipelineConfig:
    cfg = _load_config_file(args.config) if args.config else {}
    pipe = cfg.get("pipeline", {})
    mask = cfg.get("masking", {})
    subst = cfg.get("substitution", {})
    scorer = cfg.get("scorer", {})

    def pick(cli_value, table, key, default=None):
        if cli_value is not None:
            return cli_value
        return table.get(key, default)

    env_addr = os.environ.get(SCORER_ADDR_ENV) or None
    try:
        masking = MaskingPolicy(
            threshold=float(pick(args.mask_threshold, mask, "threshold", 0.25)),
            max_mask_prob=float(pick(args.max_mask_prob, mask, "max_mask_prob", 0.15)),
            span_lambda=float(pick(args.poisson_lambda, mask, "span_lambda", 3.0)),
            mode=pick(args.mode, mask, "mode", MODE_SIMPLE),
            mask_token=pick(args.mask_token, mask, "mask_token", "<mask>"),
            seed=int(pick(args.seed, mask, "seed", 0)),
        )
        substitution = SubstitutionPolicy(
            similarity_threshold=float(
                pick(args.similarity_threshold, subst, "similarity_threshold", 0.95)
            ),
            min_readability=float(pick(args.min_readability, subst, "min_readability", -math.inf)),
            similarity_backend=pick(args.similarity_backend, subst, "similarity_backend", BACKEND_BUILTIN),
        )
        exclusion = args.exclusion if args.exclusion is not None else pipe.get("exclusion", [])
        if not isinstance(exclusion, (list, tuple)) or not all(
            isinstance(p, str) for p in exclusion
        ):
            raise UsageError("exclusion must be a list of paths")
        return PipelineConfig(
            simple_corpus=pick(args.simple_corpus, pipe, "simple_corpus"),
            ordinary_corpus=pick(args.ordinary_corpus, pipe, "ordinary_corpus"),
            exclusion_paths=tuple(exclusion),
            masking=masking,
            substitution=substitution,
            rules_path=pick(args.rules, subst, "rules"),
            scorer_kind=pick(args.scorer, scorer, "kind", SCORER_LEXICON),
            lexicon_path=pick(args.lexicon, scorer, "lexicon"),
            frequency_path=pick(args.frequencies, scorer, "frequencies"),
            scorer_addr=pick(args.scorer_addr, scorer, "address", env_addr),
            scorer_timeout=float(pick(args.scorer_timeout, scorer, "timeout", DEFAULT_TIMEOUT)),
            scorer_retries=int(pick(args.scorer_retries, scorer, "retries", DEFAULT_RETRIES)),
            output=pick(args.output, pipe, "output", "pairs.jsonl"),
            shards=int(pick(args.shards, pipe, "shards", 1)),
            ablation=pick(args.ablation, pipe, "ablation", ABLATION_BOTH),
            progress_every=int(pick(args.progress_every, pipe, "progress_every", 1000)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "prepare":
            summary = run_prepare(_build_prepare_config(args))
            print(json.dumps(summary.to_dict(), indent=2))
        else:
            report = run_eval(
                args.metric,
                args.system,
                lowercase=not args.no_lowercase,
                per_instance=args.per_instance,
            )
            print(json.dumps(report, indent=2))
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CorpusIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
