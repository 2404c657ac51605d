"""Command line driver.

Single movie::

    clipline plan caption select build summarize --config movie.yaml
    clipline derive-reference evaluate report --config movie.yaml

Corpus roll-up (one config file per movie in a directory)::

    clipline corpus plan caption select evaluate --configs-dir configs/ --jobs 4

Exit codes: 0 success, 1 unexpected failure, 2 config, 3 missing stage
dependency, 4 backend, 5 parse.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import ClipLineError, ConfigError, exit_code_for
from .pipeline import STAGES, load_run_config, run, run_corpus, write_corpus_rollup

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipline",
        description="Clip selection and multimodal summarization pipeline.",
    )
    parser.add_argument(
        "stages",
        nargs="+",
        metavar="stage",
        help=f"stages to run, in any order ({', '.join(STAGES)}); "
             "prefix with 'corpus' to map over a config directory",
    )
    parser.add_argument("--config", help="run config file (YAML or JSON)")
    parser.add_argument("--configs-dir", help="directory of per-movie config files (corpus mode)")
    parser.add_argument("--runs-root", default="runs", help="artifact root (default: runs)")
    parser.add_argument("--force", action="store_true", help="rerun stages even when cached")
    parser.add_argument("--movie", help="override movie_id (or filter configs in corpus mode)")
    parser.add_argument("--k", type=int, help="override the number of selected clips")
    parser.add_argument("--tau", type=float, help="override the IoR matching threshold")
    parser.add_argument("--seed", type=int, help="override the baseline sampling seed")
    parser.add_argument("--jobs", type=int, default=2, help="corpus worker pool size")
    parser.add_argument("--rollup", help="corpus mode: also write this aggregate CSV")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_overrides(config, args):
    overrides = {}
    if args.movie:
        overrides["movie_id"] = args.movie
    if args.k is not None:
        overrides["k"] = args.k
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.seed is not None:
        overrides["seed"] = args.seed
    return dataclasses.replace(config, **overrides) if overrides else config


def _run_single(args, stages) -> int:
    if not args.config:
        raise ConfigError("--config is required")
    config = _apply_overrides(load_run_config(args.config), args)
    run(config, stages, runs_root=args.runs_root, force=args.force)
    print(f"ok: {config.movie_id} [{', '.join(stages)}] -> {Path(args.runs_root) / config.movie_id}")
    return 0


def _run_corpus(args, stages) -> int:
    if not args.configs_dir:
        raise ConfigError("--configs-dir is required in corpus mode")
    root = Path(args.configs_dir)
    if not root.is_dir():
        raise ConfigError(f"not a directory: {root}")
    paths = sorted(
        p for p in root.iterdir() if p.suffix in (".yaml", ".yml", ".json")
    )
    if args.movie:
        paths = [p for p in paths if p.stem == args.movie]
    if not paths:
        raise ConfigError(f"no config files found in {root}")
    results = run_corpus(paths, stages, runs_root=args.runs_root, force=args.force, jobs=args.jobs)
    failures = 0
    for movie_id, outcome in results:
        if isinstance(outcome, Exception):
            failures += 1
            print(f"failed: {movie_id}: {outcome}", file=sys.stderr)
        else:
            print(f"ok: {movie_id}")
    if args.rollup:
        rows = write_corpus_rollup(args.runs_root, args.rollup)
        print(f"rollup: {rows} rows -> {args.rollup}")
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    stages = list(args.stages)
    corpus_mode = stages and stages[0] == "corpus"
    if corpus_mode:
        stages = stages[1:]
    try:
        unknown = [s for s in stages if s not in STAGES]
        if unknown or not stages:
            raise ConfigError(
                f"unknown stage(s): {', '.join(unknown) or '(none given)'}; "
                f"valid stages: {', '.join(STAGES)}"
            )
        if corpus_mode:
            return _run_corpus(args, stages)
        return _run_single(args, stages)
    except ClipLineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
