"""Command-line entry point: gen-hyp, select, difficulty, simulate, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
All artifacts go to files; logging (including the resolved configuration of
every run) goes to standard error. Selection, generation, and simulation
refuse to run without an explicit --seed so nothing is silently
nondeterministic; --split-seed controls the train/test partition and must be
kept identical across pipeline stages that share it.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

from .core import (
    DataError,
    LearnerParams,
    Strategy,
    load_dataset,
    load_hypotheses,
    split_dataset,
    write_dataset,
    write_hypotheses,
    write_teaching_set,
)
from .explanations import attach_explanations, center_difficulties, load_feature_maps
from .hypothesis import HypothesisGenConfig, build_hypothesis_space, teachability_filter
from .simulator import run_experiment, write_reports
from .teacher import build_context, greedy_select

log = logging.getLogger("teachkit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit(2); remap to 1
        raise UsageError(message)


def _positive_float(text: str) -> float:
    value = math.inf if text.strip().lower() == "inf" else float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not positive")
    return value


def _log_config(args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    log.info("effective config: %s", resolved)


def _candidate_pool(dataset, space, train_fraction: float, split_seed: int):
    train_ids, test_ids = split_dataset(dataset, train_fraction, split_seed)
    eligible = teachability_filter(dataset, train_ids, space)
    log.info(
        "split: %d train / %d test; %d train items survive the teachability filter",
        len(train_ids),
        len(test_ids),
        len(eligible),
    )
    return eligible, test_ids


def cmd_gen_hyp(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    train_ids, _ = split_dataset(dataset, args.train_fraction, args.split_seed)
    cfg = HypothesisGenConfig(
        target_count=args.num,
        seed=args.seed,
        svm_lambda=args.svm_lambda,
        svm_epochs=args.svm_epochs,
        kmeans_max_iters=args.kmeans_iters,
    )
    space = build_hypothesis_space(dataset, train_ids, cfg)
    write_hypotheses(space, dataset.d, args.out)
    log.info("wrote %d hypotheses to %s", len(space), args.out)
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    space = load_hypotheses(args.hypotheses)
    params = LearnerParams(alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    eligible, _ = _candidate_pool(dataset, space, args.train_fraction, args.split_seed)
    ctx = build_context(dataset, space, params, eligible)
    tset = greedy_select(Strategy(args.strategy.upper()), args.budget, ctx, seed=args.seed)
    write_teaching_set(tset, args.out)
    log.info("wrote %d-item %s teaching set to %s", len(tset.item_ids), tset.strategy.value, args.out)
    return EXIT_OK


def cmd_difficulty(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    stacks, class_weights = load_feature_maps(args.feature_maps)
    with_explanations = attach_explanations(dataset, stacks, class_weights)
    centered = center_difficulties(with_explanations)
    write_dataset(centered, args.out)
    log.info("wrote dataset with centered difficulties to %s", args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    space = load_hypotheses(args.hypotheses)
    params = LearnerParams(alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    eligible, test_ids = _candidate_pool(dataset, space, args.train_fraction, args.split_seed)
    ctx = build_context(dataset, space, params, eligible)
    strategies = [Strategy(s.strip().upper()) for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise UsageError("no strategies given")
    reports = run_experiment(strategies, args.learners, ctx, test_ids, args.budget, args.seed)
    write_reports(reports, args.out)
    for rep in reports:
        log.info(
            "%s: %d learners, mean accuracy %s",
            rep.strategy,
            rep.learners,
            "n/a" if rep.mean_accuracy is None else f"{rep.mean_accuracy:.4f}",
        )
    log.info("wrote simulation report to %s", args.out)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, SessionService, create_app

    config = ServiceConfig.from_file(args.config)
    service = SessionService(config)
    app = create_app(service)
    log.info("serving on port %d", config.port)
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="teachkit", description="teaching-set pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-hyp", help="generate a hypothesis space from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--num", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--svm-lambda", type=float, default=1e-3)
    p.add_argument("--svm-epochs", type=int, default=200)
    p.add_argument("--kmeans-iters", type=int, default=100)
    p.set_defaults(func=cmd_gen_hyp)

    p = sub.add_parser("select", help="select a teaching set")
    p.add_argument("--dataset", required=True)
    p.add_argument("--hypotheses", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--strategy",
        required=True,
        choices=[s.value.lower() for s in Strategy] + [s.value for s in Strategy],
    )
    p.add_argument("--alpha", type=_positive_float, default=0.5)
    p.add_argument("--beta", type=_positive_float, default=1.0)
    p.add_argument("--gamma", type=_positive_float, default=1.0)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("difficulty", help="attach explanations and centered difficulties")
    p.add_argument("--dataset", required=True)
    p.add_argument("--feature-maps", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_difficulty)

    p = sub.add_parser("simulate", help="run simulated learners per strategy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--hypotheses", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strategies", required=True, help="comma-separated strategy names")
    p.add_argument("--learners", type=int, default=100)
    p.add_argument("--alpha", type=_positive_float, default=0.5)
    p.add_argument("--beta", type=_positive_float, default=1.0)
    p.add_argument("--gamma", type=_positive_float, default=1.0)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _log_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
