"""Command-line surface: rank one dataset, simulate data, run benchmarks,
or check against the brute-force oracle.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import borda, brute_force_01, bt_fit, zero_one_cost
from .data import DataError, load_csv, scores_to_ranking, write_csv
from .experiment import ExperimentSpec, emit, run_experiment
from .metrics import kendall_tau
from .pdhg import DivergenceError, PdhgConfig
from .reweight import (PDRankConfig, confidence_report, pd_rank,
                       write_confidence_csv)
from .simulate import BTGenConfig, ToggleNoiseConfig, generate_bt, generate_toggle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pdrank",
                     description="Rank aggregation from noisy pairwise comparisons")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank one comparison CSV")
    p_rank.add_argument("--input", required=True, help="comparison CSV file")
    p_rank.add_argument("--method", choices=("pdrank", "borda", "bt"),
                        default="pdrank")
    p_rank.add_argument("--gamma", type=float, default=0.01)
    p_rank.add_argument("--epsilon", type=float, default=1e-3)
    p_rank.add_argument("--eps-in", type=float, default=0.01)
    p_rank.add_argument("--max-outer", type=int, default=30)
    p_rank.add_argument("--relaxation", type=float, default=1.0)
    p_rank.add_argument("--tau", type=float, default=None,
                        help="manual primal step (advanced; needs --sigma)")
    p_rank.add_argument("--sigma", type=float, default=None,
                        help="manual dual step (advanced; needs --tau)")
    p_rank.add_argument("--truth", default=None,
                        help="ground-truth sidecar JSON (adds tau and flags)")
    p_rank.add_argument("--output", default=None, help="result JSON (default stdout)")
    p_rank.add_argument("--confidence", default=None,
                        help="write per-entry confidence CSV here")
    p_rank.add_argument("--trace", default=None,
                        help="write inner convergence trace CSV here")
    p_rank.add_argument("--weights-trace", default=None,
                        help="write per-outer-iteration weight trace CSV here")

    p_sim = sub.add_parser("simulate", help="emit a synthetic dataset")
    p_sim.add_argument("--model", choices=("toggle", "bt"), default="toggle")
    p_sim.add_argument("--items", type=int, required=True)
    group = p_sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--standard-trials", type=float, default=None)
    group.add_argument("--comparisons", type=int, default=None)
    p_sim.add_argument("--delta", type=float, default=0.1)
    p_sim.add_argument("--score-low", type=float, default=1.0)
    p_sim.add_argument("--score-high", type=float, default=5.0)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--output", required=True, help="dataset CSV path")
    p_sim.add_argument("--sidecar", default=None,
                       help="ground-truth JSON path (default <output>.truth.json)")

    p_bench = sub.add_parser("bench", help="run an experiment spec")
    p_bench.add_argument("--config", required=True, help="experiment spec JSON")
    p_bench.add_argument("--seed", type=int, default=None,
                         help="base seed (mandatory here or in the config)")
    p_bench.add_argument("--output-dir", required=True)
    p_bench.add_argument("--workers", type=int, default=None)

    p_oracle = sub.add_parser("oracle", help="exact 0-1 minimizer (M <= 8)")
    p_oracle.add_argument("--input", required=True)
    p_oracle.add_argument("--method", choices=("pdrank", "borda", "bt"),
                          default=None, help="also score this method's ranking")
    return parser


def _rank_scores(args, dataset):
    """Returns (scores, result_info dict, pd_result or None)."""
    if args.method == "borda":
        t0 = time.perf_counter()
        scores, _ = borda(dataset)
        return scores, {"wall_time_s": time.perf_counter() - t0}, None
    if args.method == "bt":
        t0 = time.perf_counter()
        fit, _ = bt_fit(dataset)
        info = {"wall_time_s": time.perf_counter() - t0,
                "iterations": fit.iterations,
                "regularized": fit.regularized}
        return fit.strengths, info, None
    cfg = PDRankConfig(epsilon=args.epsilon, gamma=args.gamma,
                       max_outer_iters=args.max_outer,
                       inner=PdhgConfig(tau=args.tau, sigma=args.sigma,
                                        relaxation=args.relaxation,
                                        eps_in=args.eps_in))
    result = pd_rank(dataset, cfg)
    info = {"wall_time_s": result.wall_time_s,
            "outer_iters": result.outer_iters,
            "inner_iters": result.inner_iters,
            "converged": result.converged}
    return result.scores, info, result


def _load_truth(path, dataset):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    by_name = dict(zip(doc["item_names"], doc["true_scores"]))
    try:
        return np.array([by_name[dataset.name_of(i)]
                         for i in range(dataset.num_items)], dtype=float)
    except KeyError as exc:
        raise DataError(f"truth sidecar is missing item {exc}") from exc


def _cmd_rank(args) -> int:
    dataset = load_csv(args.input)
    scores, info, pd_result = _rank_scores(args, dataset)
    ranking = scores_to_ranking(scores)
    doc = {
        "method": args.method,
        "num_items": dataset.num_items,
        "num_entries": dataset.num_entries,
        "total_comparisons": dataset.total_comparisons,
        "ranking": [dataset.name_of(int(i)) for i in ranking],
        "scores": {dataset.name_of(i): float(scores[i])
                   for i in range(dataset.num_items)},
        **info,
    }
    true_scores = None
    if args.truth:
        true_scores = _load_truth(args.truth, dataset)
        doc["kendall_tau"] = kendall_tau(scores_to_ranking(true_scores), ranking)
    if args.confidence:
        if pd_result is None:
            raise _UsageError("--confidence requires --method pdrank")
        write_confidence_csv(confidence_report(pd_result, dataset, true_scores),
                             args.confidence)
        doc["confidence_csv"] = args.confidence
    if args.trace or args.weights_trace:
        if pd_result is None:
            raise _UsageError("--trace/--weights-trace require --method pdrank")
    if args.weights_trace:
        with open(args.weights_trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["outer_iter", "entry", "item_i", "item_j",
                             "label", "count", "weight"])
            for outer, weights in enumerate(pd_result.weight_history):
                for k in range(dataset.num_entries):
                    writer.writerow([
                        outer, k,
                        dataset.name_of(int(dataset.items_i[k])),
                        dataset.name_of(int(dataset.items_j[k])),
                        int(dataset.labels[k]), int(dataset.counts[k]),
                        repr(float(weights[k])),
                    ])
        doc["weights_trace_csv"] = args.weights_trace
    if args.trace:
        # re-solve the final subproblem to export its convergence trace
        from .pdhg import pdhg_solve
        weights = (pd_result.weight_history[-2]
                   if len(pd_result.weight_history) > 1
                   else pd_result.weight_history[-1])
        x_start = (pd_result.score_history[-2]
                   if len(pd_result.score_history) > 1 else None)
        _, trace = pdhg_solve(dataset, weights, args.gamma,
                              PdhgConfig(eps_in=args.eps_in), x0=x_start)
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "cost", "wall_time_s"])
            for it, cost, wall in trace.rows():
                writer.writerow([it, repr(cost), repr(wall)])
        doc["trace_csv"] = args.trace
    _write_json(doc, args.output)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    kwargs = dict(num_items=args.items, seed=args.seed)
    if args.standard_trials is not None:
        kwargs["standard_trials"] = args.standard_trials
    else:
        kwargs["num_comparisons"] = args.comparisons
    try:
        if args.model == "toggle":
            cfg = ToggleNoiseConfig(delta=args.delta, **kwargs)
            dataset, truth = generate_toggle(cfg)
            config_doc = {"model": "toggle", "num_items": args.items,
                          "delta": args.delta, "seed": args.seed,
                          "num_comparisons": cfg.resolved_n}
        else:
            cfg = BTGenConfig(score_low=args.score_low, score_high=args.score_high,
                              **kwargs)
            dataset, truth = generate_bt(cfg)
            config_doc = {"model": "bt", "num_items": args.items,
                          "score_low": args.score_low,
                          "score_high": args.score_high, "seed": args.seed,
                          "num_comparisons": cfg.resolved_n}
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    write_csv(dataset, args.output)
    sidecar = args.sidecar or f"{args.output}.truth.json"
    doc = {
        "config": config_doc,
        "item_names": [dataset.name_of(i) for i in range(dataset.num_items)],
        "true_scores": [float(s) for s in truth.true_scores],
        "true_ranking": [int(i) for i in truth.true_ranking],
    }
    _write_json(doc, sidecar)
    print(f"wrote {args.output} and {sidecar}", file=sys.stderr)
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {args.config}: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if "seed" not in raw:
        raise _UsageError("bench requires --seed (or a seed in the config)")
    try:
        spec = ExperimentSpec.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"bad experiment spec: {exc}") from exc
    result = run_experiment(spec)
    paths = emit(result, args.output_dir)
    print(f"wrote {paths['csv']} and {paths['json']}", file=sys.stderr)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    dataset = load_csv(args.input)
    try:
        order, cost = brute_force_01(dataset)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    doc = {
        "optimal_order": [dataset.name_of(int(i)) for i in order],
        "optimal_cost": cost,
        "total_comparisons": dataset.total_comparisons,
    }
    if args.method:
        class _A:  # reuse the rank defaults
            method = args.method
            gamma, epsilon, eps_in, max_outer = 0.01, 1e-3, 0.01, 30
            relaxation, tau, sigma = 1.0, None, None
        scores, _, _ = _rank_scores(_A, dataset)
        method_cost = zero_one_cost(scores_to_ranking(scores), dataset)
        doc["method"] = args.method
        doc["method_cost"] = method_cost
        doc["gap"] = method_cost - cost
    _write_json(doc, None)
    return EXIT_OK


def _write_json(doc: dict, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"rank": _cmd_rank, "simulate": _cmd_simulate,
                   "bench": _cmd_bench, "oracle": _cmd_oracle}[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"solver divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
