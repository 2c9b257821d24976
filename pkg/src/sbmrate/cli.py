"""Command-line surface: sample, estimate, loss, bounds, sweep.

Every subcommand is a thin wrapper over the library; outputs are the
JSON serialization of the corresponding library result (stable keys,
UTF-8).  Validation failures exit nonzero with a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import bound_report
from .core import ModelParams, SpaceKind, SpaceVariant
from .estimator import (
    EnumerationCapError,
    lambda_unified,
    lambda_weighted,
    objective,
    solve_exhaustive,
    solve_greedy,
)
from .fileio import read_assignment, read_graph, write_assignment, write_graph
from .harness import ExperimentConfig, sweep
from .loss import local_loss, mismatch_ratio
from .sampler import sample_assignment, sample_graph

__all__ = ["main"]


def _space_from_args(args) -> SpaceKind:
    return SpaceKind(SpaceVariant(args.space.replace("-", "_")), args.delta)


def _add_space_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--space",
        default="general",
        choices=["general", "homogeneous", "equal-size", "least-favorable"],
        help="assignment space (size constraints) to work in",
    )
    parser.add_argument(
        "--delta", type=float, default=0.1, help="size slack for --space equal-size"
    )


def _cmd_sample(args) -> int:
    params = ModelParams(n=args.n, k=args.k, a=args.a, b=args.b, beta=args.beta)
    kind = _space_from_args(args)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    sigma = sample_assignment(params, kind, rng)
    graph = sample_graph(sigma, params, rng)
    write_graph(graph, args.graph_out)
    write_assignment(sigma, args.sigma_out)
    print(json.dumps({"n": params.n, "edges": graph.edge_count, "sizes": list(sigma.sizes())}))
    return 0


def _cmd_estimate(args) -> int:
    graph = read_graph(args.graph)
    params = ModelParams(n=graph.n, k=args.k, a=args.a, b=args.b, beta=args.beta)
    kind = _space_from_args(args)
    if args.w is None:
        penalty = lambda_unified(args.a, args.b, graph.n)
    else:
        penalty = lambda_weighted(args.a, args.b, graph.n, args.w, k=args.k)
    if args.solver == "exhaustive":
        result = solve_exhaustive(graph, params, kind, penalty)
        sigma_hat, obj = result.assignment, result.objective
    else:
        rng = np.random.Generator(np.random.PCG64(args.seed))
        best = None
        for _ in range(max(1, args.restarts)):
            init = sample_assignment(params, kind, rng)
            cand = solve_greedy(graph, init, penalty, kind, beta=args.beta)
            cand_obj = objective(graph, cand, penalty)
            if best is None or cand_obj > best[1]:
                best = (cand, cand_obj)
        sigma_hat, obj = best
    if args.out:
        write_assignment(sigma_hat, args.out)
    payload = {
        "objective": obj,
        "lambda": penalty.lam,
        "labels_zero_based": [x - 1 for x in sigma_hat.labels],
    }
    if args.truth:
        truth = read_assignment(args.truth)
        r = mismatch_ratio(truth, sigma_hat)
        payload.update(r_num=r.numerator, r_den=r.denominator, r=float(r))
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_loss(args) -> int:
    sigma = read_assignment(args.sigma)
    sigma_hat = read_assignment(args.sigma_hat)
    r = mismatch_ratio(sigma, sigma_hat)
    payload = {"r_num": r.numerator, "r_den": r.denominator, "r": float(r)}
    if args.local is not None:
        ll = local_loss(sigma, sigma_hat, args.local)
        payload.update(
            local_node=args.local,
            local_num=ll.numerator,
            local_den=ll.denominator,
            local=float(ll),
        )
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_bounds(args) -> int:
    params = ModelParams(n=args.n, k=args.k, a=args.a, b=args.b, beta=args.beta)
    report = bound_report(params, m=args.m, n_prime=args.nprime)
    print(report.to_json())
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    result = sweep(config, threads=args.threads)
    print(
        json.dumps(
            {"csv": result.csv_path, "summary": result.summary_path,
             "rows": len(result.records)},
            sort_keys=True,
        )
    )
    return 1 if result.any_point_failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbmrate",
        description="Block model sampling, penalized likelihood estimation, losses, "
        "risk bounds, and Monte Carlo sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw an assignment and a graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    _add_space_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--graph-out", required=True)
    p.add_argument("--sigma-out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="run a solver on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--w", type=float, default=None, help="weighted penalty (default: unified)")
    p.add_argument("--solver", choices=["exhaustive", "greedy"], required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="greedy restart seed")
    p.add_argument("--truth", default=None, help="assignment file; prints r against it")
    p.add_argument("--out", default=None, help="write the estimated assignment here")
    _add_space_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("loss", help="mis-match ratio between two assignment files")
    p.add_argument("--sigma", required=True)
    p.add_argument("--sigma-hat", required=True)
    p.add_argument("--local", type=int, default=None, help="also print the local loss of this node")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("bounds", help="print the bound report JSON for a parameter point")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--nprime", type=int, default=None)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, EnumerationCapError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
