"""Command-line interface.

Subcommands: ``synth`` (generate a synthetic dataset), ``split`` (train/test
split of a trips file), ``annotate`` (fit edge weights and write them out),
``evaluate`` (compare the objective variants on a held-out split), and
``pagerank-stats`` (dual-graph PageRank and degree statistics).

Exit codes: 0 success, 2 input validation failure, 3 solver non-convergence,
4 I/O error. Diagnostics go to stderr only. Set ROADCOST_LOG to a level name
(debug, info, warning, error) to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .config import VARIANTS, RunConfig, parse_config_file
from .dataio import load_dataset, save_dataset, save_trips, write_weights
from .errors import ConvergenceError, GenerationError, LoadError
from .evaluation import (
    build_constraints,
    edge_coverage,
    run_comparison,
    solve_variant,
    training_size_sweep,
)
from .graph import build_dual
from .pagerank import degree_stats, pagerank, pagerank_stats, transition_matrices
from .solver import annotated_mask, objective_terms
from .synth import SyntheticSpec, generate_synthetic
from .trips import partition_by_tag, split_trips

_FORMATS_EPILOG = """\
file formats (CSV, UTF-8, header row required):
  network:  edge_id,tail,head,length_m,speed_limit_kmh  (speed blank if unknown)
  schedule: day_class,start_hhmm,end_hhmm,tag           (day_class: weekday|weekend)
  trips:    trip_id,seq,edge_id,day_class,enter_hhmmss,exit_hhmmss
  costs:    trip_id,cost
  weights:  edge_id,tag,cost_per_meter,annotated_flag
config file: key=value lines (alpha, beta, gamma, similarity_threshold,
  similarity_method, highway_cutoff_kmh, cg_tol, cg_max_iters, pr_tol,
  pr_max_iters, seed, variant); command-line flags override file values.
"""


def _add_dataset_args(parser: argparse.ArgumentParser, trips_required: bool = True):
    parser.add_argument("--network", required=True, help="network CSV")
    parser.add_argument("--schedule", required=True, help="tag schedule CSV")
    parser.add_argument("--trips", required=trips_required, help="trips CSV")
    parser.add_argument("--costs", required=trips_required, help="trip costs CSV")


def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--similarity-threshold", type=float, dest="similarity_threshold")
    parser.add_argument(
        "--similarity-method",
        choices=("exact", "sweep", "auto"),
        dest="similarity_method",
    )
    parser.add_argument("--highway-cutoff-kmh", type=float, dest="highway_cutoff_kmh")
    parser.add_argument("--cg-tol", type=float, dest="cg_tol")
    parser.add_argument("--cg-max-iters", type=int, dest="cg_max_iters")
    parser.add_argument("--pr-tol", type=float, dest="pr_tol")
    parser.add_argument("--pr-max-iters", type=int, dest="pr_max_iters")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--variant", choices=sorted(VARIANTS))


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        config = parse_config_file(args.config, config)
    overrides = {
        name: getattr(args, name)
        for name in (
            "alpha", "beta", "gamma", "similarity_threshold", "similarity_method",
            "highway_cutoff_kmh", "cg_tol", "cg_max_iters", "pr_tol",
            "pr_max_iters", "seed", "variant",
        )
        if getattr(args, name, None) is not None
    }
    return dataclasses.replace(config, **overrides)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_synth(args: argparse.Namespace) -> int:
    tags = tuple(t.strip() for t in args.tags.split(",") if t.strip())
    ranges = tuple(
        tuple(float(x) for x in pair.split(":")) for pair in args.weight_ranges.split(",")
    )
    limits = (
        tuple(float(x) for x in args.speed_limits.split(","))
        if args.speed_limits
        else None
    )
    spec = SyntheticSpec(
        rows=args.rows,
        cols=args.cols,
        tags=tags,
        weight_ranges=ranges,
        n_trips=args.n_trips,
        trip_len=(args.trip_len_min, args.trip_len_max),
        coverage=args.coverage,
        noise=args.noise,
        speed_limit_choices=limits,
        truth_from_speed_limits=args.truth_from_speed_limits,
        cover_all_entries=args.cover_all_entries,
    )
    graph, truth, trips = generate_synthetic(spec, args.seed)
    paths = save_dataset(graph, trips, args.out, truth=truth)
    logging.getLogger(__name__).info(
        "wrote %d trips over %d edges to %s", len(trips), graph.n_edges, args.out
    )
    print("\n".join(str(p) for p in paths.values()))
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    graph, trips = load_dataset(args.network, args.schedule, args.trips, args.costs)
    train, test = split_trips(trips, args.train_fraction, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trips(train, graph, out / "train_trips.csv", out / "train_costs.csv")
    save_trips(test, graph, out / "test_trips.csv", out / "test_costs.csv")
    print(f"{len(train)} train / {len(test)} test")
    return 0


def _cmd_annotate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    graph, trips = load_dataset(args.network, args.schedule, args.trips, args.costs)
    trips.validate_against(graph)
    dual = build_dual(graph)
    matrices = build_constraints(trips, graph, dual, config)
    weights, mask, info = solve_variant(
        matrices, trips.costs(), graph, config, config.variant
    )
    write_weights(args.out, graph, weights, mask)

    alpha, beta = config.variant_coefficients(config.variant)
    terms = objective_terms(
        weights.values, matrices.q, trips.costs(),
        matrices.l_a if alpha else None, matrices.l_b if beta else None,
        alpha, beta, config.gamma,
    )
    coverage_per_variant = {}
    for variant in sorted(VARIANTS):
        use_a, use_b = VARIANTS[variant]
        variant_mask = annotated_mask(
            matrices.q, matrices.a if use_a else None, matrices.b if use_b else None
        )
        coverage_per_variant[variant] = edge_coverage(graph, variant_mask)
    report = {
        "config": dataclasses.asdict(config),
        "variant": config.variant,
        "cg_iterations": info.iterations,
        "cg_relative_residual": info.residual,
        "objective": dataclasses.asdict(terms),
        "coverage_per_variant": coverage_per_variant,
        "n_trips": len(trips),
        "n_edges": graph.n_edges,
        "n_tags": graph.n_tags,
    }
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    graph, trips = load_dataset(args.network, args.schedule, args.trips, args.costs)
    trips.validate_against(graph)
    dual = build_dual(graph)
    train, test = split_trips(trips, args.train_fraction, config.seed)
    report = run_comparison(train, test, graph, dual, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    _write_csv(
        out / "alr_curve.csv",
        ["threshold_pct", "fraction"],
        [(pct, "%.6f" % frac) for pct, frac in report.alr_curve],
    )
    _write_csv(
        out / "coverage.csv",
        ["variant", "coverage"],
        [(v, "%.6f" % c) for v, c in sorted(report.coverage_per_variant.items())],
    )
    if args.sweep_fractions:
        fractions = tuple(float(x) for x in args.sweep_fractions.split(","))
        sweep = training_size_sweep(
            trips, graph, dual, config,
            fractions=fractions,
            test_fraction=1.0 - args.train_fraction,
            variant=config.variant,
        )
        _write_csv(
            out / "sweep.csv",
            ["train_pool_fraction", "ssl"],
            [("%.3f" % f, "%.6f" % s) for f, s in sweep],
        )
    return 0


def _cmd_pagerank_stats(args: argparse.Namespace) -> int:
    # trips are optional here: without them every transition matrix falls
    # back to the uniform random walk on the dual graph
    config = _config_from_args(args)
    graph, trips = load_dataset(args.network, args.schedule, args.trips, args.costs)
    trips.validate_against(graph)
    dual = build_dual(graph)
    partitions = partition_by_tag(trips, graph.tag_schedule)
    transitions = transition_matrices(dual, partitions)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tag_names = graph.tag_schedule.tags
    tag = tag_names.index(args.tag) if args.tag else 0
    pr = pagerank(transitions[tag], tol=config.pr_tol, max_iters=config.pr_max_iters)
    percentages, _ = pagerank_stats(pr)
    _write_csv(
        out / "pagerank_buckets.csv",
        ["bucket", "percentage"],
        [(b + 1, "%.17g" % percentages[b]) for b in range(100)],
    )
    _write_csv(
        out / "pagerank_values.csv",
        ["dual_vertex_id", "pagerank"],
        [(graph.edge_ids[i], "%.12g" % pr.values[i]) for i in range(dual.n_vertices)],
    )
    stats = degree_stats(dual)
    _write_csv(
        out / "degree_stats.csv",
        ["n_dual_vertices", "n_dual_edges", "max_in", "max_out", "avg_degree"],
        [
            (
                stats.n_vertices,
                stats.n_edges,
                stats.max_in,
                stats.max_out,
                "%.6f" % stats.avg_degree,
            )
        ],
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadcost",
        description="Annotate road-network edges with time-varying travel-cost weights",
        epilog=_FORMATS_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic grid dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--tags", default="OFFPEAK,PEAK", help="comma-separated tag names")
    p.add_argument(
        "--weight-ranges",
        default="0.04:0.10,0.08:0.20",
        help="per-tag lo:hi unit-cost ranges, comma separated",
    )
    p.add_argument("--n-trips", type=int, default=200)
    p.add_argument("--trip-len-min", type=int, default=4)
    p.add_argument("--trip-len-max", type=int, default=12)
    p.add_argument("--coverage", type=float, default=None, help="edge coverage target")
    p.add_argument("--noise", type=float, default=0.0, help="relative cost noise")
    p.add_argument("--speed-limits", default=None, help="comma-separated km/h choices")
    p.add_argument("--truth-from-speed-limits", action="store_true")
    p.add_argument("--cover-all-entries", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("split", help="deterministic train/test split")
    _add_dataset_args(p)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("annotate", help="fit weights for every (edge, tag) entry")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output weights CSV")
    p.add_argument("--report", required=True, help="output run-report JSON")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("evaluate", help="compare objective variants on a held-out split")
    _add_dataset_args(p)
    _add_config_args(p)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument(
        "--sweep-fractions",
        default=None,
        help="also sweep training-pool fractions (e.g. 0.2,0.4,0.6,0.8,1.0) "
        "and write sweep.csv",
    )
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pagerank-stats", help="dual-graph PageRank and degree statistics")
    _add_dataset_args(p, trips_required=False)
    _add_config_args(p)
    p.add_argument("--tag", default=None, help="tag name (default: first tag)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_pagerank_stats)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, os.environ.get("ROADCOST_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LoadError as exc:
        print(f"error [{exc.code}]:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return 2
    except (ValueError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
