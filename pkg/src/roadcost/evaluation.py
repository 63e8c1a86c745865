"""Accuracy and coverage metrics, objective-variant comparison, baselines."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .config import VARIANTS, RunConfig
from .graph import CostVector, DualGraph, RoadGraph
from .pagerank import pagerank, transition_matrices
from .solver import (
    SolveInfo,
    annotated_mask,
    build_a,
    build_b,
    build_q,
    laplacian,
    solve_weights,
)
from .trips import Trip, TripSet, partition_by_tag, split_trips, trip_cost


def ssl(trips: TripSet, graph: RoadGraph, costs: CostVector) -> float:
    """Sum of squared loss between actual and estimated trip costs."""
    return float(
        sum((t.cost - trip_cost(t, graph, costs)) ** 2 for t in trips)
    )


def alr(trip: Trip, graph: RoadGraph, costs: CostVector) -> float:
    """Absolute loss ratio of one trip: |estimated - actual| / actual."""
    if trip.cost <= 0:
        raise ValueError("absolute loss ratio needs a positive actual cost")
    return abs(trip_cost(trip, graph, costs) - trip.cost) / trip.cost


def alr_curve(
    trips: TripSet,
    graph: RoadGraph,
    costs: CostVector,
    thresholds_pct: Sequence[int] = range(1, 101),
) -> list[tuple[int, float]]:
    """Fraction of trips whose loss ratio stays within each percent threshold."""
    ratios = np.array([alr(t, graph, costs) for t in trips])
    return [
        (int(pct), float(np.mean(ratios <= pct / 100.0)) if len(ratios) else 0.0)
        for pct in thresholds_pct
    ]


def edge_coverage(graph: RoadGraph, entry_mask: np.ndarray) -> float:
    """Fraction of edges with at least one annotated (edge, tag) entry."""
    if entry_mask.shape != (graph.n_entries,):
        raise ValueError("entry mask must cover every (edge, tag) entry")
    per_edge = entry_mask.reshape(graph.n_tags, graph.n_edges).any(axis=0)
    return float(per_edge.mean()) if graph.n_edges else 0.0


def speed_limit_baseline(
    graph: RoadGraph,
    lam: float = 1.0,
    default_kmh: float = 50.0,
    cutoff_kmh: float = 90.0,
) -> CostVector:
    """Travel-time weights derived from speed limits, in seconds per meter.

    Urban edges (below the cutoff) get lambda * length / speed to reflect
    driving below the limit; highways get length / speed. Missing limits
    fall back to the default. The result is identical across tags.
    """
    if lam < 1:
        raise ValueError("lambda must be at least 1")
    if default_kmh <= 0:
        raise ValueError("default speed must be positive")
    limits = np.where(np.isnan(graph.speed_limits), default_kmh, graph.speed_limits)
    seconds_per_meter = 3.6 / limits
    urban = limits < cutoff_kmh
    per_edge = np.where(urban, lam * seconds_per_meter, seconds_per_meter)
    return CostVector(np.tile(per_edge, graph.n_tags), graph.n_edges, graph.n_tags)


@dataclass(frozen=True)
class EvalReport:
    """Held-out accuracy and coverage of the four objective variants."""

    ssl_per_variant: dict[str, float]
    ratios: dict[str, float]  # SSL relative to F1
    coverage_per_variant: dict[str, float]
    alr_curve: list[tuple[int, float]]
    solve_info: dict[str, SolveInfo] = field(default_factory=dict)
    weights: dict[str, CostVector] = field(default_factory=dict, repr=False)
    entry_masks: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def as_dict(self) -> dict:
        return {
            "ssl_per_variant": self.ssl_per_variant,
            "ratios": self.ratios,
            "coverage_per_variant": self.coverage_per_variant,
            "alr_curve": [list(point) for point in self.alr_curve],
            "solve_info": {
                v: {"iterations": info.iterations, "residual": info.residual}
                for v, info in self.solve_info.items()
            },
        }


@dataclass
class ConstraintMatrices:
    """Q, thresholded similarity/adjacency matrices, and their Laplacians."""

    q: sp.csr_matrix
    a: sp.csr_matrix
    b: sp.csr_matrix
    l_a: sp.csr_matrix
    l_b: sp.csr_matrix


def build_constraints(
    train: TripSet, graph: RoadGraph, dual: DualGraph, config: RunConfig
) -> ConstraintMatrices:
    """Assemble every matrix the variant solves share for one training set."""
    partitions = partition_by_tag(train, graph.tag_schedule)
    transitions = transition_matrices(dual, partitions)
    prs = [
        pagerank(tm, tol=config.pr_tol, max_iters=config.pr_max_iters)
        for tm in transitions
    ]
    a = build_a(prs, config.similarity_threshold, method=config.similarity_method)
    b = build_b(transitions, dual, graph.is_highway(config.highway_cutoff_kmh))
    q = build_q(train, graph)
    return ConstraintMatrices(q=q, a=a, b=b, l_a=laplacian(a), l_b=laplacian(b))


def solve_variant(
    matrices: ConstraintMatrices,
    train_costs: np.ndarray,
    graph: RoadGraph,
    config: RunConfig,
    variant: str,
) -> tuple[CostVector, np.ndarray, SolveInfo]:
    """Solve one objective variant; returns weights, annotated mask, stats."""
    alpha, beta = config.variant_coefficients(variant)
    max_iters = config.cg_max_iters or None
    values, info = solve_weights(
        matrices.q,
        train_costs,
        matrices.l_a if alpha else None,
        matrices.l_b if beta else None,
        alpha,
        beta,
        config.gamma,
        tol=config.cg_tol,
        max_iters=max_iters,
    )
    mask = annotated_mask(
        matrices.q,
        matrices.a if alpha else None,
        matrices.b if beta else None,
    )
    weights = CostVector(np.where(mask, values, 0.0), graph.n_edges, graph.n_tags)
    return weights, mask, info


def run_comparison(
    train: TripSet,
    test: TripSet,
    graph: RoadGraph,
    dual: DualGraph,
    config: RunConfig,
    variants: Sequence[str] = ("F1", "F2", "F3", "F4"),
) -> EvalReport:
    """Fit every objective variant on the training set, score on the test set.

    All variants share the same constraint matrices and training data; only
    the (alpha, beta) coefficients differ, so SSL ratios isolate the effect
    of each penalty term. The loss-ratio curve reports the last variant.
    """
    matrices = build_constraints(train, graph, dual, config)
    train_costs = train.costs()

    ssl_per, coverage_per, infos, weights_per, masks = {}, {}, {}, {}, {}
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        weights, mask, info = solve_variant(matrices, train_costs, graph, config, variant)
        ssl_per[variant] = ssl(test, graph, weights)
        coverage_per[variant] = edge_coverage(graph, mask)
        infos[variant] = info
        weights_per[variant] = weights
        masks[variant] = mask

    base = ssl_per.get("F1")
    ratios = {
        v: (value / base if base else float("nan")) for v, value in ssl_per.items()
    }
    curve_variant = variants[-1]
    curve = alr_curve(test, graph, weights_per[curve_variant]) if len(test) else []
    return EvalReport(
        ssl_per_variant=ssl_per,
        ratios=ratios,
        coverage_per_variant=coverage_per,
        alr_curve=curve,
        solve_info=infos,
        weights=weights_per,
        entry_masks=masks,
    )


def grid_search(
    trips: TripSet,
    graph: RoadGraph,
    dual: DualGraph,
    base_config: RunConfig,
    alphas: Sequence[float] = (0.1, 1.0, 10.0),
    betas: Sequence[float] = (0.1, 1.0, 10.0),
    gammas: Sequence[float] = (1e-4,),
    n_folds: int = 3,
    variant: str = "F4",
    seed: Optional[int] = None,
) -> tuple[RunConfig, list[dict]]:
    """Pick (alpha, beta, gamma) by k-fold cross-validated held-out SSL.

    The constraint matrices depend only on the fold's training trips, so
    each fold assembles them once and reuses them across the whole grid.
    Returns the best configuration and the full score table (mean SSL over
    folds per combination), deterministically for a fixed seed.
    """
    seed = base_config.seed if seed is None else seed
    n = len(trips)
    if n < n_folds:
        raise ValueError(f"{n} trips cannot form {n_folds} folds")
    order = np.random.default_rng(seed).permutation(n)
    folds = [order[k::n_folds] for k in range(n_folds)]

    combos = [
        (alpha, beta, gamma) for alpha in alphas for beta in betas for gamma in gammas
    ]
    scores = {combo: [] for combo in combos}
    for k in range(n_folds):
        val_idx = set(folds[k].tolist())
        fold_train = TripSet(tuple(trips[i] for i in range(n) if i not in val_idx))
        fold_val = TripSet(tuple(trips[i] for i in range(n) if i in val_idx))
        matrices = build_constraints(fold_train, graph, dual, base_config)
        train_costs = fold_train.costs()
        for combo in combos:
            alpha, beta, gamma = combo
            config = replace(base_config, alpha=alpha, beta=beta, gamma=gamma)
            weights, _, _ = solve_variant(matrices, train_costs, graph, config, variant)
            scores[combo].append(ssl(fold_val, graph, weights))

    table = [
        {
            "alpha": alpha,
            "beta": beta,
            "gamma": gamma,
            "mean_ssl": float(np.mean(scores[(alpha, beta, gamma)])),
        }
        for alpha, beta, gamma in combos
    ]
    best = min(table, key=lambda row: row["mean_ssl"])
    best_config = replace(
        base_config, alpha=best["alpha"], beta=best["beta"], gamma=best["gamma"]
    )
    return best_config, table


def training_size_sweep(
    trips: TripSet,
    graph: RoadGraph,
    dual: DualGraph,
    config: RunConfig,
    fractions: Sequence[float] = (0.2, 0.4, 0.6, 0.8, 1.0),
    test_fraction: float = 0.2,
    variant: str = "F4",
    seed: Optional[int] = None,
) -> list[tuple[float, float]]:
    """Held-out SSL as the training pool is subsampled at several fractions.

    Reserves a fixed test set, then reuses prefixes of one shuffled training
    pool so larger fractions strictly contain smaller ones.
    """
    seed = config.seed if seed is None else seed
    pool, test = split_trips(trips, 1.0 - test_fraction, seed)
    order = np.random.default_rng(seed + 1).permutation(len(pool))
    results = []
    for fraction in fractions:
        n = max(1, int(round(fraction * len(pool))))
        subset = TripSet(tuple(pool[int(i)] for i in order[:n]))
        matrices = build_constraints(subset, graph, dual, config)
        weights, _, _ = solve_variant(matrices, subset.costs(), graph, config, variant)
        results.append((float(fraction), ssl(test, graph, weights)))
    return results
