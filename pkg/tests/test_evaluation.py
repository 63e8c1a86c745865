import numpy as np
import pytest

from roadcost.config import RunConfig
from roadcost.evaluation import (
    alr,
    alr_curve,
    edge_coverage,
    grid_search,
    run_comparison,
    speed_limit_baseline,
    ssl,
    training_size_sweep,
)
from roadcost.graph import CostVector, RoadGraph, build_dual
from roadcost.synth import SyntheticSpec, generate_synthetic
from roadcost.trips import LinkRecord, Trip, TripSet, split_trips

from conftest import make_trip, tripset


def _unit_graph(schedule, lengths=(100.0,), limits=None):
    vertices = [f"v{i}" for i in range(len(lengths) + 1)]
    edges = [(vertices[i], vertices[i + 1]) for i in range(len(lengths))]
    return RoadGraph.from_edges(vertices, edges, lengths, schedule, speed_limits=limits)


class TestSsl:
    def test_perfect_weights(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.05]), 1, 1)
        trip = Trip((LinkRecord(0, "weekday", 100.0, 101.0),), 5.0)
        assert ssl(tripset(trip), g, d) == 0.0

    def test_single_residual(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.07]), 1, 1)  # estimate 7, actual 10
        trip = Trip((LinkRecord(0, "weekday", 100.0, 101.0),), 10.0)
        assert ssl(tripset(trip), g, d) == pytest.approx(9.0)

    def test_sum_of_squares(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.0]), 1, 1)
        trips = tripset(
            Trip((LinkRecord(0, "weekday", 100.0, 101.0),), 1.0),
            Trip((LinkRecord(0, "weekday", 200.0, 201.0),), 2.0),
        )
        assert ssl(trips, g, d) == pytest.approx(5.0)


class TestAlr:
    def test_overestimate(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([1.30]), 1, 1)
        trip = Trip((LinkRecord(0, "weekday", 0.0, 1.0),), 100.0)
        assert alr(trip, g, d) == pytest.approx(0.30)

    def test_exact_estimate(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([1.0]), 1, 1)
        trip = Trip((LinkRecord(0, "weekday", 0.0, 1.0),), 100.0)
        assert alr(trip, g, d) == 0.0

    def test_underestimate(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.50]), 1, 1)
        trip = Trip((LinkRecord(0, "weekday", 0.0, 1.0),), 100.0)
        assert alr(trip, g, d) == pytest.approx(0.5)

    def test_zero_actual_rejected(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.5]), 1, 1)
        trip = Trip((LinkRecord(0, "weekday", 0.0, 1.0),), 0.0)
        with pytest.raises(ValueError, match="positive actual cost"):
            alr(trip, g, d)

    def test_curve_is_cdf(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule)
        d = CostVector(np.array([0.9]), 1, 1)
        trips = tripset(
            *[
                Trip((LinkRecord(0, "weekday", 0.0, 1.0),), actual)
                for actual in (60.0, 80.0, 90.0, 95.0, 120.0)
            ]
        )
        curve = alr_curve(trips, g, d)
        fractions = [f for _, f in curve]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))
        assert curve[-1][1] == 1.0
        assert [pct for pct, _ in curve] == list(range(1, 101))


class TestEdgeCoverage:
    def test_full(self, junction_graph):
        mask = np.ones(junction_graph.n_entries, dtype=bool)
        assert edge_coverage(junction_graph, mask) == 1.0

    def test_any_tag_counts(self, junction_graph):
        mask = np.zeros(junction_graph.n_entries, dtype=bool)
        mask[junction_graph.entry_index(0, 1)] = True  # edge 0 only in tag 1
        assert edge_coverage(junction_graph, mask) == pytest.approx(1 / 5)

    def test_shape_contract(self, junction_graph):
        with pytest.raises(ValueError):
            edge_coverage(junction_graph, np.ones(3, dtype=bool))


class TestSpeedLimitBaseline:
    def test_urban_weight(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, lengths=(100.0,), limits=[50.0])
        base = speed_limit_baseline(g, lam=1.0)
        assert base.values[0] * 100.0 == pytest.approx(7.2)  # seconds for 100 m

    def test_lambda_scales_urban(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, lengths=(100.0,), limits=[50.0])
        base = speed_limit_baseline(g, lam=2.0)
        assert base.values[0] * 100.0 == pytest.approx(14.4)

    def test_highway_not_scaled(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, lengths=(100.0,), limits=[110.0])
        assert speed_limit_baseline(g, lam=2.0).values[0] == pytest.approx(3.6 / 110.0)

    def test_missing_limit_uses_default(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, lengths=(100.0, 100.0), limits=[None, 50.0])
        base = speed_limit_baseline(g, lam=1.0, default_kmh=50.0)
        assert base.values[0] == base.values[1]

    def test_identical_across_tags(self, two_tag_schedule):
        g = _unit_graph(two_tag_schedule, lengths=(100.0,), limits=[80.0])
        base = speed_limit_baseline(g, lam=1.5)
        assert base.values[0] == base.values[1]

    def test_lambda_below_one_rejected(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, limits=[50.0])
        with pytest.raises(ValueError, match="lambda"):
            speed_limit_baseline(g, lam=0.5)

    def test_bad_default_rejected(self, single_tag_schedule):
        g = _unit_graph(single_tag_schedule, limits=[50.0])
        with pytest.raises(ValueError, match="default"):
            speed_limit_baseline(g, default_kmh=0.0)


@pytest.fixture(scope="module")
def small_experiment():
    spec = SyntheticSpec(rows=6, cols=6, n_trips=60, trip_len=(3, 7), coverage=0.4, noise=0.05)
    graph, truth, trips = generate_synthetic(spec, seed=11)
    dual = build_dual(graph)
    train, test = split_trips(trips, 0.5, seed=12)
    return graph, dual, truth, trips, train, test


class TestRunComparison:
    def test_f1_ratio_is_one(self, small_experiment):
        graph, dual, _, _, train, test = small_experiment
        report = run_comparison(train, test, graph, dual, RunConfig())
        assert report.ratios["F1"] == 1.0

    def test_coverage_orderings(self, small_experiment):
        graph, dual, _, _, train, test = small_experiment
        report = run_comparison(train, test, graph, dual, RunConfig())
        cov = report.coverage_per_variant
        assert cov["F1"] <= cov["F2"] <= cov["F4"]
        assert cov["F1"] <= cov["F3"] <= cov["F4"]
        # adjacency reaches everything on a strongly connected grid
        assert cov["F3"] == 1.0 and cov["F4"] == 1.0

    def test_f1_training_fit_beats_zero_weights(self, small_experiment):
        graph, dual, _, _, train, test = small_experiment
        report = run_comparison(train, train, graph, dual, RunConfig(gamma=1e-8))
        zero = CostVector.zeros(graph)
        assert report.ssl_per_variant["F1"] <= ssl(train, graph, zero)

    def test_unknown_variant_rejected(self, small_experiment):
        graph, dual, _, _, train, test = small_experiment
        with pytest.raises(ValueError, match="variant"):
            run_comparison(train, test, graph, dual, RunConfig(), variants=("F9",))

    def test_deterministic(self, small_experiment):
        graph, dual, _, _, train, test = small_experiment
        r1 = run_comparison(train, test, graph, dual, RunConfig(), variants=("F1", "F4"))
        r2 = run_comparison(train, test, graph, dual, RunConfig(), variants=("F1", "F4"))
        assert r1.ssl_per_variant == r2.ssl_per_variant


def test_training_size_sweep_shape(small_experiment):
    graph, dual, _, trips, _, _ = small_experiment
    results = training_size_sweep(
        trips, graph, dual, RunConfig(), fractions=(0.5, 1.0), test_fraction=0.25, seed=5
    )
    assert [f for f, _ in results] == [0.5, 1.0]
    assert all(s >= 0 for _, s in results)


class TestGridSearch:
    def test_picks_grid_minimum(self, small_experiment):
        graph, dual, _, trips, _, _ = small_experiment
        best, table = grid_search(
            trips, graph, dual, RunConfig(),
            alphas=(0.1, 1.0), betas=(0.5, 4.0), gammas=(1e-4,),
            n_folds=3, seed=8,
        )
        assert len(table) == 4
        best_row = min(table, key=lambda r: r["mean_ssl"])
        assert best.alpha == best_row["alpha"]
        assert best.beta == best_row["beta"]

    def test_deterministic(self, small_experiment):
        graph, dual, _, trips, _, _ = small_experiment
        _, t1 = grid_search(trips, graph, dual, RunConfig(), alphas=(1.0,),
                            betas=(1.0, 2.0), n_folds=2, seed=8)
        _, t2 = grid_search(trips, graph, dual, RunConfig(), alphas=(1.0,),
                            betas=(1.0, 2.0), n_folds=2, seed=8)
        assert t1 == t2

    def test_too_few_trips(self, small_experiment):
        graph, dual, _, _, _, _ = small_experiment
        tiny = TripSet(tuple())
        with pytest.raises(ValueError, match="folds"):
            grid_search(tiny, graph, dual, RunConfig(), n_folds=3)
