import numpy as np
import pytest

from roadcost.errors import GenerationError
from roadcost.solver import build_q, solve_weights
from roadcost.synth import SyntheticSpec, equal_split_schedule, generate_synthetic
from roadcost.trips import record_tag_weights


def _trips_equal(a, b) -> bool:
    if len(a) != len(b):
        return False
    for ta, tb in zip(a, b):
        if ta.cost != tb.cost or len(ta.records) != len(tb.records):
            return False
        for ra, rb in zip(ta.records, tb.records):
            if (ra.edge, ra.day_class, ra.enter, ra.exit) != (
                rb.edge, rb.day_class, rb.enter, rb.exit,
            ):
                return False
    return True


class TestDeterminism:
    def test_same_seed_identical(self):
        spec = SyntheticSpec(rows=4, cols=4, n_trips=30, noise=0.1)
        g1, t1, trips1 = generate_synthetic(spec, seed=5)
        g2, t2, trips2 = generate_synthetic(spec, seed=5)
        assert np.array_equal(g1.lengths, g2.lengths)
        assert np.array_equal(t1.values, t2.values)
        assert _trips_equal(trips1, trips2)

    def test_different_seed_differs(self):
        spec = SyntheticSpec(rows=4, cols=4, n_trips=30)
        _, t1, trips1 = generate_synthetic(spec, seed=5)
        _, t2, trips2 = generate_synthetic(spec, seed=6)
        assert not np.array_equal(t1.values, t2.values)


class TestGenerationBasics:
    def test_grid_shape(self):
        spec = SyntheticSpec(rows=3, cols=4, n_trips=0)
        graph, _, trips = generate_synthetic(spec, seed=0)
        assert graph.n_vertices == 12
        # horizontal roads: 3*3, vertical roads: 2*4, two directions each
        assert graph.n_edges == 2 * (3 * 3 + 2 * 4)
        assert len(trips) == 0

    def test_trips_valid_against_graph(self):
        spec = SyntheticSpec(rows=4, cols=4, n_trips=40)
        graph, _, trips = generate_synthetic(spec, seed=1)
        trips.validate_against(graph)

    def test_costs_match_model_when_noise_free(self):
        from roadcost.trips import trip_cost

        spec = SyntheticSpec(rows=4, cols=4, n_trips=25, noise=0.0)
        graph, truth, trips = generate_synthetic(spec, seed=2)
        for trip in trips:
            assert trip.cost == pytest.approx(trip_cost(trip, graph, truth), rel=1e-12)

    def test_noise_perturbs_costs(self):
        from roadcost.trips import trip_cost

        spec = SyntheticSpec(rows=4, cols=4, n_trips=25, noise=0.1)
        graph, truth, trips = generate_synthetic(spec, seed=2)
        deviations = [
            abs(t.cost - trip_cost(t, graph, truth)) / trip_cost(t, graph, truth)
            for t in trips
        ]
        assert max(deviations) > 0.01

    def test_no_immediate_u_turns(self):
        spec = SyntheticSpec(rows=5, cols=5, n_trips=60, trip_len=(5, 10))
        graph, _, trips = generate_synthetic(spec, seed=3)
        for trip in trips:
            for r1, r2 in zip(trip.records, trip.records[1:]):
                reverse = (
                    graph.tails[r1.edge] == graph.heads[r2.edge]
                    and graph.heads[r1.edge] == graph.tails[r2.edge]
                )
                assert not reverse

    def test_timestamps_on_second_grid(self):
        # HH:MM:SS serialization is lossless only for whole-second times
        spec = SyntheticSpec(rows=4, cols=4, n_trips=20)
        _, _, trips = generate_synthetic(spec, seed=4)
        for trip in trips:
            for rec in trip.records:
                assert abs(rec.enter * 60 - round(rec.enter * 60)) < 1e-6
                assert abs(rec.exit * 60 - round(rec.exit * 60)) < 1e-6

    def test_speed_limit_truth(self):
        spec = SyntheticSpec(
            rows=3, cols=3, n_trips=5,
            speed_limit_choices=(50.0, 110.0), truth_from_speed_limits=True,
        )
        graph, truth, _ = generate_synthetic(spec, seed=5)
        np.testing.assert_allclose(truth.values[: graph.n_edges], 3.6 / graph.speed_limits)


class TestCoverage:
    def test_target_met(self):
        spec = SyntheticSpec(rows=6, cols=6, n_trips=80, trip_len=(3, 6), coverage=0.5)
        graph, _, trips = generate_synthetic(spec, seed=6)
        covered = {r.edge for t in trips for r in t.records}
        assert len(covered) / graph.n_edges >= 0.5

    def test_unreachable_target_raises(self):
        spec = SyntheticSpec(rows=6, cols=6, n_trips=2, trip_len=(1, 1), coverage=0.9)
        with pytest.raises(GenerationError, match="coverage"):
            generate_synthetic(spec, seed=7)


class TestCoverAllEntries:
    def test_every_entry_observed(self):
        spec = SyntheticSpec(rows=3, cols=3, n_trips=10, cover_all_entries=True)
        graph, _, trips = generate_synthetic(spec, seed=8)
        touched = np.zeros(graph.n_entries, dtype=bool)
        for trip in trips:
            for rec in trip.records:
                for tag, _ in record_tag_weights(rec, graph.tag_schedule):
                    touched[tag * graph.n_edges + rec.edge] = True
        assert touched.all()

    def test_noise_free_recovery(self):
        spec = SyntheticSpec(rows=4, cols=4, n_trips=30, noise=0.0, cover_all_entries=True)
        graph, truth, trips = generate_synthetic(spec, seed=9)
        q = build_q(trips, graph)
        d, _ = solve_weights(q, trips.costs(), None, None, 0.0, 0.0, 1e-10, tol=1e-12)
        np.testing.assert_allclose(d, truth.values, rtol=1e-6)


class TestSpecValidation:
    def test_tiny_grid_rejected(self):
        with pytest.raises(ValueError):
            SyntheticSpec(rows=1, cols=5)

    def test_range_count_mismatch(self):
        with pytest.raises(ValueError, match="weight range"):
            SyntheticSpec(tags=("A",), weight_ranges=((0.1, 0.2), (0.3, 0.4)))

    def test_truth_needs_limits(self):
        with pytest.raises(ValueError, match="speed"):
            SyntheticSpec(truth_from_speed_limits=True)

    def test_equal_split_schedule_partitions(self):
        schedule = equal_split_schedule(("A", "B", "C"))
        assert schedule.n_tags == 3
        assert schedule.tag_of("weekday", 0.0) == 0
        assert schedule.tag_of("weekday", 500.0) == 1
        assert schedule.tag_of("weekend", 720.0) == 0
