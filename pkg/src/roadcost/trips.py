"""Trips as timed link-record sequences, and the additive trip-cost model.

A link record is one traversal of one edge with enter/exit times given as
(day class, minute of day). A trip is an ordered record sequence paired with
one scalar total cost. The cost model splits each record across the tags its
time span overlaps, proportionally to overlap length, and charges each part
at the per-meter cost of its (edge, tag) entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import DAY_CLASSES, MINUTES_PER_DAY, CostVector, RoadGraph, TagSchedule


@dataclass(frozen=True)
class LinkRecord:
    """One traversal of one edge; times are minutes of day, same day class.

    Records never span midnight: split such traversals upstream before
    ingestion.
    """

    edge: int
    day_class: str
    enter: float
    exit: float

    def __post_init__(self):
        if self.day_class not in DAY_CLASSES:
            raise ValueError(f"unknown day class {self.day_class!r}")
        if not 0 <= self.enter < self.exit <= MINUTES_PER_DAY:
            raise ValueError(
                f"record times must satisfy 0 <= enter < exit <= 1440, "
                f"got [{self.enter}, {self.exit}]"
            )

    @property
    def duration(self) -> float:
        return self.exit - self.enter


@dataclass(frozen=True)
class Trip:
    """Ordered link records plus the trip's total ground-truth cost."""

    records: tuple[LinkRecord, ...]
    cost: float

    def __post_init__(self):
        if not self.records:
            raise ValueError("trip has no link records")
        if self.cost < 0:
            raise ValueError(f"trip cost must be non-negative, got {self.cost}")
        day = self.records[0].day_class
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.day_class != day:
                raise ValueError("trip crosses midnight (mixed day classes)")
            if cur.enter < prev.exit:
                raise ValueError(
                    f"records out of order: exit {prev.exit} after enter {cur.enter}"
                )

    @property
    def day_class(self) -> str:
        return self.records[0].day_class


@dataclass(frozen=True)
class TripSet:
    """A bag of trips that all reference the same road graph."""

    trips: tuple[Trip, ...]

    def __len__(self) -> int:
        return len(self.trips)

    def __iter__(self):
        return iter(self.trips)

    def __getitem__(self, i: int) -> Trip:
        return self.trips[i]

    def costs(self) -> np.ndarray:
        return np.array([t.cost for t in self.trips], dtype=float)

    def validate_against(self, graph: RoadGraph) -> None:
        for k, trip in enumerate(self.trips):
            for rec in trip.records:
                if not 0 <= rec.edge < graph.n_edges:
                    raise ValueError(f"trip {k} references unknown edge index {rec.edge}")


def record_tag_weights(record: LinkRecord, schedule: TagSchedule) -> list[tuple[int, float]]:
    """Nonzero (tag, weight) overlap fractions of one record.

    The weight of a tag is the length of the record's time span lying inside
    that tag's intervals, divided by the record duration; the weights over
    all tags sum to 1 because the intervals partition the day.
    """
    duration = record.exit - record.enter
    if duration <= 0:
        raise ValueError("zero-duration link record")
    acc: dict[int, float] = {}
    for start, end, tag in schedule.day_rules(record.day_class):
        overlap = min(record.exit, end) - max(record.enter, start)
        if overlap > 0:
            acc[tag] = acc.get(tag, 0.0) + overlap
    return [(tag, total / duration) for tag, total in sorted(acc.items())]


def tag_weight(record: LinkRecord, tag_index: int, schedule: TagSchedule) -> float:
    """Fraction of the record's time span spent inside one tag's intervals."""
    for tag, weight in record_tag_weights(record, schedule):
        if tag == tag_index:
            return weight
    return 0.0


def trip_cost(trip: Trip, graph: RoadGraph, costs: CostVector) -> float:
    """Estimated trip cost under a cost vector: sum over records and tags of
    overlap weight x per-meter cost x edge length."""
    if not costs.matches(graph):
        raise ValueError(
            f"cost vector dimensions ({costs.n_edges} edges, {costs.n_tags} tags) "
            f"do not match graph ({graph.n_edges}, {graph.n_tags})"
        )
    schedule = graph.tag_schedule
    values = costs.values
    ne = graph.n_edges
    total = 0.0
    for rec in trip.records:
        length = graph.lengths[rec.edge]
        for tag, weight in record_tag_weights(rec, schedule):
            total += weight * values[tag * ne + rec.edge] * length
    return total


def partition_by_tag(trips: TripSet, schedule: TagSchedule) -> list[TripSet]:
    """Split a trip set into one subset per tag.

    A trip lands in the tag that holds the majority of its total traversal
    duration; ties break toward the lower tag index, so every trip lands in
    exactly one partition.
    """
    buckets: list[list[Trip]] = [[] for _ in range(schedule.n_tags)]
    for trip in trips:
        per_tag = np.zeros(schedule.n_tags)
        for rec in trip.records:
            for tag, weight in record_tag_weights(rec, schedule):
                per_tag[tag] += weight * rec.duration
        buckets[int(np.argmax(per_tag))].append(trip)
    return [TripSet(tuple(b)) for b in buckets]


def split_trips(trips: TripSet, train_fraction: float, seed: int) -> tuple[TripSet, TripSet]:
    """Deterministic random train/test split.

    The train side gets round(train_fraction * N) trips, clamped so both
    sides stay non-empty.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    n = len(trips)
    if n < 2:
        raise ValueError(f"cannot split {n} trip(s)")
    n_train = int(math.floor(train_fraction * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    train = tuple(trips[int(i)] for i in order[:n_train])
    test = tuple(trips[int(i)] for i in order[n_train:])
    return TripSet(train), TripSet(test)
