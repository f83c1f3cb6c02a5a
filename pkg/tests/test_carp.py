import itertools
import math
import random

import pytest

from mrplan import carp, mapgen
from mrplan.carp import (
    CarpParams,
    FreeTimeWindowGraph,
    ReservationConflictError,
    TimeWindowPath,
    plan_all,
    plan_single,
    plan_with_ordering,
    reserve,
)
from mrplan.graph import Assignment, DistanceCache, Roadmap
from mrplan.plans import validate_plan

from oracles import time_expanded_optimal_arrival
from test_graph import square_grid

INF = math.inf


def corridor_map(length: int) -> Roadmap:
    vertices = [(i, float(i), 0.0) for i in range(length)]
    return Roadmap.build(vertices, [(i, i + 1) for i in range(length - 1)])


def crossing_map() -> Roadmap:
    """Two perpendicular corridors sharing their middle vertex.

    One agent goes left-to-right through the middle; the other top-to-bottom.
    The second to plan cannot cross without pausing for one step.
    """
    return Roadmap.build(
        [(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 2.0, 0.0), (3, 1.0, 1.0), (4, 1.0, -1.0)],
        [(0, 1), (1, 2), (1, 3), (1, 4)],
    )


class TestFreeTimeWindowGraph:
    def test_all_free_by_default(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        assert windows.windows_at(1) == [(0, INF)]
        assert windows.window_containing(1, 123) == 0

    def test_reserve_splits_window(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        path = TimeWindowPath(stops=((0, 0, 1), (1, 1, 2), (2, 2, INF)))
        reserve(path, windows)
        assert windows.windows_at(1) == [(0, 1), (2, INF)]

    def test_reserving_goal_truncates_forever(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        reserve(TimeWindowPath(stops=((0, 0, 1), (1, 1, 2), (2, 2, INF))), windows)
        assert windows.windows_at(2) == [(0, 2)]

    def test_overlapping_reserve_raises(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        path = TimeWindowPath(stops=((1, 1, INF),))
        reserve(path, windows)
        with pytest.raises(ReservationConflictError):
            reserve(TimeWindowPath(stops=((1, 3, INF),)), windows)

    def test_disjoint_reserves_commute(self):
        rm = square_grid(3, diagonals=False)
        first = TimeWindowPath(stops=((0, 0, 1), (1, 1, 2), (2, 2, INF)))
        second = TimeWindowPath(stops=((6, 0, 1), (7, 1, 2), (8, 2, INF)))
        one = FreeTimeWindowGraph(rm)
        reserve(first, one)
        reserve(second, one)
        two = FreeTimeWindowGraph(rm)
        reserve(second, two)
        reserve(first, two)
        for v in range(rm.num_vertices):
            assert one.windows_at(v) == two.windows_at(v)
        assert one._edge_departs == two._edge_departs

    def test_opposite_edge_traversal_blocked(self):
        rm = corridor_map(2)
        windows = FreeTimeWindowGraph(rm)
        reserve(TimeWindowPath(stops=((0, 0, 1), (1, 1, INF))), windows)
        assert windows.edge_blocked(1, 0, 0)
        assert not windows.edge_blocked(0, 1, 0)
        assert not windows.edge_blocked(1, 0, 1)


class TestPlanSingle:
    def test_empty_reservations_take_straight_route(self):
        rm = crossing_map()
        path = plan_single((0, 2), FreeTimeWindowGraph(rm), rm)
        assert [v for v, _, _ in path.stops] == [0, 1, 2]
        assert path.arrival_time == 2

    def test_waits_one_step_for_crossing_traffic(self):
        # Middle vertex is taken on [1, 2); the later agent sits out one step.
        rm = crossing_map()
        windows = FreeTimeWindowGraph(rm)
        first = plan_single((0, 2), windows, rm)
        reserve(first, windows)
        second = plan_single((3, 4), windows, rm)
        assert second.stops == ((3, 0, 2), (1, 2, 3), (4, 3, INF))
        assert second.arrival_time == 3

    def test_parked_goal_is_failure(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        reserve(TimeWindowPath(stops=((2, 2, INF),)), windows)
        assert plan_single((0, 2), windows, rm) is None

    def test_goal_with_transit_requires_late_parking(self):
        rm = corridor_map(4)
        windows = FreeTimeWindowGraph(rm)
        # Somebody passes through vertex 1 on [3, 4); parking there must wait.
        reserve(TimeWindowPath(stops=((2, 0, 3), (1, 3, 4), (0, 4, INF))), windows)
        path = plan_single((3, 1), windows, rm)
        assert path is not None
        assert path.arrival_time >= 4

    def test_start_equals_goal_parks_immediately(self):
        rm = corridor_map(3)
        path = plan_single((1, 1), FreeTimeWindowGraph(rm), rm)
        assert path.stops == ((1, 0, INF),)

    def test_occupied_start_time_is_failure(self):
        rm = corridor_map(3)
        windows = FreeTimeWindowGraph(rm)
        reserve(TimeWindowPath(stops=((0, 0, INF),)), windows)
        assert plan_single((0, 2), windows, rm) is None

    def test_unreachable_goal_is_failure(self):
        rm = Roadmap.build(
            [(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 9.0, 9.0)], [(0, 1)]
        )
        assert plan_single((0, 2), FreeTimeWindowGraph(rm), rm) is None


def random_reserved_instance(seed: int):
    """Small map with up to three already-routed agents plus a fresh one."""
    rng = random.Random(seed)
    full = square_grid(5)
    keep = sorted(full.edges - set(rng.sample(sorted(full.edges), 12)))
    rm = Roadmap.build(full.vertex_tuples(), keep)
    cache = DistanceCache(rm)
    windows = FreeTimeWindowGraph(rm)
    reserved = []
    blocked_starts = set()
    parked = set()
    for _ in range(rng.randint(0, 3)):
        start, goal = rng.sample(range(rm.num_vertices), 2)
        if start in blocked_starts or goal in parked:
            continue
        path = plan_single((start, goal), windows, rm, cache=cache)
        if path is None:
            continue
        reserve(path, windows)
        reserved.append(path)
        blocked_starts.add(start)
        parked.add(goal)
    candidates = [v for v in range(rm.num_vertices) if v not in blocked_starts]
    start = rng.choice(candidates)
    goal = rng.choice([v for v in range(rm.num_vertices) if v not in parked])
    return rm, windows, reserved, start, goal, cache


class TestPlanSingleOptimality:
    @pytest.mark.parametrize("seed", range(30))
    def test_arrival_matches_time_expanded_oracle(self, seed):
        rm, windows, reserved, start, goal, cache = random_reserved_instance(seed)
        path = plan_single((start, goal), windows, rm, cache=cache)
        expected = time_expanded_optimal_arrival(rm, start, goal, reserved, horizon=50)
        if path is None:
            assert expected is None
        else:
            assert expected is not None
            assert path.arrival_time == expected


class TestPlanAll:
    def test_single_agent_equals_plan_single(self):
        rm = corridor_map(4)
        result = plan_all(Assignment(starts=(0,), goals=(3,)), rm)
        assert result.success and result.shuffles_used == 1
        assert result.ordering == (0,)
        assert [c[0] for c in result.plan.steps] == [0, 1, 2, 3]

    def test_disjoint_corridors_run_simultaneously(self):
        rm = Roadmap.build(
            [
                (0, 0.0, 0.0), (1, 1.0, 0.0), (2, 2.0, 0.0),
                (3, 0.0, 2.0), (4, 1.0, 2.0),
            ],
            [(0, 1), (1, 2), (3, 4)],
        )
        result = plan_all(Assignment(starts=(0, 3), goals=(2, 4)), rm)
        assert result.success
        assert result.plan.makespan == 2  # the longer corridor
        assert result.plan.steps[1] == (1, 4)

    def test_crossing_ordering_waits(self):
        rm = crossing_map()
        assignment = Assignment(starts=(0, 3), goals=(2, 4))
        result = plan_all(assignment, rm, CarpParams(max_shuffles=1))
        assert result.success
        assert validate_plan(result.plan, assignment, rm) is None
        # Second agent leaves its start only after one wait step.
        assert [c[1] for c in result.plan.steps] == [3, 3, 1, 4]

    def test_adversarial_base_fails_every_ordering(self):
        rm, assignment = mapgen.adversarial(mapgen.AdversarialSpec(agent_count=2))
        for ordering in itertools.permutations(range(2)):
            assert plan_with_ordering(assignment, rm, list(ordering)) is None
        result = plan_all(assignment, rm, CarpParams(max_shuffles=50, rng_seed=4))
        assert not result.success
        assert result.shuffles_used == 50

    def test_deterministic_under_seed(self):
        rm = square_grid(4)
        assignment = Assignment(starts=(0, 5, 15), goals=(15, 9, 0))
        params = CarpParams(max_shuffles=10, rng_seed=21)
        first = plan_all(assignment, rm, params)
        second = plan_all(assignment, rm, CarpParams(max_shuffles=10, rng_seed=21))
        assert first.plan.steps == second.plan.steps
        assert first.ordering == second.ordering
        assert first.shuffles_used == second.shuffles_used

    @pytest.mark.parametrize("seed", range(10))
    def test_returned_plans_always_validate(self, seed):
        rng = random.Random(seed)
        rm = square_grid(4)
        starts = tuple(rng.sample(range(16), 4))
        goals = tuple(rng.sample(range(16), 4))
        assignment = Assignment(starts=starts, goals=goals)
        result = plan_all(assignment, rm, CarpParams(max_shuffles=10, rng_seed=seed))
        if result.success:
            assert validate_plan(result.plan, assignment, rm) is None

    def test_second_agent_never_conflicts_with_first(self):
        rm = square_grid(4)
        rng = random.Random(2)
        for _ in range(20):
            s1, s2 = rng.sample(range(16), 2)
            g1, g2 = rng.sample(range(16), 2)
            paths = plan_with_ordering(
                Assignment(starts=(s1, s2), goals=(g1, g2)), rm, [0, 1]
            )
            if paths is None:
                continue
            plan = carp.paths_to_plan(paths)
            assert validate_plan(plan, Assignment(starts=(s1, s2), goals=(g1, g2)), rm) is None

    def test_rejects_bad_ordering(self):
        rm = corridor_map(3)
        with pytest.raises(ValueError, match="permute"):
            plan_with_ordering(Assignment(starts=(0,), goals=(2,)), rm, [1])

    def test_params_validation(self):
        with pytest.raises(ValueError):
            CarpParams(max_shuffles=0)
