"""Prioritized routing through free time windows on a shared roadmap.

Agents are planned one at a time. Each planned trajectory reserves the
vertices it occupies (as half-open integer intervals) and the directed
edge traversals it performs; later agents route through the remaining free
windows. An agent parks at its goal forever, so the goal must be free on
[arrival, infinity).

Interval semantics: an agent occupying v on [entry, exit) is present at
integer times entry..exit-1. An agent may enter v at the exact time the
previous occupant leaves (following), but two agents may never traverse
one edge in opposite directions during the same step.
"""
from __future__ import annotations

import heapq
import math
import random
from bisect import bisect_right
from dataclasses import dataclass

from .graph import Assignment, Config, DistanceCache, Roadmap
from .plans import Plan

INF = math.inf


class ReservationConflictError(RuntimeError):
    """A reservation overlapped existing ones; signals a planner bug."""


@dataclass
class CarpParams:
    max_shuffles: int = 1
    start_time: int = 0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.max_shuffles < 1:
            raise ValueError("max_shuffles must be >= 1")
        if self.start_time < 0:
            raise ValueError("start_time must be non-negative")


@dataclass(frozen=True)
class TimeWindowPath:
    """Sequence of (vertex, entry, exit) stops; the final exit is infinite."""

    stops: tuple[tuple[int, int, float], ...]

    @property
    def start_vertex(self) -> int:
        return self.stops[0][0]

    @property
    def goal_vertex(self) -> int:
        return self.stops[-1][0]

    @property
    def arrival_time(self) -> int:
        return self.stops[-1][1]

    def position_at(self, t: int) -> int:
        for v, entry, exit_ in self.stops:
            if entry <= t < exit_:
                return v
        raise ValueError(f"time {t} precedes the path start")


_ALL_FREE = [(0, INF)]


class FreeTimeWindowGraph:
    """Per-vertex free intervals plus directed edge-traversal reservations.

    Vertices without reservations are implicitly free on [0, inf); their
    window lists are materialized lazily. Callers must not mutate the
    returned lists.
    """

    def __init__(self, roadmap: Roadmap):
        self.roadmap = roadmap
        self._windows: dict[int, list[tuple[int, float]]] = {}
        self._edge_departs: dict[tuple[int, int], set[int]] = {}

    def windows_at(self, v: int) -> list[tuple[int, float]]:
        return self._windows.get(v, _ALL_FREE)

    def window_containing(self, v: int, t: int) -> int | None:
        """Index of the free window of v containing time t, if any."""
        windows = self.windows_at(v)
        idx = bisect_right(windows, (t, INF)) - 1
        if idx >= 0 and windows[idx][0] <= t < windows[idx][1]:
            return idx
        return None

    def edge_blocked(self, u: int, v: int, depart: int) -> bool:
        """True if traversing u->v at `depart` meets a reserved v->u traversal."""
        return depart in self._edge_departs.get((v, u), ())

    def reserve(self, path: TimeWindowPath) -> None:
        """Exclude the path's occupancy and traversals from the free windows."""
        for v, entry, exit_ in path.stops:
            idx = self.window_containing(v, entry)
            windows = self.windows_at(v)
            if idx is None or exit_ > windows[idx][1]:
                raise ReservationConflictError(
                    f"occupancy of vertex {v} on [{entry}, {exit_}) is not free"
                )
            start, end = windows[idx]
            replacement = []
            if start < entry:
                replacement.append((start, entry))
            if exit_ < end:
                replacement.append((exit_, end))
            self._windows[v] = windows[:idx] + replacement + windows[idx + 1 :]
        for (u, _, exit_u), (v, entry_v, _) in zip(path.stops, path.stops[1:]):
            depart = entry_v - 1
            assert exit_u == entry_v, "path stops must be contiguous in time"
            if self.edge_blocked(u, v, depart):
                raise ReservationConflictError(
                    f"edge ({u}, {v}) already traversed oppositely at {depart}"
                )
            self._edge_departs.setdefault((u, v), set()).add(depart)


def reserve(path: TimeWindowPath, windows: FreeTimeWindowGraph) -> FreeTimeWindowGraph:
    windows.reserve(path)
    return windows


def plan_single(
    agent: tuple[int, int],
    windows: FreeTimeWindowGraph,
    roadmap: Roadmap,
    start_time: int = 0,
    cache: DistanceCache | None = None,
) -> TimeWindowPath | None:
    """Earliest-arrival route from start to goal through the free windows.

    A* over (vertex, free-window) states; arrival time is the cost, hop
    count to the goal the heuristic (each traversal takes one step, so hop
    count never overestimates). Ties break on the smaller vertex id.
    Returns None when no window sequence lets the agent park at the goal.
    """
    start, goal = agent
    roadmap.check_vertex(start)
    roadmap.check_vertex(goal)
    if cache is None:
        cache = DistanceCache(roadmap)
    hops = cache.hops_from(goal)
    if hops[start] == INF:
        return None

    start_wi = windows.window_containing(start, start_time)
    if start_wi is None:
        return None

    best: dict[tuple[int, int], int] = {(start, start_wi): start_time}
    parents: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[float, int, int]] = [(start_time + hops[start], start, start_wi)]

    goal_state = None
    while heap:
        f, v, wi = heapq.heappop(heap)
        arrival = best[(v, wi)]
        if f > arrival + hops[v]:
            continue  # stale heap entry
        if v == goal and windows.windows_at(v)[wi][1] == INF:
            goal_state = (v, wi)
            break
        _, v_end = windows.windows_at(v)[wi]
        for n in roadmap.neighbors[v]:
            if hops[n] == INF:
                continue
            for ni, (n_start, n_end) in enumerate(windows.windows_at(n)):
                depart = max(arrival, n_start - 1)
                while windows.edge_blocked(v, n, depart):
                    depart += 1
                enter = depart + 1
                # Must leave v while still inside its window and land inside n's.
                if enter > v_end or enter >= n_end:
                    continue
                key = (n, ni)
                if enter < best.get(key, INF):
                    best[key] = enter
                    parents[key] = (v, wi)
                    heapq.heappush(heap, (enter + hops[n], n, ni))
    if goal_state is None:
        return None

    chain = []
    state = goal_state
    while state is not None:
        chain.append((state[0], best[state]))
        state = parents.get(state)
    chain.reverse()
    stops = []
    for (v, entry), (_, nxt_entry) in zip(chain, chain[1:]):
        stops.append((v, entry, nxt_entry))
    stops.append((chain[-1][0], chain[-1][1], INF))
    return TimeWindowPath(stops=tuple(stops))


def plan_with_ordering(
    assignment: Assignment,
    roadmap: Roadmap,
    ordering: list[int] | tuple[int, ...],
    start_time: int = 0,
    cache: DistanceCache | None = None,
) -> list[TimeWindowPath] | None:
    """Plan agents sequentially in the given priority order on fresh windows.

    Returns per-agent paths indexed by agent (not by priority), or None as
    soon as any agent cannot be routed.
    """
    assignment.check_on(roadmap)
    if sorted(ordering) != list(range(assignment.num_agents)):
        raise ValueError(f"ordering must permute 0..{assignment.num_agents - 1}")
    if cache is None:
        cache = DistanceCache(roadmap)
    windows = FreeTimeWindowGraph(roadmap)
    paths: list[TimeWindowPath | None] = [None] * assignment.num_agents
    for agent in ordering:
        path = plan_single(
            (assignment.starts[agent], assignment.goals[agent]),
            windows,
            roadmap,
            start_time=start_time,
            cache=cache,
        )
        if path is None:
            return None
        windows.reserve(path)
        paths[agent] = path
    return [p for p in paths if p is not None]


def paths_to_plan(paths: list[TimeWindowPath], start_time: int = 0) -> Plan:
    """Expand per-agent time-window paths into a synchronous step plan."""
    horizon = max(p.arrival_time for p in paths)
    horizon = max(horizon, start_time)
    steps = []
    for t in range(start_time, horizon + 1):
        steps.append(tuple(p.position_at(t) for p in paths))
    return Plan(steps=tuple(steps))


@dataclass
class CarpResult:
    plan: Plan | None
    ordering: tuple[int, ...] | None
    shuffles_used: int
    paths: tuple[TimeWindowPath, ...] | None = None

    @property
    def success(self) -> bool:
        return self.plan is not None


def plan_all(
    assignment: Assignment,
    roadmap: Roadmap,
    params: CarpParams | None = None,
    cache: DistanceCache | None = None,
) -> CarpResult:
    """Try up to max_shuffles priority orderings; first success wins.

    The first ordering is the given agent order, so max_shuffles=1 is the
    deterministic single-ordering planner. Later orderings are uniform
    random permutations from the seeded generator. Exhaustion is reported
    as failure, which proves nothing about feasibility.
    """
    if params is None:
        params = CarpParams()
    if cache is None:
        cache = DistanceCache(roadmap)
    rng = random.Random(params.rng_seed)
    base = list(range(assignment.num_agents))
    for attempt in range(1, params.max_shuffles + 1):
        if attempt == 1:
            ordering = list(base)
        else:
            ordering = list(base)
            rng.shuffle(ordering)
        paths = plan_with_ordering(
            assignment, roadmap, ordering, start_time=params.start_time, cache=cache
        )
        if paths is not None:
            return CarpResult(
                plan=paths_to_plan(paths, start_time=params.start_time),
                ordering=tuple(ordering),
                shuffles_used=attempt,
                paths=tuple(paths),
            )
    return CarpResult(plan=None, ordering=None, shuffles_used=params.max_shuffles)
