"""Randomized tree search over the implicit composite configuration space.

A tree of composite configurations grows from the joint start placement.
Each iteration samples a composite point from per-agent restricted vertex
sets, steers the best of several near nodes toward it with a
collision-aware greedy move oracle, locally rewires the tree to shorten
root paths, and asks the time-window router to bridge the new node to the
joint goal. The composite graph is never materialized.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

import numpy as np

from . import carp
from .graph import Assignment, Config, DistanceCache, Roadmap
from .plans import Plan, validate_move


class InfeasibleInstanceError(ValueError):
    """Some agent's goal is unreachable from its start on the roadmap."""


@dataclass
class PlannerParams:
    nn_count: int = 5
    delta: float = 4.0
    max_iterations: int = 500000
    connector_orderings_per_call: int = 1
    rng_seed: int = 0
    improved_expansion: bool = True
    rewiring: bool = True

    def __post_init__(self) -> None:
        if self.nn_count < 1:
            raise ValueError("nn_count must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.connector_orderings_per_call < 1:
            raise ValueError("connector_orderings_per_call must be >= 1")


@dataclass(frozen=True)
class SampleSpace:
    """Per-agent admissible vertex sets with the distance tables behind them."""

    admissible: tuple[tuple[int, ...], ...]
    from_start: tuple[np.ndarray, ...]
    from_goal: tuple[np.ndarray, ...]
    delta: float


def build_sample_space(
    assignment: Assignment,
    roadmap: Roadmap,
    delta: float,
    cache: DistanceCache | None = None,
) -> SampleSpace:
    """Admissible vertices per agent: detour over the shortest path <= delta."""
    assignment.check_on(roadmap)
    if cache is None:
        cache = DistanceCache(roadmap)
    admissible = []
    from_start = []
    from_goal = []
    for s, g in zip(assignment.starts, assignment.goals):
        ds = cache.euclidean_from(s)
        dg = cache.euclidean_from(g)
        shortest = ds[g]
        if not math.isfinite(shortest):
            raise InfeasibleInstanceError(f"goal {g} unreachable from start {s}")
        bound = shortest + delta
        slack = 1e-9 * (1.0 + bound)  # forward/backward float drift
        keep = tuple(int(q) for q in np.nonzero(ds + dg <= bound + slack)[0])
        admissible.append(keep)
        from_start.append(ds)
        from_goal.append(dg)
    return SampleSpace(
        admissible=tuple(admissible),
        from_start=tuple(from_start),
        from_goal=tuple(from_goal),
        delta=delta,
    )


def random_sample(space: SampleSpace, rng: random.Random) -> Config:
    """One admissible vertex per agent, uniform and independent.

    Samples are steering targets, not tree nodes, so agents may coincide.
    """
    return tuple(rng.choice(agent_set) for agent_set in space.admissible)


def _steering_geometry(roadmap: Roadmap, v: int, store: dict) -> tuple:
    entry = store.get(v)
    if entry is None:
        nbrs = np.array(roadmap.neighbors[v], dtype=np.int64)
        vecs = roadmap.coords[nbrs] - roadmap.coords[v]
        lengths = np.sqrt((vecs * vecs).sum(axis=1))
        safe = np.where(lengths > 0.0, lengths, 1.0)
        entry = (nbrs, vecs / safe[:, None], lengths)
        store[v] = entry
    return entry


def _option_order(
    vi: int, ui: int, roadmap: Roadmap, geometry: dict
) -> list[int]:
    """Move options for one agent, most preferred first; staying included.

    Orders are a pure function of the vertex pair, so they are memoized in
    the geometry store alongside the per-vertex unit vectors.
    """
    cached = geometry.get((vi, ui))
    if cached is not None:
        return cached
    nbrs, units, lengths = _steering_geometry(roadmap, vi, geometry)
    target = roadmap.coords[ui] - roadmap.coords[vi]
    norm = math.hypot(*target)
    if ui == vi or norm < 1e-12:
        ranked = sorted(zip(lengths, nbrs))
        order = [vi] + [int(n) for _, n in ranked]
    else:
        cosines = units @ (target / norm)
        ranked = sorted(zip(-cosines, lengths, nbrs))
        order = [int(n) for _, _, n in ranked] + [vi]
    geometry[(vi, ui)] = order
    return order


def oracle_extend(
    v: Config,
    u: Config,
    roadmap: Roadmap,
    rng: random.Random,
    allowed: tuple[frozenset[int], ...] | None = None,
    geometry: dict | None = None,
) -> Config | None:
    """One collision-aware composite step from v toward the sample u.

    Agents are processed in a random order; each picks the option (its
    neighbors plus staying put) whose direction deviates least from the ray
    toward its sample coordinate, skipping options already claimed this
    step or forming a swap with an earlier choice. Staying is preferred
    when the sample coincides with the current vertex and is the fallback
    otherwise. Returns None when some agent has no non-colliding option.
    """
    if geometry is None:
        geometry = {}
    k = len(v)
    order = list(range(k))
    rng.shuffle(order)
    chosen: list[int | None] = [None] * k
    claimed: set[int] = set()
    moved_into: dict[int, int] = {}  # chosen target -> origin, for swap checks
    for i in order:
        vi, ui = v[i], u[i]
        pick = None
        for opt in _option_order(vi, ui, roadmap, geometry):
            if allowed is not None and opt not in allowed[i]:
                continue
            if opt in claimed:
                continue
            if opt != vi and moved_into.get(vi) == opt:
                continue
            pick = opt
            break
        if pick is None:
            return None
        chosen[i] = pick
        claimed.add(pick)
        if pick != vi:
            moved_into[pick] = vi
    result = tuple(chosen)  # type: ignore[arg-type]
    assert validate_move(v, result, roadmap) is None, "oracle produced an invalid move"
    return result


class SearchTree:
    """Configurations linked by explicit composite path segments.

    A node's segment is the move sequence from its predecessor, excluding
    the predecessor's configuration and ending at the node's own; the cost
    from the root is the sum of composite distances along the whole chain.
    """

    def __init__(self, root: Config):
        k = len(root)
        self.num_agents = k
        self.parents: list[int | None] = [None]
        self.segments: list[tuple[Config, ...]] = [()]
        self.seg_costs: list[float] = [0.0]
        self.costs: list[float] = [0.0]
        self.children: list[list[int]] = [[]]
        self.from_connector: list[bool] = [False]
        self._config_index: dict[Config, int] = {root: 0}
        self._matrix = np.empty((16, k), dtype=np.int64)
        self._matrix[0] = root

    def __len__(self) -> int:
        return len(self.parents)

    def config(self, node: int) -> Config:
        return tuple(int(x) for x in self._matrix[node])

    def contains(self, config: Config) -> int | None:
        return self._config_index.get(config)

    def add(
        self,
        config: Config,
        parent: int,
        segment: tuple[Config, ...],
        seg_cost: float,
        from_connector: bool = False,
    ) -> int:
        if not segment or segment[-1] != config:
            raise ValueError("segment must end at the node's configuration")
        node = len(self.parents)
        self.parents.append(parent)
        self.segments.append(segment)
        self.seg_costs.append(seg_cost)
        self.costs.append(self.costs[parent] + seg_cost)
        self.children.append([])
        self.children[parent].append(node)
        self.from_connector.append(from_connector)
        self._config_index.setdefault(config, node)
        if node >= len(self._matrix):
            grown = np.empty((len(self._matrix) * 2, self.num_agents), dtype=np.int64)
            grown[: len(self._matrix)] = self._matrix
            self._matrix = grown
        self._matrix[node] = config
        return node

    def nearest(
        self,
        target: Config,
        count: int,
        pairwise: np.ndarray,
        exclude: set[int] | None = None,
    ) -> list[int]:
        """Up to `count` nodes closest to target under the composite metric.

        Ties break on the smaller node index so scans are deterministic.
        """
        n = len(self.parents)
        dists = pairwise[self._matrix[:n], np.asarray(target)].sum(axis=1)
        order = np.lexsort((np.arange(n), dists))
        if exclude:
            picked = [int(i) for i in order if int(i) not in exclude]
            return picked[:count]
        return [int(i) for i in order[:count]]

    def ancestors(self, node: int) -> set[int]:
        out = set()
        p = self.parents[node]
        while p is not None:
            out.add(p)
            p = self.parents[p]
        return out

    def reparent(
        self, node: int, new_parent: int, segment: tuple[Config, ...], seg_cost: float
    ) -> None:
        old = self.parents[node]
        assert old is not None, "cannot reparent the root"
        self.children[old].remove(node)
        self.parents[node] = new_parent
        self.children[new_parent].append(node)
        self.segments[node] = segment
        self.seg_costs[node] = seg_cost
        stack = [node]
        while stack:
            m = stack.pop()
            parent = self.parents[m]
            self.costs[m] = self.costs[parent] + self.seg_costs[m]
            stack.extend(self.children[m])

    def path_from_root(self, node: int) -> list[Config]:
        chain = []
        m: int | None = node
        while m is not None:
            chain.append(m)
            m = self.parents[m]
        chain.reverse()
        path = [self.config(chain[0])]
        for m in chain[1:]:
            path.extend(self.segments[m])
        return path


def local_connector(
    from_config: Config,
    to_config: Config,
    roadmap: Roadmap,
    orderings: int,
    seed: int,
    cache: DistanceCache | None = None,
) -> tuple[Config, ...] | None:
    """Try to bridge two configurations with the prioritized router.

    Runs the full sequential planner with a bounded number of priority
    orderings on fresh reservations, so it is fast but may miss feasible
    connections. Returns the configurations strictly after `from_config`,
    ending at `to_config`; an empty tuple when they coincide.
    """
    if len(from_config) != len(to_config):
        raise ValueError("configuration lengths differ")
    if from_config == to_config:
        return ()
    assignment = Assignment(starts=from_config, goals=to_config)
    result = carp.plan_all(
        assignment,
        roadmap,
        carp.CarpParams(max_shuffles=orderings, rng_seed=seed),
        cache=cache,
    )
    if not result.success:
        return None
    return result.plan.steps[1:]


@dataclass
class PlannerStats:
    iterations: int
    runtime_ms: float
    tree_size: int
    plan_steps: int | None
    sum_of_costs: float | None


@dataclass
class MrdrrtResult:
    plan: Plan | None
    stats: PlannerStats

    @property
    def success(self) -> bool:
        return self.plan is not None


class MrdrrtPlanner:
    """Single-owner planning session: tree, rng, and caches for one instance."""

    def __init__(
        self,
        roadmap: Roadmap,
        assignment: Assignment,
        params: PlannerParams | None = None,
        cache: DistanceCache | None = None,
        connector=None,
    ):
        self.params = params or PlannerParams()
        self.roadmap = roadmap
        self.assignment = assignment
        assignment.check_on(roadmap)
        self.cache = cache or DistanceCache(roadmap)
        self.rng = random.Random(self.params.rng_seed)
        self.space = build_sample_space(assignment, roadmap, self.params.delta, self.cache)
        self._allowed = tuple(frozenset(sets) for sets in self.space.admissible)
        self.pairwise = self.cache.pairwise()
        self.goal: Config = tuple(assignment.goals)
        self.tree = SearchTree(tuple(assignment.starts))
        self._geometry: dict = {}
        if connector is None:
            orderings = self.params.connector_orderings_per_call

            def connector(a: Config, b: Config) -> tuple[Config, ...] | None:
                return local_connector(
                    a, b, self.roadmap, orderings, self.rng.getrandbits(32), self.cache
                )

        self._connector = connector

    def _delta(self, c1: Config, c2: Config) -> float:
        return float(self.pairwise[c1, c2].sum())

    def _segment_cost(self, head: Config, segment: tuple[Config, ...]) -> float:
        total = 0.0
        prev = head
        for cfg in segment:
            total += self._delta(prev, cfg)
            prev = cfg
        return total

    def expand(self) -> int | None:
        """One sampling step; returns the added node id or None on a no-op.

        Candidates come from the nearest nodes to the sample (a single one
        unless improved expansion is on); the one minimizing cost from the
        root plus the step length is kept. Candidates that fail the oracle
        or duplicate an existing configuration are dropped.
        """
        u = random_sample(self.space, self.rng)
        nn = self.params.nn_count if self.params.improved_expansion else 1
        best: tuple[float, int, Config] | None = None
        for c_id in self.tree.nearest(u, nn, self.pairwise):
            c_cfg = self.tree.config(c_id)
            v_new = oracle_extend(
                c_cfg, u, self.roadmap, self.rng, self._allowed, self._geometry
            )
            if v_new is None or v_new == c_cfg or self.tree.contains(v_new) is not None:
                continue
            cost = self.tree.costs[c_id] + self._delta(c_cfg, v_new)
            if best is None or cost < best[0]:
                best = (cost, c_id, v_new)
        if best is None:
            return None
        cost, parent, config = best
        seg_cost = cost - self.tree.costs[parent]
        return self.tree.add(config, parent, (config,), seg_cost)

    def rewire(self, node: int) -> None:
        """Re-route near nodes through `node` when that shortens their root path.

        The connector bridges the new node to each candidate; a successful
        bridge replaces the candidate's predecessor when the detour is
        strictly cheaper. Bridge interior configurations become tree nodes
        of their own. Ancestors are skipped to keep the tree acyclic.
        """
        if not self.params.rewiring:
            return
        cfg = self.tree.config(node)
        exclude = self.tree.ancestors(node)
        exclude.add(node)
        for c_id in self.tree.nearest(cfg, self.params.nn_count, self.pairwise, exclude):
            c_cfg = self.tree.config(c_id)
            if c_cfg == cfg:
                continue
            bridge = self._connector(cfg, c_cfg)
            if bridge is None:
                continue
            new_cost = self.tree.costs[node] + self._segment_cost(cfg, bridge)
            if new_cost >= self.tree.costs[c_id] - 1e-9:
                continue
            tail = node
            prev_cfg = cfg
            for mid_cfg in bridge[:-1]:
                tail = self.tree.add(
                    mid_cfg,
                    tail,
                    (mid_cfg,),
                    self._delta(prev_cfg, mid_cfg),
                    from_connector=True,
                )
                prev_cfg = mid_cfg
            self.tree.reparent(c_id, tail, (c_cfg,), self._delta(prev_cfg, c_cfg))

    def connect_to_target(self, node: int) -> tuple[Config, ...] | None:
        return self._connector(self.tree.config(node), self.goal)

    def plan(self) -> MrdrrtResult:
        started = time.perf_counter()

        def stats(iterations: int, plan: Plan | None) -> PlannerStats:
            return PlannerStats(
                iterations=iterations,
                runtime_ms=(time.perf_counter() - started) * 1000.0,
                tree_size=len(self.tree),
                plan_steps=None if plan is None else plan.makespan,
                sum_of_costs=None if plan is None else plan.sum_of_costs(self.roadmap),
            )

        start_cfg = tuple(self.assignment.starts)
        if start_cfg == self.goal:
            plan = Plan(steps=(start_cfg,))
            return MrdrrtResult(plan=plan, stats=stats(0, plan))

        for iteration in range(1, self.params.max_iterations + 1):
            node = self.expand()
            if node is None:
                continue
            self.rewire(node)
            suffix = self.connect_to_target(node)
            if suffix is not None:
                steps = tuple(self.tree.path_from_root(node)) + tuple(suffix)
                plan = Plan(steps=steps)
                return MrdrrtResult(plan=plan, stats=stats(iteration, plan))
        return MrdrrtResult(plan=None, stats=stats(self.params.max_iterations, None))


def plan(
    assignment: Assignment,
    roadmap: Roadmap,
    params: PlannerParams | None = None,
    cache: DistanceCache | None = None,
) -> MrdrrtResult:
    return MrdrrtPlanner(roadmap, assignment, params, cache).plan()
