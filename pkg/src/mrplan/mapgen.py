"""Map and assignment generators for the two experiment families.

Density-swept maps start from a random spanning tree of a grid and add
random grid edges in fixed-size batches until the full grid is restored.
Adversarial maps chain small swap gadgets that defeat any sequential
priority ordering while staying solvable with simultaneous moves.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import Assignment, Roadmap, canonical_edge


@dataclass(frozen=True)
class GridSpec:
    side: int
    connectivity: int = 8
    spacing: float = 1.0

    def __post_init__(self) -> None:
        if self.side < 2:
            raise ValueError("grid side must be >= 2")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")


@dataclass(frozen=True)
class AdversarialSpec:
    agent_count: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.agent_count < 2 or self.agent_count % 2 != 0:
            raise ValueError("agent_count must be an even number >= 2")


def grid(spec: GridSpec) -> Roadmap:
    """n x n lattice at integer multiples of the spacing."""
    n = spec.side
    vertices = [
        (row * n + col, col * spec.spacing, row * spec.spacing)
        for row in range(n)
        for col in range(n)
    ]
    edges = []
    for row in range(n):
        for col in range(n):
            v = row * n + col
            if col + 1 < n:
                edges.append((v, v + 1))
            if row + 1 < n:
                edges.append((v, v + n))
            if spec.connectivity == 8 and row + 1 < n:
                if col + 1 < n:
                    edges.append((v, v + n + 1))
                if col - 1 >= 0:
                    edges.append((v, v + n - 1))
    return Roadmap.build(vertices, edges)


def _spanning_tree_edges(roadmap: Roadmap, rng: random.Random) -> set[tuple[int, int]]:
    # Kruskal over equal-weight edges; the shuffle is the tie-break, so any
    # spanning tree is minimum.
    parent = list(range(roadmap.num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pool = sorted(roadmap.edges)
    rng.shuffle(pool)
    picked: set[tuple[int, int]] = set()
    for u, v in pool:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            picked.add((u, v))
            if len(picked) == roadmap.num_vertices - 1:
                break
    if len(picked) != roadmap.num_vertices - 1:
        raise ValueError("input grid is not connected")
    return picked


def mst_base(grid_map: Roadmap, rng: random.Random) -> Roadmap:
    """Random spanning tree of the grid; the sparsest map of a sweep."""
    picked = _spanning_tree_edges(grid_map, rng)
    return Roadmap.build(grid_map.vertex_tuples(), sorted(picked))


def density_sweep(
    grid_map: Roadmap,
    mst: Roadmap,
    step_count: int,
    rng: random.Random,
) -> list[Roadmap]:
    """Edge-monotone chain of maps from the spanning tree to the full grid.

    Each of the step_count steps adds floor(missing / step_count) unused
    grid edges, chosen uniformly; the final step absorbs the remainder so
    the last map equals the grid.
    """
    if step_count < 1:
        raise ValueError("step_count must be >= 1")
    if not mst.edges <= grid_map.edges:
        raise ValueError("spanning tree is not a subgraph of the grid")
    unused = sorted(grid_map.edges - mst.edges)
    rng.shuffle(unused)
    per_step = len(unused) // step_count
    maps = [mst]
    held = sorted(mst.edges)
    vertices = grid_map.vertex_tuples()
    for step in range(step_count):
        if step == step_count - 1:
            batch = unused[step * per_step :]
        else:
            batch = unused[step * per_step : (step + 1) * per_step]
        held = held + batch
        maps.append(Roadmap.build(vertices, held))
    return maps


def random_assignment(roadmap: Roadmap, k: int, rng: random.Random) -> Assignment:
    """k distinct start vertices and, independently, k distinct goals."""
    if k > roadmap.num_vertices:
        raise ValueError(f"cannot place {k} agents on {roadmap.num_vertices} vertices")
    starts = tuple(rng.sample(range(roadmap.num_vertices), k))
    goals = tuple(rng.sample(range(roadmap.num_vertices), k))
    return Assignment(starts=starts, goals=goals)


def _free_coord_near(
    base: tuple[float, float], used: set[tuple[float, float]]
) -> tuple[float, float]:
    bx, by = int(round(base[0])), int(round(base[1]))
    for radius in range(1, 10000):
        ring = []
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                if max(abs(dx), abs(dy)) == radius:
                    ring.append((dx * dx + dy * dy, dx, dy))
        for _, dx, dy in sorted(ring):
            cand = (float(bx + dx), float(by + dy))
            if cand not in used:
                return cand
    raise RuntimeError("no free coordinate found")


class _AdversarialBuilder:
    def __init__(self) -> None:
        self.coords: list[tuple[float, float]] = []
        self.used: set[tuple[float, float]] = set()
        self.edges: set[tuple[int, int]] = set()
        self.degree: list[int] = []
        self.pairs: list[tuple[int, int]] = []

    def add_vertex(self, near: tuple[float, float]) -> int:
        coord = near if near not in self.used else _free_coord_near(near, self.used)
        self.coords.append(coord)
        self.used.add(coord)
        self.degree.append(0)
        return len(self.coords) - 1

    def add_edge(self, u: int, v: int) -> None:
        self.edges.add(canonical_edge(u, v))
        self.degree[u] += 1
        self.degree[v] += 1

    def leaves(self) -> list[int]:
        return [v for v, d in enumerate(self.degree) if d == 1]

    def add_base_gadget(self, near: tuple[float, float], attach_to: int | None) -> None:
        # Path end-hub-end plus a spur on the hub: the two swapping agents
        # sit on the ends, equidistant from the spur they would need.
        end_a = self.add_vertex(near)
        ax, ay = self.coords[end_a]
        hub = self.add_vertex((ax + 1.0, ay))
        hx, hy = self.coords[hub]
        end_b = self.add_vertex((hx + 1.0, hy))
        spur = self.add_vertex((hx, hy + 1.0))
        self.add_edge(end_a, hub)
        self.add_edge(hub, end_b)
        self.add_edge(hub, spur)
        if attach_to is not None:
            self.add_edge(attach_to, end_a)
        self.pairs.append((end_a, end_b))

    def add_leaf_pair(self, anchor: int) -> None:
        ax, ay = self.coords[anchor]
        side_a = self.add_vertex((ax - 1.0, ay + 1.0))
        side_b = self.add_vertex((ax + 1.0, ay + 1.0))
        self.add_edge(side_a, anchor)
        self.add_edge(side_b, anchor)
        self.pairs.append((side_a, side_b))


def adversarial(spec: AdversarialSpec) -> tuple[Roadmap, Assignment]:
    """Roadmap plus assignment that no sequential priority ordering solves.

    Starts from the base swap gadget and grows it: pick a random degree-1
    vertex, then either hang two fresh endpoints off it or attach a whole
    new base gadget, adding one swapping agent pair either way, until the
    requested agent count is reached.
    """
    rng = random.Random(spec.rng_seed)
    builder = _AdversarialBuilder()
    builder.add_base_gadget((0.0, 0.0), attach_to=None)
    while 2 * len(builder.pairs) < spec.agent_count:
        anchor = rng.choice(builder.leaves())
        if rng.random() < 0.5:
            builder.add_leaf_pair(anchor)
        else:
            builder.add_base_gadget(builder.coords[anchor], attach_to=anchor)
    roadmap = Roadmap.build(
        [(i, x, y) for i, (x, y) in enumerate(builder.coords)],
        sorted(builder.edges),
    )
    starts = []
    goals = []
    for a, b in builder.pairs:
        starts.extend((a, b))
        goals.extend((b, a))
    return roadmap, Assignment(starts=tuple(starts), goals=tuple(goals))
