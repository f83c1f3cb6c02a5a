"""Roadmap graphs and shortest-path tables.

All agents move on one shared undirected roadmap embedded in the plane.
Vertex ids are dense integers 0..N-1. Edge lengths are the Euclidean
distances between endpoint coordinates; there are no separate edge weights.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

# A composite configuration: one vertex id per agent.
Config = tuple[int, ...]


def canonical_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Roadmap:
    """Undirected embedded graph. Immutable after construction."""

    coords: np.ndarray  # (N, 2) float64, row index = vertex id
    edges: frozenset[tuple[int, int]]  # canonical (lo, hi) pairs
    neighbors: tuple[tuple[int, ...], ...]  # sorted adjacency per vertex

    @classmethod
    def build(cls, vertices, edges) -> Roadmap:
        """Build from (id, x, y) triples and (u, v) pairs, checking invariants.

        Ids must be unique and dense, coordinates finite, edges free of
        self-loops and duplicates.
        """
        vertices = list(vertices)
        n = len(vertices)
        if n == 0:
            raise ValueError("roadmap needs at least one vertex")
        coords = np.full((n, 2), np.nan, dtype=np.float64)
        seen_ids = set()
        for vid, x, y in vertices:
            if not isinstance(vid, (int, np.integer)) or not 0 <= vid < n:
                raise ValueError(f"vertex ids must be dense 0..{n - 1}, got {vid!r}")
            if vid in seen_ids:
                raise ValueError(f"duplicate vertex id {vid}")
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite coordinates for vertex {vid}")
            seen_ids.add(vid)
            coords[vid] = (x, y)

        canon: set[tuple[int, int]] = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references unknown vertex")
            e = canonical_edge(int(u), int(v))
            if e in canon:
                raise ValueError(f"duplicate edge {e}")
            canon.add(e)

        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in canon:
            adj[u].append(v)
            adj[v].append(u)
        neighbors = tuple(tuple(sorted(a)) for a in adj)
        return cls(coords=coords, edges=frozenset(canon), neighbors=neighbors)

    @property
    def num_vertices(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.num_vertices:
            raise ValueError(f"unknown vertex id {v}")

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def vertex_tuples(self) -> list[tuple[int, float, float]]:
        return [(i, float(x), float(y)) for i, (x, y) in enumerate(self.coords)]


@dataclass(frozen=True)
class Assignment:
    """Start and goal vertex per agent."""

    starts: tuple[int, ...]
    goals: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.starts) != len(self.goals):
            raise ValueError("starts and goals must have equal length")
        if len(self.starts) < 1:
            raise ValueError("assignment needs at least one agent")
        if len(set(self.starts)) != len(self.starts):
            raise ValueError("starts must be pairwise distinct")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goals must be pairwise distinct")

    @property
    def num_agents(self) -> int:
        return len(self.starts)

    def check_on(self, roadmap: Roadmap) -> None:
        for v in (*self.starts, *self.goals):
            roadmap.check_vertex(v)


def euclidean_distance(a: int, b: int, roadmap: Roadmap) -> float:
    """Straight-line distance between two vertices."""
    roadmap.check_vertex(a)
    roadmap.check_vertex(b)
    return float(np.hypot(*(roadmap.coords[a] - roadmap.coords[b])))


def composite_distance(c1: Config, c2: Config, roadmap: Roadmap) -> float:
    """Sum of per-agent straight-line distances between two configurations."""
    if len(c1) != len(c2):
        raise ValueError(f"agent count mismatch: {len(c1)} vs {len(c2)}")
    total = 0.0
    for a, b in zip(c1, c2):
        total += euclidean_distance(a, b, roadmap)
    return total


def dijkstra_distances(source: int, roadmap: Roadmap) -> np.ndarray:
    """Exact shortest-path Euclidean lengths from source to every vertex.

    Unreachable vertices are marked infinite.
    """
    roadmap.check_vertex(source)
    dist = np.full(roadmap.num_vertices, np.inf)
    dist[source] = 0.0
    heap: list[tuple[float, int]] = [(0.0, source)]
    coords = roadmap.coords
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for n in roadmap.neighbors[v]:
            nd = d + float(np.hypot(*(coords[v] - coords[n])))
            if nd < dist[n]:
                dist[n] = nd
                heapq.heappush(heap, (nd, n))
    return dist


def hop_distances(source: int, roadmap: Roadmap) -> np.ndarray:
    """Minimum number of edge traversals from source to every vertex (BFS)."""
    roadmap.check_vertex(source)
    dist = np.full(roadmap.num_vertices, np.inf)
    dist[source] = 0.0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for n in roadmap.neighbors[v]:
            if dist[n] == np.inf:
                dist[n] = dist[v] + 1.0
                queue.append(n)
    return dist


def vertex_distance_matrix(roadmap: Roadmap) -> np.ndarray:
    """Pairwise straight-line distances between all vertices."""
    c = roadmap.coords
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


@dataclass
class DistanceCache:
    """Memoized per-source distance tables for one immutable roadmap.

    Planner sessions share one cache per roadmap; tables are computed on
    first use and never invalidated.
    """

    roadmap: Roadmap
    _euclid: dict[int, np.ndarray] = field(default_factory=dict)
    _hops: dict[int, np.ndarray] = field(default_factory=dict)
    _matrix: np.ndarray | None = None

    def euclidean_from(self, source: int) -> np.ndarray:
        table = self._euclid.get(source)
        if table is None:
            table = dijkstra_distances(source, self.roadmap)
            self._euclid[source] = table
        return table

    def hops_from(self, source: int) -> np.ndarray:
        table = self._hops.get(source)
        if table is None:
            table = hop_distances(source, self.roadmap)
            self._hops[source] = table
        return table

    def pairwise(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = vertex_distance_matrix(self.roadmap)
        return self._matrix
