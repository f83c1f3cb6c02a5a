"""Composite moves, plans, and conflict validation.

Time is discrete and synchronous: every step moves each agent along one
edge or leaves it in place. Two constraints apply per step: no two agents
on one vertex, and no two agents swapping across one edge. Following a
vacating agent is legal.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import Assignment, Config, Roadmap, euclidean_distance


@dataclass(frozen=True)
class MoveViolation:
    kind: str  # "illegal-edge" | "vertex-conflict" | "swap"
    agents: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind} involving agents {self.agents}"


@dataclass(frozen=True)
class PlanViolation:
    step: int  # index of the step (transition t -> t+1, or endpoint step)
    kind: str
    agents: tuple[int, ...]

    def __str__(self) -> str:
        return f"step {self.step}: {self.kind} involving agents {self.agents}"


def is_valid_configuration(config: Config) -> bool:
    return len(set(config)) == len(config)


def validate_move(c1: Config, c2: Config, roadmap: Roadmap) -> MoveViolation | None:
    """Check one synchronous step. Returns the earliest violation, or None."""
    if len(c1) != len(c2):
        raise ValueError(f"agent count mismatch: {len(c1)} vs {len(c2)}")
    for i, (a, b) in enumerate(zip(c1, c2)):
        if a != b and not roadmap.has_edge(a, b):
            return MoveViolation("illegal-edge", (i,))
    seen: dict[int, int] = {}
    for i, b in enumerate(c2):
        if b in seen:
            return MoveViolation("vertex-conflict", (seen[b], i))
        seen[b] = i
    for i in range(len(c1)):
        for j in range(i + 1, len(c1)):
            if c1[i] != c2[i] and c2[i] == c1[j] and c2[j] == c1[i]:
                return MoveViolation("swap", (i, j))
    return None


@dataclass(frozen=True)
class Plan:
    """Time-indexed configuration sequence C_0..C_T."""

    steps: tuple[Config, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("plan must contain at least one configuration")
        k = len(self.steps[0])
        if any(len(c) != k for c in self.steps):
            raise ValueError("all configurations must have the same agent count")

    @property
    def num_agents(self) -> int:
        return len(self.steps[0])

    @property
    def makespan(self) -> int:
        return len(self.steps) - 1

    def arrival_times(self) -> tuple[int, ...]:
        """First step after which each agent never moves again."""
        arrivals = []
        for i in range(self.num_agents):
            t = self.makespan
            while t > 0 and self.steps[t - 1][i] == self.steps[t][i]:
                t -= 1
            arrivals.append(t)
        return tuple(arrivals)

    def sum_of_costs(self, roadmap: Roadmap) -> float:
        """Total traveled Euclidean length over all agents; waiting is free."""
        total = 0.0
        for prev, curr in zip(self.steps, self.steps[1:]):
            for a, b in zip(prev, curr):
                if a != b:
                    total += euclidean_distance(a, b, roadmap)
        return total


def validate_plan(plan: Plan, assignment: Assignment, roadmap: Roadmap) -> PlanViolation | None:
    """Check endpoints and every consecutive step; report the first violation."""
    k = assignment.num_agents
    if plan.num_agents != k:
        raise ValueError(f"plan has {plan.num_agents} agents, assignment has {k}")
    for i in range(k):
        if plan.steps[0][i] != assignment.starts[i]:
            return PlanViolation(0, "start-mismatch", (i,))
    for i in range(k):
        if plan.steps[-1][i] != assignment.goals[i]:
            return PlanViolation(plan.makespan, "goal-mismatch", (i,))
    for t, (c1, c2) in enumerate(zip(plan.steps, plan.steps[1:])):
        bad = validate_move(c1, c2, roadmap)
        if bad is not None:
            return PlanViolation(t, bad.kind, bad.agents)
    return None
