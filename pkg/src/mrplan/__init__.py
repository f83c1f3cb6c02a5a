"""Multi-robot path planning on shared roadmaps.

Two planners over one validation substrate: a prioritized router through
free time windows (fast, ordering-sensitive) and a randomized tree search
over the implicit composite configuration space (slower, solves instances
the router cannot). Plus map/assignment generators and a benchmark
harness.
"""

from .graph import Assignment, Config, Roadmap, composite_distance, euclidean_distance
from .plans import Plan, validate_move, validate_plan

__all__ = [
    "Assignment",
    "Config",
    "Plan",
    "Roadmap",
    "composite_distance",
    "euclidean_distance",
    "validate_move",
    "validate_plan",
]
