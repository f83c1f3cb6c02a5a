"""On-disk formats: JSON maps and scenarios, CSV plans."""
from __future__ import annotations

import json
from pathlib import Path

from .graph import Assignment, Roadmap
from .plans import Plan


def write_map(roadmap: Roadmap, path: str | Path) -> None:
    payload = {
        "vertices": [{"id": i, "x": x, "y": y} for i, x, y in roadmap.vertex_tuples()],
        "edges": [[u, v] for u, v in sorted(roadmap.edges)],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_map(path: str | Path) -> Roadmap:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    vertices = [(v["id"], v["x"], v["y"]) for v in payload["vertices"]]
    edges = [(e[0], e[1]) for e in payload["edges"]]
    return Roadmap.build(vertices, edges)


def write_scenario(assignment: Assignment, path: str | Path) -> None:
    payload = {
        "agents": [{"start": s, "goal": g} for s, g in zip(assignment.starts, assignment.goals)]
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_scenario(path: str | Path) -> Assignment:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    agents = payload["agents"]
    return Assignment(
        starts=tuple(a["start"] for a in agents),
        goals=tuple(a["goal"] for a in agents),
    )


def write_plan(plan: Plan, path: str | Path) -> None:
    k = plan.num_agents
    lines = ["t," + ",".join(f"agent{i}" for i in range(k))]
    for t, config in enumerate(plan.steps):
        lines.append(f"{t}," + ",".join(str(v) for v in config))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_plan(path: str | Path) -> Plan:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"empty plan file: {path}")
    header = lines[0].split(",")
    if header[0] != "t" or any(not h.startswith("agent") for h in header[1:]):
        raise ValueError(f"malformed plan header: {lines[0]!r}")
    steps = []
    for t, line in enumerate(lines[1:]):
        cells = line.split(",")
        if int(cells[0]) != t:
            raise ValueError(f"plan rows must be consecutive from t=0, got {cells[0]!r}")
        steps.append(tuple(int(c) for c in cells[1:]))
    return Plan(steps=tuple(steps))
