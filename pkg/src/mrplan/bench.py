"""Experiment harness: planner variants, run matrices, and aggregation.

Failure conventions: a failed sequential-router run reports its shuffle
limit as the iteration count; a failed tree-search run reports its
iteration cap. At aggregation time, failed steps/costs become twice the
worst successful value of their group, or 100000 when the whole group
failed. Wall-clock time is measured start to return, failures included.
"""
from __future__ import annotations

import csv
import hashlib
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import carp, mapgen, mrdrrt
from .graph import Assignment, DistanceCache, Roadmap
from .plans import Plan

CARP_SHUFFLE_LIMITS = (1, 10, 100, 1000)
ALL_FAILED_SENTINEL = 100000.0


@dataclass(frozen=True)
class VariantSpec:
    name: str
    planner: str  # "carp" | "mrdrrt"
    shuffles: int | None = None
    improved_expansion: bool = True
    rewiring: bool = True
    nn_count: int = 5
    delta: float = 4.0
    connector_orderings: int = 1

    def __post_init__(self) -> None:
        if self.planner not in ("carp", "mrdrrt"):
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.planner == "carp" and self.shuffles not in CARP_SHUFFLE_LIMITS:
            raise ValueError(f"carp shuffle limit must be one of {CARP_SHUFFLE_LIMITS}")


def carp_variant(shuffles: int) -> VariantSpec:
    return VariantSpec(name=f"carp-{shuffles}", planner="carp", shuffles=shuffles)


def mrdrrt_variant(improved_expansion: bool = True, rewiring: bool = True, **kw) -> VariantSpec:
    name = f"mrdrrt-exp{int(improved_expansion)}-rw{int(rewiring)}"
    return VariantSpec(
        name=name,
        planner="mrdrrt",
        improved_expansion=improved_expansion,
        rewiring=rewiring,
        **kw,
    )


def default_variants() -> list[VariantSpec]:
    variants = [carp_variant(s) for s in CARP_SHUFFLE_LIMITS]
    for expansion in (True, False):
        for rewiring in (True, False):
            variants.append(mrdrrt_variant(expansion, rewiring))
    return variants


def load_variants(path: str | Path) -> list[VariantSpec]:
    """Variant list from a JSON config mirroring VariantSpec fields."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    variants = []
    for entry in payload["variants"]:
        entry = dict(entry)
        planner = entry.pop("planner")
        if planner.startswith("carp-"):
            variants.append(carp_variant(int(planner.split("-", 1)[1])))
            continue
        if planner == "carp":
            variants.append(carp_variant(int(entry.pop("shuffles"))))
            continue
        name = entry.pop("name", None)
        spec = mrdrrt_variant(**entry)
        if name:
            spec = replace(spec, name=name)
        variants.append(spec)
    return variants


@dataclass(frozen=True)
class RunRecord:
    map_id: str
    assignment_id: str
    variant: str
    success: bool
    steps: int | None
    sum_of_costs: float | None
    iterations: int
    runtime_ms: float
    seed: int


@dataclass(frozen=True)
class AggregateRow:
    grid: str
    edge_count: int
    variant: str
    success_rate: float
    median_steps: float
    median_iterations: float
    median_runtime_ms: float


def cell_seed(master_seed: int, map_id: str, assignment_id: str, variant: str) -> int:
    key = f"{master_seed}:{map_id}:{assignment_id}:{variant}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def _execute_cell(
    roadmap: Roadmap,
    assignment: Assignment,
    variant: VariantSpec,
    seed: int,
    budget: int | None,
    cache: DistanceCache | None = None,
) -> tuple[bool, int | None, float | None, int, float, Plan | None]:
    started = time.perf_counter()
    if variant.planner == "carp":
        result = carp.plan_all(
            assignment,
            roadmap,
            carp.CarpParams(max_shuffles=variant.shuffles, rng_seed=seed),
            cache=cache,
        )
        runtime_ms = (time.perf_counter() - started) * 1000.0
        plan = result.plan
        iterations = result.shuffles_used
    else:
        params = mrdrrt.PlannerParams(
            nn_count=variant.nn_count,
            delta=variant.delta,
            max_iterations=budget if budget is not None else 500000,
            connector_orderings_per_call=variant.connector_orderings,
            rng_seed=seed,
            improved_expansion=variant.improved_expansion,
            rewiring=variant.rewiring,
        )
        result = mrdrrt.plan(assignment, roadmap, params, cache=cache)
        runtime_ms = (time.perf_counter() - started) * 1000.0
        plan = result.plan
        iterations = result.stats.iterations
    if plan is None:
        return False, None, None, iterations, runtime_ms, None
    return True, plan.makespan, plan.sum_of_costs(roadmap), iterations, runtime_ms, plan


# One task = every cell of one map, so each worker builds that map's
# distance cache exactly once.
def _run_map_chunk(args) -> list[tuple[str, str, str, int, tuple]]:
    map_id, roadmap, cells, budget = args
    cache = DistanceCache(roadmap)
    out = []
    for assignment_id, assignment, variant, seed in cells:
        outcome = _execute_cell(roadmap, assignment, variant, seed, budget, cache)
        out.append((map_id, assignment_id, variant.name, seed, outcome))
    return out


def run_cells(
    cells: list[tuple[str, Roadmap, str, Assignment]],
    variants: list[VariantSpec],
    master_seed: int = 0,
    budget: int | None = None,
    workers: int = 1,
    plan_sink: dict | None = None,
) -> list[RunRecord]:
    """Run every (cell, variant) combination; failures are data, not errors."""
    by_map: dict[str, tuple[Roadmap, list]] = {}
    for map_id, roadmap, assignment_id, assignment in cells:
        entry = by_map.setdefault(map_id, (roadmap, []))
        for variant in variants:
            seed = cell_seed(master_seed, map_id, assignment_id, variant.name)
            entry[1].append((assignment_id, assignment, variant, seed))
    tasks = [(map_id, roadmap, chunk, budget) for map_id, (roadmap, chunk) in by_map.items()]

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_run_map_chunk, tasks))
    else:
        chunk_results = [_run_map_chunk(task) for task in tasks]

    records = []
    for chunk in chunk_results:
        for map_id, assignment_id, variant_name, seed, outcome in chunk:
            success, steps, costs, iterations, runtime_ms, plan = outcome
            records.append(
                RunRecord(
                    map_id=map_id,
                    assignment_id=assignment_id,
                    variant=variant_name,
                    success=success,
                    steps=steps,
                    sum_of_costs=costs,
                    iterations=iterations,
                    runtime_ms=runtime_ms,
                    seed=seed,
                )
            )
            if plan_sink is not None and plan is not None:
                plan_sink[(map_id, assignment_id, variant_name)] = plan
    records.sort(key=lambda r: (r.map_id, r.assignment_id, r.variant))
    return records


def run_matrix(
    maps: list[tuple[str, Roadmap]],
    assignments: list[tuple[str, Assignment]],
    variants: list[VariantSpec],
    master_seed: int = 0,
    budget: int | None = None,
    workers: int = 1,
    plan_sink: dict | None = None,
) -> list[RunRecord]:
    """Full cross product of maps, assignments, and variants."""
    cells = [
        (map_id, roadmap, assignment_id, assignment)
        for map_id, roadmap in maps
        for assignment_id, assignment in assignments
    ]
    return run_cells(cells, variants, master_seed, budget, workers, plan_sink)


def substitute_failures(
    values: list[tuple[bool, float | None]]
) -> list[float]:
    """Apply the failed-run substitution rule to one group's metric values.

    With at least one success, each failure becomes twice the worst
    successful value; with none, every entry becomes the fixed sentinel.
    """
    successes = [v for ok, v in values if ok]
    if not successes:
        return [ALL_FAILED_SENTINEL] * len(values)
    worst = max(successes)
    return [v if ok else 2.0 * worst for ok, v in values]


def aggregate(
    records: list[RunRecord],
    map_info: dict[str, tuple[str, int]] | None = None,
) -> list[AggregateRow]:
    """Per (map, variant): success rate and medians after substitution."""
    if not records:
        return []
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.map_id, record.variant), []).append(record)
    rows = []
    for (map_id, variant), group in sorted(groups.items()):
        if not group:
            raise ValueError("empty aggregation group")
        steps = substitute_failures([(r.success, r.steps) for r in group])
        grid, edge_count = (map_info or {}).get(map_id, (map_id, -1))
        rows.append(
            AggregateRow(
                grid=grid,
                edge_count=edge_count,
                variant=variant,
                success_rate=sum(r.success for r in group) / len(group),
                median_steps=float(statistics.median(steps)),
                median_iterations=float(statistics.median(r.iterations for r in group)),
                median_runtime_ms=float(statistics.median(r.runtime_ms for r in group)),
            )
        )
    rows.sort(key=lambda r: (r.grid, r.edge_count, r.variant))
    return rows


RUNS_HEADER = [
    "map_id",
    "assignment_id",
    "variant",
    "success",
    "steps",
    "sum_of_costs",
    "iterations",
    "runtime_ms",
    "seed",
]
AGGREGATE_HEADER = [
    "grid",
    "edge_count",
    "variant",
    "success_rate",
    "median_steps",
    "median_iterations",
    "median_runtime_ms",
]


def write_runs_csv(records: list[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RUNS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.map_id,
                    r.assignment_id,
                    r.variant,
                    int(r.success),
                    "" if r.steps is None else r.steps,
                    "" if r.sum_of_costs is None else repr(r.sum_of_costs),
                    r.iterations,
                    repr(r.runtime_ms),
                    r.seed,
                ]
            )


def read_runs_csv(path: str | Path) -> list[RunRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != RUNS_HEADER:
            raise ValueError(f"unexpected runs header: {header}")
        for row in reader:
            records.append(
                RunRecord(
                    map_id=row[0],
                    assignment_id=row[1],
                    variant=row[2],
                    success=bool(int(row[3])),
                    steps=None if row[4] == "" else int(row[4]),
                    sum_of_costs=None if row[5] == "" else float(row[5]),
                    iterations=int(row[6]),
                    runtime_ms=float(row[7]),
                    seed=int(row[8]),
                )
            )
    return records


def write_aggregate_csv(rows: list[AggregateRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(AGGREGATE_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.grid,
                    r.edge_count,
                    r.variant,
                    repr(r.success_rate),
                    repr(r.median_steps),
                    repr(r.median_iterations),
                    repr(r.median_runtime_ms),
                ]
            )


def read_aggregate_csv(path: str | Path) -> list[AggregateRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != AGGREGATE_HEADER:
            raise ValueError(f"unexpected aggregate header: {header}")
        for row in reader:
            rows.append(
                AggregateRow(
                    grid=row[0],
                    edge_count=int(row[1]),
                    variant=row[2],
                    success_rate=float(row[3]),
                    median_steps=float(row[4]),
                    median_iterations=float(row[5]),
                    median_runtime_ms=float(row[6]),
                )
            )
    return rows


def experiment_density(
    grid_sides: list[int],
    agents: int,
    variants: list[VariantSpec],
    seed: int,
    assignments_per_grid: int = 100,
    step_count: int = 9,
    connectivity: int = 8,
    budget: int | None = None,
    workers: int = 1,
    out_dir: str | Path | None = None,
) -> tuple[list[RunRecord], list[AggregateRow]]:
    """Density sweeps with shared per-grid assignments, run and aggregated.

    Maps where every variant fails stay in the output, flagged by their
    zero success rate.
    """
    import random as _random

    all_records = []
    map_info = {}
    for side in grid_sides:
        rng = _random.Random(cell_seed(seed, f"grid-{side}", "gen", "maps"))
        full = mapgen.grid(mapgen.GridSpec(side=side, connectivity=connectivity))
        sweep = mapgen.density_sweep(full, mapgen.mst_base(full, rng), step_count, rng)
        maps = []
        for roadmap in sweep:
            map_id = f"n{side}-e{roadmap.num_edges}"
            map_info[map_id] = (f"n{side}", roadmap.num_edges)
            maps.append((map_id, roadmap))
        assignments = [
            (f"a{j:03d}", mapgen.random_assignment(full, agents, rng))
            for j in range(assignments_per_grid)
        ]
        all_records.extend(
            run_matrix(maps, assignments, variants, seed, budget, workers)
        )
    rows = aggregate(all_records, map_info)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_runs_csv(all_records, out_dir / "runs.csv")
        write_aggregate_csv(rows, out_dir / "aggregate.csv")
    return all_records, rows


def experiment_adversarial(
    agent_counts: list[int],
    instances_per_count: int,
    seed: int,
    variants: list[VariantSpec] | None = None,
    budget: int | None = None,
    workers: int = 1,
    out_dir: str | Path | None = None,
) -> tuple[list[RunRecord], list[AggregateRow]]:
    """Adversarial instances grouped per agent count; one assignment each."""
    if variants is None:
        variants = [carp_variant(1000)] + [
            mrdrrt_variant(e, r) for e in (True, False) for r in (True, False)
        ]
    cells = []
    map_info = {}
    for count in agent_counts:
        map_id = f"adversarial-k{count}"
        for j in range(instances_per_count):
            instance_seed = cell_seed(seed, map_id, f"i{j:03d}", "gen")
            roadmap, assignment = mapgen.adversarial(
                mapgen.AdversarialSpec(agent_count=count, rng_seed=instance_seed)
            )
            cells.append((f"{map_id}/i{j:03d}", roadmap, f"i{j:03d}", assignment))
            map_info[f"{map_id}/i{j:03d}"] = (map_id, roadmap.num_edges)
    records = run_cells(cells, variants, seed, budget, workers)
    # Group per agent count for aggregation, matching the experiment's axis.
    relabeled = [
        replace(r, map_id=r.map_id.split("/", 1)[0], assignment_id=r.map_id.split("/", 1)[1])
        for r in records
    ]
    count_info = {
        f"adversarial-k{count}": (f"adversarial-k{count}", -1) for count in agent_counts
    }
    rows = aggregate(relabeled, count_info)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_runs_csv(relabeled, out_dir / "runs.csv")
        write_aggregate_csv(rows, out_dir / "aggregate.csv")
    return relabeled, rows
