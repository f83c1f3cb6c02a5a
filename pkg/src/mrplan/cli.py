"""Command-line front end for generators, planners, validation, and benchmarks.

Exit codes: 0 success, 1 planning or validation failure (stats still
written), 2 usage error, 3 file error. Diagnostics go to stderr; stdout
stays silent unless --stdout is given.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench, carp, fileio, mapgen, mrdrrt
from .plans import validate_plan

EXIT_OK = 0
EXIT_PLANNING_FAILURE = 1
EXIT_USAGE = 2
EXIT_FILE_ERROR = 3


class _FileError(Exception):
    """Unreadable or malformed input file; maps to exit code 3."""


def _err(message: str) -> None:
    print(f"mrplan: {message}", file=sys.stderr)


def _read_input(reader, path):
    try:
        return reader(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise _FileError(f"cannot read {path}: {exc}") from exc


def _default_workers() -> int:
    raw = os.environ.get("MRPLAN_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _check_outputs(paths: list[Path], force: bool) -> None:
    for path in paths:
        if path.exists() and not force:
            raise FileExistsError(f"refusing to overwrite {path} (use --force)")


def _int_list(raw: str) -> list[int]:
    return [int(part) for part in raw.split(",") if part]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrplan")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-grid", help="write an n x n grid map")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("gen-sweep", help="write a density sweep of maps")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("gen-adversarial", help="write a sequentially-unsolvable instance")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-map", required=True)
    p.add_argument("--out-scenario", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("gen-assignment", help="write a random assignment for a map")
    p.add_argument("--map", dest="map_path", required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("plan", help="plan one instance and write plan + stats")
    p.add_argument("--algo", choices=("carp", "mrdrrt"), required=True)
    p.add_argument("--map", dest="map_path", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--stats")
    p.add_argument("--shuffles", type=int, default=1)
    p.add_argument("--nn", type=int, default=5)
    p.add_argument("--delta", type=float, default=4.0)
    p.add_argument("--max-iter", type=int, default=500000)
    p.add_argument("--connector-orderings", type=int, default=1)
    p.add_argument("--no-rewire", action="store_true")
    p.add_argument("--no-improved-expansion", action="store_true")
    p.add_argument("--stdout", action="store_true")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("validate", help="check a plan against map and scenario")
    p.add_argument("--map", dest="map_path", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--plan", dest="plan_path", required=True)

    p = sub.add_parser("bench-density", help="run the density-sweep experiment")
    p.add_argument("--sides", type=_int_list, default=[10])
    p.add_argument("--agents", type=int, default=20)
    p.add_argument("--assignments", type=int, default=100)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants-config")
    p.add_argument("--budget", type=int)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("bench-adversarial", help="run the adversarial experiment")
    p.add_argument("--counts", type=_int_list, default=[4, 8, 12, 16])
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants-config")
    p.add_argument("--budget", type=int)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")

    return parser


def _cmd_gen_grid(args) -> int:
    out = Path(args.out)
    _check_outputs([out], args.force)
    roadmap = mapgen.grid(
        mapgen.GridSpec(side=args.side, connectivity=args.connectivity, spacing=args.spacing)
    )
    fileio.write_map(roadmap, out)
    return EXIT_OK


def _cmd_gen_sweep(args) -> int:
    import random

    out_dir = Path(args.out_dir)
    rng = random.Random(args.seed)
    full = mapgen.grid(mapgen.GridSpec(side=args.side, connectivity=args.connectivity))
    sweep = mapgen.density_sweep(full, mapgen.mst_base(full, rng), args.steps, rng)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / f"map_{i:02d}_e{m.num_edges}.json" for i, m in enumerate(sweep)]
    _check_outputs(paths, args.force)
    for path, roadmap in zip(paths, sweep):
        fileio.write_map(roadmap, path)
    return EXIT_OK


def _cmd_gen_adversarial(args) -> int:
    out_map, out_scenario = Path(args.out_map), Path(args.out_scenario)
    _check_outputs([out_map, out_scenario], args.force)
    roadmap, assignment = mapgen.adversarial(
        mapgen.AdversarialSpec(agent_count=args.agents, rng_seed=args.seed)
    )
    fileio.write_map(roadmap, out_map)
    fileio.write_scenario(assignment, out_scenario)
    return EXIT_OK


def _cmd_gen_assignment(args) -> int:
    import random

    out = Path(args.out)
    _check_outputs([out], args.force)
    roadmap = _read_input(fileio.read_map, args.map_path)
    assignment = mapgen.random_assignment(roadmap, args.agents, random.Random(args.seed))
    fileio.write_scenario(assignment, out)
    return EXIT_OK


def _cmd_plan(args) -> int:
    out = Path(args.out)
    stats_path = Path(args.stats) if args.stats else Path(str(out) + ".stats.json")
    _check_outputs([out, stats_path], args.force)
    roadmap = _read_input(fileio.read_map, args.map_path)
    assignment = _read_input(fileio.read_scenario, args.scenario)

    if args.algo == "carp":
        shuffles = args.shuffles
        result = carp.plan_all(
            assignment, roadmap, carp.CarpParams(max_shuffles=shuffles, rng_seed=args.seed)
        )
        plan = result.plan
        stats = {
            "algo": "carp",
            "seed": args.seed,
            "success": result.success,
            "shuffles_used": result.shuffles_used,
            "iterations": result.shuffles_used,
            "ordering": list(result.ordering) if result.ordering else None,
            "plan_steps": plan.makespan if plan else None,
            "sum_of_costs": plan.sum_of_costs(roadmap) if plan else None,
        }
    else:
        params = mrdrrt.PlannerParams(
            nn_count=args.nn,
            delta=args.delta,
            max_iterations=args.max_iter,
            connector_orderings_per_call=args.connector_orderings,
            rng_seed=args.seed,
            improved_expansion=not args.no_improved_expansion,
            rewiring=not args.no_rewire,
        )
        result = mrdrrt.plan(assignment, roadmap, params)
        plan = result.plan
        stats = {
            "algo": "mrdrrt",
            "seed": args.seed,
            "success": result.success,
            "iterations": result.stats.iterations,
            "runtime_ms": result.stats.runtime_ms,
            "tree_size": result.stats.tree_size,
            "plan_steps": result.stats.plan_steps,
            "sum_of_costs": result.stats.sum_of_costs,
        }

    stats_path.write_text(json.dumps(stats, indent=1) + "\n", encoding="utf-8")
    if plan is None:
        _err("planning failed; stats written")
        return EXIT_PLANNING_FAILURE
    fileio.write_plan(plan, out)
    if args.stdout:
        sys.stdout.write(out.read_text(encoding="utf-8"))
    return EXIT_OK


def _cmd_validate(args) -> int:
    roadmap = _read_input(fileio.read_map, args.map_path)
    assignment = _read_input(fileio.read_scenario, args.scenario)
    plan = _read_input(fileio.read_plan, args.plan_path)
    violation = validate_plan(plan, assignment, roadmap)
    if violation is not None:
        _err(f"invalid plan: {violation}")
        return EXIT_PLANNING_FAILURE
    return EXIT_OK


def _load_variants(args) -> list[bench.VariantSpec]:
    if args.variants_config:
        return _read_input(bench.load_variants, args.variants_config)
    return bench.default_variants()


def _cmd_bench_density(args) -> int:
    out_dir = Path(args.out_dir)
    _check_outputs([out_dir / "runs.csv", out_dir / "aggregate.csv"], args.force)
    bench.experiment_density(
        grid_sides=args.sides,
        agents=args.agents,
        variants=_load_variants(args),
        seed=args.seed,
        assignments_per_grid=args.assignments,
        step_count=args.steps,
        connectivity=args.connectivity,
        budget=args.budget,
        workers=args.workers,
        out_dir=out_dir,
    )
    return EXIT_OK


def _cmd_bench_adversarial(args) -> int:
    out_dir = Path(args.out_dir)
    _check_outputs([out_dir / "runs.csv", out_dir / "aggregate.csv"], args.force)
    variants = (
        _read_input(bench.load_variants, args.variants_config)
        if args.variants_config
        else None
    )
    bench.experiment_adversarial(
        agent_counts=args.counts,
        instances_per_count=args.instances,
        seed=args.seed,
        variants=variants,
        budget=args.budget,
        workers=args.workers,
        out_dir=out_dir,
    )
    return EXIT_OK


_HANDLERS = {
    "gen-grid": _cmd_gen_grid,
    "gen-sweep": _cmd_gen_sweep,
    "gen-adversarial": _cmd_gen_adversarial,
    "gen-assignment": _cmd_gen_assignment,
    "plan": _cmd_plan,
    "validate": _cmd_validate,
    "bench-density": _cmd_bench_density,
    "bench-adversarial": _cmd_bench_adversarial,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _HANDLERS[args.command](args)
    except (_FileError, OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return EXIT_FILE_ERROR
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
