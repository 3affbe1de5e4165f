"""Command line entry point: ``python -m sarplan <command>``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import io
from .errors import InvalidArgument, NumericalFailure, PlanningFailure, StageError
from .scenario import (PRESETS, ScenarioConfig, build_inputs, compare_baselines, make_heatmap,
                       make_searchers, make_terrain, recommended_sparse, run_plan, write_meta)

EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_PLANNING = 0, 1, 2, 3


def load_config(args) -> ScenarioConfig:
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    else:
        cfg = PRESETS[args.preset]()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.sparse == "on" and cfg.sparse is None:
        changes["sparse"] = recommended_sparse(cfg)
    elif args.sparse == "off":
        changes["sparse"] = None
    return dataclasses.replace(cfg, **changes).validate()


def _write_grid(path_stem, values, origin, cell_size, fmt):
    if fmt == "csv":
        io.write_grid_csv(path_stem + ".csv", values, origin, cell_size)
    elif fmt == "pgm":
        io.write_pgm(path_stem + ".pgm", values)
    else:
        with open(path_stem + ".json", "w") as fh:
            json.dump({"origin": list(origin), "cell_size": cell_size, "values": values.tolist()}, fh)


def cmd_generate_terrain(cfg, args):
    terrain = make_terrain(cfg)
    _write_grid(os.path.join(cfg.output_dir, "terrain"), terrain.heights, terrain.origin, terrain.cell_size,
                args.format)
    return f"terrain {terrain.shape[1]}x{terrain.shape[0]} cells written to {cfg.output_dir}"


def cmd_heatmap(cfg, args):
    terrain = make_terrain(cfg)
    belief = make_heatmap(cfg, terrain)
    _write_grid(os.path.join(cfg.output_dir, "heatmap"), belief.probs, belief.origin, belief.cell_size,
                args.format)
    return f"heatmap from {cfg.mc_iterations} rollouts written to {cfg.output_dir}"


def cmd_searchers(cfg, args):
    terrain = make_terrain(cfg)
    paths = make_searchers(cfg, terrain)
    if args.format == "json":
        data = [{"t": p.t.tolist(), "points": p.points.tolist(), "modes": list(p.modes),
                 "completed": p.completed} for p in paths]
        with open(os.path.join(cfg.output_dir, "searchers.json"), "w") as fh:
            json.dump(data, fh)
    else:
        io.write_searcher_paths_csv(os.path.join(cfg.output_dir, "searchers.csv"), paths)
    lengths = ", ".join(f"{p.length:.0f} m" for p in paths)
    return f"{len(paths)} searcher paths ({lengths}) written to {cfg.output_dir}"


def cmd_plan(cfg, args):
    result = run_plan(cfg, cfg.output_dir)
    r = result.report
    return (f"risk {r.risk:.6g}  objective {r.objective:.6g}  length {r.total_length:.1f} m  "
            f"planning time {r.planning_time if r.planning_time is not None else 0.0:.2f} s")


def cmd_compare(cfg, args):
    table = compare_baselines(cfg, cfg.output_dir, init=args.init)
    return table.format()


COMMANDS = {
    "generate-terrain": cmd_generate_terrain,
    "heatmap": cmd_heatmap,
    "searchers": cmd_searchers,
    "plan": cmd_plan,
    "compare": cmd_compare,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file (default: the chosen preset)")
    common.add_argument("--preset", choices=sorted(PRESETS), default="desk",
                        help="built-in scenario used when --config is absent")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--sparse", choices=("on", "off"), help="Morton block-sparse GP solves")
    common.add_argument("--format", choices=("csv", "json", "pgm"), default="csv",
                        help="grid and path export format")
    parser = argparse.ArgumentParser(prog="sarplan", description="Risk-aware UAV search planning.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "compare":
            p.add_argument("--init", choices=("rrt", "rrt_star"), default="rrt",
                           help="initial paths for the optimized row")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        message = COMMANDS[args.command](cfg, args)
        write_meta(cfg, cfg.output_dir)
    except (InvalidArgument, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PlanningFailure as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except StageError as exc:
        print(f"stage '{exc.stage}' failed: {exc.cause}", file=sys.stderr)
        if isinstance(exc.cause, InvalidArgument):
            return EXIT_INVALID
        if isinstance(exc.cause, PlanningFailure):
            return EXIT_PLANNING
        return EXIT_FAILURE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(message)
    return EXIT_OK
