"""Command line entry point: ``sgmorph run|baseline|landscape|report``.

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""

import argparse
import json
import os
import sys

import numpy as np

from ..graph_rl import GnnSac
from .config import ALGORITHMS, PRESETS, ConfigError, load_config
from .landscape import design_landscape, landscape_objective, write_landscape_csv, write_landscape_svg
from .logs import read_designs
from .loop import RunAborted, morphology_pool, run_baseline, run_sg_morph
from .report import report_top_designs

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


def _build_config(args, algorithm=None):
    if args.config:
        config = load_config(args.config)
    else:
        config = PRESETS[args.preset](env_kind=args.env)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if algorithm is not None:
        changes["algorithm"] = algorithm
    return config.with_overrides(**changes) if changes else config


def _add_run_options(p):
    p.add_argument("--config", help="JSON experiment config; overrides --preset")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--env", default="halfcheetah", help="environment for presets")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="run directory")
    p.add_argument("--resume", action="store_true", help="continue from the run directory's last checkpoint")


def cmd_run(args):
    config = _build_config(args)
    log = run_sg_morph(config, resume=args.resume)
    print(f"{config.algorithm}: {len(log.records)} designs, {log.training_episodes} episodes -> {log.run_dir}")


def cmd_baseline(args):
    config = _build_config(args, algorithm=args.algorithm)
    log = run_baseline(config, resume=args.resume)
    print(f"{config.algorithm}: {len(log.records)} designs, {log.training_episodes} episodes -> {log.run_dir}")


def cmd_landscape(args):
    config = load_config(os.path.join(args.run, "config.json"))
    pool = morphology_pool(config)
    try:
        graph = pool.by_id(args.morphology)
    except KeyError:
        raise ConfigError(f"morphology {args.morphology!r} is not in this run's pool") from None
    space = pool.design_space(graph)
    designs = [d.values for _, g, d in read_designs(os.path.join(args.run, "designs.json")) if g.morphology_id == graph.morphology_id]
    with np.load(os.path.join(args.run, "initial_states.npz")) as z:
        if graph.morphology_id not in z.files:
            raise ConfigError(f"no recorded initial states for {graph.morphology_id}")
        states = z[graph.morphology_id]
    rng = np.random.default_rng(args.seed)
    states = states[rng.integers(0, states.shape[0], config.objective_states)]
    gnn = GnnSac.from_snapshot(args.snapshot)
    land = design_landscape(landscape_objective(gnn, graph, space, states), designs, grid=args.grid)
    out = args.out or args.run
    os.makedirs(out, exist_ok=True)
    stem = os.path.join(out, f"landscape_{graph.morphology_id}")
    write_landscape_csv(stem + ".csv", land)
    write_landscape_svg(stem + ".svg", land, title=graph.name)
    print(f"{stem}.csv, {stem}.svg")


def cmd_report(args):
    report = report_top_designs(args.runs, top_k=args.top)
    print(report.table())
    if args.json:
        doc = {
            "mean": report.mean,
            "std": report.std,
            "runs": [{"run": r.run, "algorithm": r.algorithm, "score": r.score, "top": r.top} for r in report.runs],
        }
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=2)


def build_parser():
    parser = argparse.ArgumentParser(prog="sgmorph", description="Morphology and controller co-adaptation runs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured algorithm")
    _add_run_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="run a baseline variant")
    p.add_argument("--algorithm", required=True, choices=[a for a in ALGORITHMS if a != "sg_morph"])
    _add_run_options(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("landscape", help="surrogate objective heatmap over a run's designs")
    p.add_argument("--snapshot", required=True, help="generalist network snapshot (.npz)")
    p.add_argument("--morphology", required=True, help="morphology id, e.g. g3-67af8f86a388")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--seed", type=int, default=0, help="seed for drawing evaluation states")
    p.add_argument("--out", help="output directory (defaults to the run directory)")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("report", help="top-design summary across runs")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--json", help="also write the summary to this file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
