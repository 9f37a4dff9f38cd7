"""Command-line surface: dataset generation, episodes, benchmarks, metrics, serving."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from dc2g import benchmark as bench
from dc2g import dataset, evalmetrics, report
from dc2g.errors import BridgeError, Dc2gError
from dc2g.estimator import HeuristicEstimator, OracleEstimator, serve_stdio, serve_tcp
from dc2g.planner import run_episode
from dc2g.semantic import Palette, load_semantic_png
from dc2g.sim import Heading, Pose, SensorConfig, TraceWriter


def _parse_dims(text):
    if "x" in text:
        h, w = text.split("x")
        return int(h), int(w)
    n = int(text)
    return n, n


def _load_palette(path):
    if path:
        return Palette.from_json(Path(path).read_text())
    return Palette.default()


def cmd_gen_data(args):
    split = tuple(float(v) for v in args.split.split(","))
    if len(split) != 3 or abs(sum(split) - 1.0) > 1e-9:
        raise SystemExit("--split must be three fractions summing to 1")
    manifest = dataset.gen_data(
        args.out,
        n_worlds=args.worlds,
        masks_per_world=args.masks,
        dims=_parse_dims(args.dims),
        seed=args.seed,
        split=split,
        sensor=SensorConfig(fov=args.sensor_fov, range=args.sensor_range),
        sweeps_max=args.sweeps_max,
        render_size=args.render_size,
    )
    print(f"wrote {len(manifest['pairs'])} pairs to {args.out}")


def cmd_simulate(args):
    palette = _load_palette(args.palette)
    cfg = SensorConfig(fov=args.sensor_fov, range=args.sensor_range)
    world, goal = dataset.generate_world(
        dataset.WorldSpec(seed=args.world_seed, height=_parse_dims(args.dims)[0], width=_parse_dims(args.dims)[1]),
        palette,
    )
    if args.start:
        r, c, letter = args.start.split(",")
        start = Pose(int(r), int(c), Heading.from_letter(letter))
    else:
        start = bench.sample_starts(world, palette, 1, f"sim:{args.seed}:{args.world_seed}")[0]
    planner = bench._make_planner(args.planner, world, palette, goal, cfg, None)
    trace = TraceWriter(args.trace) if args.trace else None
    try:
        result = run_episode(world, palette, goal, start, planner, cfg, args.max_steps, trace=trace)
    finally:
        if trace:
            trace.close()
    if args.figure:
        report.trajectory_figure(world, palette, result.trajectory, args.figure, goal=goal)
    print(
        json.dumps(
            {
                "world_seed": args.world_seed,
                "planner": args.planner,
                "start": [start.row, start.col, start.heading.letter],
                "steps": result.steps,
                "status": result.status.value,
                "goal": list(goal),
            }
        )
    )


def cmd_benchmark(args):
    config = bench.BenchmarkConfig.from_json(Path(args.config).read_text())
    if args.jobs is not None:
        config = bench.BenchmarkConfig(**{**config.__dict__, "jobs": args.jobs})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, summary = bench.run_benchmark(config)
    bench.write_csv(rows, out / "results.csv")
    bench.write_summary(summary, out / "summary.json")
    written = [str(out / "results.csv"), str(out / "summary.json")]
    if not args.no_figures:
        written += report.benchmark_figures(rows, out)
    print("\n".join(written))


def cmd_score_predictions(args):
    palette = _load_palette(args.palette)
    target_dir = Path(args.target_dir)
    pred_dir = Path(args.pred_dir)
    names = sorted(p.name for p in target_dir.glob("*_c2g.png"))
    if not names:
        raise SystemExit(f"no *_c2g.png targets under {target_dir}")
    rows = []
    from dc2g.semantic import png_bytes_to_rgb

    for name in names:
        pred_path = pred_dir / name
        if not pred_path.exists():
            continue
        pred = png_bytes_to_rgb(pred_path.read_bytes())
        target = png_bytes_to_rgb((target_dir / name).read_bytes())
        l1 = evalmetrics.pixel_l1(pred, target)
        row = {"name": name, "l1": l1}
        for task in (evalmetrics.TRAVERSABLE_TASK, evalmetrics.LOW_C2G_TASK):
            p, r = evalmetrics.precision_recall(
                evalmetrics.classify_pixels(pred, task), evalmetrics.classify_pixels(target, task)
            )
            row[f"{task.name}_precision"] = p
            row[f"{task.name}_recall"] = r
        rows.append(row)
    cols = ["name", "l1", "traversable_precision", "traversable_recall", "low_c2g_precision", "low_c2g_recall"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row["name"]] + ["" if row[c] is None else repr(row[c]) for c in cols[1:]])
    if args.figures:
        report.score_figure(
            [r["name"] for r in rows], [r["l1"] for r in rows], "per-pixel L1", Path(args.out).with_suffix(".png")
        )
    print(f"wrote {len(rows)} rows to {args.out}")


def _load_maps(dir_path, palette):
    paths = sorted(Path(dir_path).glob("*_map.png")) or sorted(Path(dir_path).glob("*.png"))
    maps = [load_semantic_png(p.read_bytes(), palette) for p in paths]
    return [p.name for p in paths], maps


def cmd_similarity(args):
    palette = _load_palette(args.palette)
    _, train_maps = _load_maps(args.train_dir, palette)
    test_names, test_maps = _load_maps(args.test_dir, palette)
    model = evalmetrics.build_similarity_model(train_maps, palette, block=args.block, seed=args.seed)
    scores = [evalmetrics.similarity_score(model, m, palette) for m in test_maps]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "similarity"])
        for name, score in zip(test_names, scores):
            writer.writerow([name, repr(score)])
    if args.figures:
        report.score_figure(test_names, scores, "distance to closest training map", Path(args.out).with_suffix(".png"))
    print(f"wrote {len(scores)} rows to {args.out}")


def cmd_serve_oracle(args):
    palette = _load_palette(args.palette)
    if args.world:
        world = load_semantic_png(Path(args.world).read_bytes(), palette)
        if args.goal:
            goal = tuple(int(v) for v in args.goal.split(","))
        else:
            import numpy as np

            goals = np.argwhere(world.cells == palette.goal_id)
            if len(goals) != 1:
                raise SystemExit("--goal r,c required unless the map has exactly one goal cell")
            goal = (int(goals[0][0]), int(goals[0][1]))
    else:
        world, goal = dataset.generate_world(
            dataset.WorldSpec(
                seed=args.world_seed, height=_parse_dims(args.dims)[0], width=_parse_dims(args.dims)[1]
            ),
            palette,
        )
    handler = OracleEstimator(world, palette, goal) if args.estimator == "oracle" else HeuristicEstimator(palette)
    spec = os.environ.get("DC2G_BRIDGE", "stdio")
    try:
        if spec == "stdio":
            serve_stdio(handler)
        elif spec.startswith("tcp:"):
            _, host, port = spec.split(":")
            serve_tcp(handler, host, int(port), connections=args.connections)
        else:
            raise SystemExit(f"unrecognized DC2G_BRIDGE value {spec!r}")
    except BridgeError as exc:
        print(f"bridge protocol error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = argparse.ArgumentParser(prog="dc2g", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="emit (masked map, masked cost-to-go) training pairs")
    p.add_argument("--worlds", type=int, required=True)
    p.add_argument("--masks", type=int, required=True)
    p.add_argument("--dims", default="50")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--render-size", type=int, default=256)
    p.add_argument("--sweeps-max", type=int, default=24)
    p.add_argument("--sensor-fov", type=float, default=90.0)
    p.add_argument("--sensor-range", type=int, default=8)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("simulate", help="run one episode and report the outcome")
    p.add_argument("--planner", default="dc2g:oracle")
    p.add_argument("--world-seed", type=int, default=0)
    p.add_argument("--dims", default="50")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="r,c,H (heading letter), default sampled on the road")
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--trace", help="JSON-lines step trace path")
    p.add_argument("--figure", help="trajectory figure path (PNG)")
    p.add_argument("--palette")
    p.add_argument("--sensor-fov", type=float, default=90.0)
    p.add_argument("--sensor-range", type=int, default=8)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="run a planner sweep and write CSV, summary, figures")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("score-predictions", help="pixel metrics for predicted cost-to-go images")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--target-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--palette")
    p.set_defaults(func=cmd_score_predictions)

    p = sub.add_parser("similarity", help="bag-of-words distance of test maps to a training set")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--block", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--palette")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("serve-oracle", help="serve ground-truth estimates over the bridge protocol")
    p.add_argument("--world", help="semantic map PNG; mutually exclusive with --world-seed")
    p.add_argument("--goal", help="r,c of the goal cell when using --world")
    p.add_argument("--world-seed", type=int, default=0)
    p.add_argument("--dims", default="50")
    p.add_argument("--estimator", choices=["oracle", "heuristic"], default="oracle")
    p.add_argument("--connections", type=int, help="tcp only: serve N connections then exit")
    p.add_argument("--palette")
    p.set_defaults(func=cmd_serve_oracle)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Dc2gError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


if __name__ == "__main__":
    main()
