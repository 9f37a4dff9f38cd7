"""Benchmark sweeps over planner x estimator x world grids.

Episodes are deterministic functions of the config seed, so the emitted CSV
is byte-identical across runs and across worker counts; rows are ordered
canonically by (world, planner, start index) regardless of scheduling.
"""
from __future__ import annotations

import csv
import json
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from dc2g.dataset import WorldSpec, generate_world
from dc2g.errors import Dc2gError
from dc2g.estimator import BridgeClient, HeuristicEstimator, OracleEstimator
from dc2g.planner import (
    DC2GPlanner,
    EpisodeStatus,
    FrontierPlanner,
    OraclePlanner,
    run_episode,
)
from dc2g.evalmetrics import extra_time_pct
from dc2g.semantic import Palette
from dc2g.sim import Heading, Pose, SensorConfig

CSV_COLUMNS = [
    "world",
    "planner",
    "estimator",
    "start_row",
    "start_col",
    "start_heading",
    "steps",
    "oracle_steps",
    "extra_pct",
    "status",
]


@dataclass(frozen=True)
class BenchmarkConfig:
    seed: int = 0
    worlds: int = 4
    world_dims: tuple[int, int] = (50, 50)
    world_seed_base: int = 0
    starts_per_world: int = 2
    planners: tuple[str, ...] = ("oracle", "frontier", "dc2g:oracle", "dc2g:heuristic")
    max_steps: int = 10000
    fov: float = 90.0
    range: int = 8
    jobs: int = 1
    bridge_cmd: tuple[str, ...] | None = None

    @staticmethod
    def from_json(text: str) -> "BenchmarkConfig":
        raw = json.loads(text)
        if "world_dims" in raw:
            raw["world_dims"] = tuple(raw["world_dims"])
        if "planners" in raw:
            raw["planners"] = tuple(raw["planners"])
        if raw.get("bridge_cmd"):
            raw["bridge_cmd"] = tuple(raw["bridge_cmd"])
        return BenchmarkConfig(**raw)

    def sensor(self) -> SensorConfig:
        return SensorConfig(fov=self.fov, range=self.range)


@dataclass
class BenchmarkRow:
    world: str
    planner: str
    estimator: str
    start_row: int
    start_col: int
    start_heading: str
    steps: int
    oracle_steps: int
    extra_pct: float | None
    status: str

    def label(self) -> str:
        return f"{self.planner}:{self.estimator}" if self.estimator else self.planner


def sample_starts(world, palette: Palette, count: int, seed_key: str) -> list[Pose]:
    """Uniform poses over road cells with uniform headings (seeded)."""
    road_id = palette.by_name("road").id
    roads = np.argwhere(world.cells == road_id)
    rng = random.Random(seed_key)
    starts = []
    for _ in range(count):
        r, c = (int(v) for v in roads[rng.randrange(len(roads))])
        starts.append(Pose(r, c, Heading(rng.randrange(4))))
    return starts


def _make_planner(label: str, world, palette, goal, cfg, bridge_cmd):
    if label == "oracle":
        return OraclePlanner(world, palette, goal)
    if label == "frontier":
        return FrontierPlanner(palette, cfg)
    if label.startswith("dc2g:"):
        kind = label.split(":", 1)[1]
        if kind == "oracle":
            est = OracleEstimator(world, palette, goal)
        elif kind == "heuristic":
            est = HeuristicEstimator(palette)
        elif kind == "bridge":
            est = BridgeClient.from_env(list(bridge_cmd) if bridge_cmd else None)
        else:
            raise ValueError(f"unknown estimator {kind!r}")
        return DC2GPlanner(est, palette, cfg)
    raise ValueError(f"unknown planner {label!r}")


def run_world(config: BenchmarkConfig, world_idx: int) -> list[BenchmarkRow]:
    """All rows for one world: every planner on identical (start, world) pairs."""
    palette = Palette.default()
    cfg = config.sensor()
    seed = config.world_seed_base + world_idx
    world, goal = generate_world(
        WorldSpec(seed=seed, height=config.world_dims[0], width=config.world_dims[1]), palette
    )
    world_id = f"w{seed:04d}"
    starts = sample_starts(world, palette, config.starts_per_world, f"bench:{config.seed}:starts:{world_idx}")
    reference = OraclePlanner(world, palette, goal)
    oracle_steps = [len(reference.plan_from(p).actions) for p in starts]

    rows = []
    for label in config.planners:
        planner_name, _, estimator_name = label.partition(":")
        for start_idx, start in enumerate(starts):
            planner = None
            try:
                planner = _make_planner(label, world, palette, goal, cfg, config.bridge_cmd)
                result = run_episode(world, palette, goal, start, planner, cfg, config.max_steps)
                status = result.status.value
                steps = result.steps
            except Dc2gError:
                status = EpisodeStatus.ERROR.value
                steps = 0
            finally:
                closer = getattr(getattr(planner, "estimator", None), "close", None)
                if closer:
                    closer()
            extra = None
            if status == EpisodeStatus.REACHED_GOAL.value:
                extra = extra_time_pct(steps, oracle_steps[start_idx])
            rows.append(
                BenchmarkRow(
                    world=world_id,
                    planner=planner_name,
                    estimator=estimator_name,
                    start_row=start.row,
                    start_col=start.col,
                    start_heading=start.heading.letter,
                    steps=steps,
                    oracle_steps=oracle_steps[start_idx],
                    extra_pct=extra,
                    status=status,
                )
            )
    return rows


def run_benchmark(config: BenchmarkConfig) -> tuple[list[BenchmarkRow], dict]:
    indices = list(range(config.worlds))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_world = list(pool.map(_run_world_task, [(config, i) for i in indices]))
    else:
        per_world = [run_world(config, i) for i in indices]
    rows = [row for world_rows in per_world for row in world_rows]
    return rows, summarize(rows)


def _run_world_task(args):
    config, idx = args
    return run_world(config, idx)


def summarize(rows: list[BenchmarkRow]) -> dict:
    labels = sorted({r.label() for r in rows})
    summary = {}
    for label in labels:
        mine = [r for r in rows if r.label() == label]
        reached = [r.extra_pct for r in mine if r.status == EpisodeStatus.REACHED_GOAL.value]
        summary[label] = {
            "mean_extra_pct": float(statistics.fmean(reached)) if reached else None,
            "median_extra_pct": float(statistics.median(reached)) if reached else None,
            "success_rate": len(reached) / len(mine) if mine else 0.0,
        }
    return summary


def write_csv(rows: list[BenchmarkRow], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.world,
                    r.planner,
                    r.estimator,
                    r.start_row,
                    r.start_col,
                    r.start_heading,
                    r.steps,
                    r.oracle_steps,
                    "" if r.extra_pct is None else repr(r.extra_pct),
                    r.status,
                ]
            )


def write_summary(summary: dict, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
