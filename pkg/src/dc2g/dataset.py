"""Procedural suburban worlds, observation masks, and training-pair emission.

Worlds follow a fixed front-yard topology: a road band along the bottom, an
optional sidewalk, a grass yard, a house block whose door is the goal, and a
walkway + driveway column connecting the door to the road. Every generated
world is solvable from any road cell by construction.

Training pairs are (masked semantic map, masked cost-to-go) PNGs in the
layout ``out/{split}/{world}_{mask}_map.png|_c2g.png`` plus a manifest.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dc2g.costmap import apply_mask, dijkstra_cost_to_go, encode_c2g, traversable_mask
from dc2g.errors import InfeasibleLayout, NoTraversableCells
from dc2g.semantic import Palette, SemanticGrid, resize_nearest, rgb_to_png_bytes
from dc2g.sim import Heading, Pose, SensorConfig, visible_arrays


@dataclass(frozen=True)
class WorldSpec:
    seed: int
    height: int = 50
    width: int = 50
    # optional layout overrides; None means seed-driven within derived ranges
    road_rows: int | None = None
    house_h_range: tuple[int, int] | None = None
    house_w_range: tuple[int, int] | None = None
    walkway_range: tuple[int, int] | None = None
    driveway_col: int | None = None


@dataclass(frozen=True)
class MaskSpec:
    seed: int
    sweep_count: int
    sensor: SensorConfig = SensorConfig()

    def __post_init__(self):
        if self.sweep_count < 0:
            raise ValueError("sweep_count must be >= 0")


def generate_world(spec: WorldSpec, palette: Palette | None = None) -> tuple[SemanticGrid, tuple[int, int]]:
    """Deterministic world for the given spec; returns (grid, goal cell).

    The 5x5 layout collapses every random range to a single choice, which
    pins the canonical tiny fixture used throughout the tests.
    """
    palette = palette or Palette.default()
    h, w = spec.height, spec.width
    if h < 5 or w < 5:
        raise InfeasibleLayout(f"need at least 5x5 cells, got {h}x{w}")
    rng = random.Random(f"world:{spec.seed}")

    road_h = spec.road_rows if spec.road_rows is not None else max(1, h // 12)
    road_top = h - road_h
    sidewalk_row = road_top - 1 if h >= 12 else None
    yard_bottom = (sidewalk_row - 1) if sidewalk_row is not None else road_top - 1
    # keep the door at least min_gap rows off the road so the goal never
    # shows up in the first sweep from the curb
    min_gap = max(2, min(12, yard_bottom // 3))

    lo, hi = spec.house_h_range if spec.house_h_range else (2, max(2, h // 4))
    if lo > min(hi, yard_bottom - min_gap + 1):
        raise InfeasibleLayout(f"no feasible house height in {h}x{w}")
    house_h = rng.randint(lo, min(hi, yard_bottom - min_gap + 1))
    lo, hi = spec.house_w_range if spec.house_w_range else (3, max(3, min(w - 2, w // 2)))
    if lo > min(hi, w - 2):
        raise InfeasibleLayout(f"no feasible house width in {h}x{w}")
    house_w = rng.randint(lo, min(hi, w - 2))
    house_top = rng.randint(0, yard_bottom - min_gap - house_h + 1)
    house_bottom = house_top + house_h - 1
    house_left = rng.randint(1, w - 1 - house_w)
    if spec.driveway_col is not None:
        door_col = spec.driveway_col
        if not (house_left + 1 <= door_col <= house_left + house_w - 2):
            raise InfeasibleLayout(f"driveway column {door_col} outside the house footprint")
    else:
        door_col = rng.randint(house_left + 1, house_left + house_w - 2)
    gap = yard_bottom - house_bottom
    lo, hi = spec.walkway_range if spec.walkway_range else (1, gap - 1)
    if lo > min(hi, gap - 1):
        raise InfeasibleLayout(f"no feasible walkway length in {h}x{w}")
    walkway_len = rng.randint(lo, min(hi, gap - 1))

    ids = {name: palette.by_name(name).id for name in ("road", "driveway", "sidewalk", "walkway", "grass", "house", "goal")}
    cells = np.full((h, w), ids["grass"], dtype=np.uint8)
    cells[road_top:, :] = ids["road"]
    if sidewalk_row is not None:
        cells[sidewalk_row, :] = ids["sidewalk"]
    cells[house_top : house_bottom + 1, house_left : house_left + house_w] = ids["house"]
    cells[house_bottom + 1 : house_bottom + 1 + walkway_len, door_col] = ids["walkway"]
    cells[house_bottom + 1 + walkway_len : road_top, door_col] = ids["driveway"]
    goal = (house_bottom, door_col)
    cells[goal] = ids["goal"]

    # Decoy driveways: dead-end curb cuts that lead nowhere. Pure exploration
    # has to inspect them; a context-aware planner can skip them.
    if h >= 20 and w >= 20:
        used = {door_col}
        for _ in range(rng.randint(1, max(1, w // 12))):
            col = rng.randint(1, w - 2)
            if any(abs(col - u) < 2 for u in used):
                continue
            top_limit = house_bottom + 1 if house_left - 1 <= col <= house_left + house_w else 2
            max_len = yard_bottom - top_limit + 1
            if max_len < 3:
                continue
            length = rng.randint(3, max_len)
            cells[yard_bottom - length + 1 : road_top, col] = ids["driveway"]
            used.add(col)
    return SemanticGrid(cells), goal


def seal_world(world: SemanticGrid, palette: Palette) -> SemanticGrid:
    """Cut the goal off: driveway and walkway become grass."""
    sealed = world.copy()
    for name in ("driveway", "walkway"):
        sealed.cells[sealed.cells == palette.by_name(name).id] = palette.by_name("grass").id
    return sealed


def generate_mask(world: SemanticGrid, palette: Palette, spec: MaskSpec) -> np.ndarray:
    """Union of sensor sweeps along a traversable random walk.

    sweep_count == 0 yields the all-true (fully observed) mask. Walks with a
    shared seed share their pose prefix, so masks grow monotonically with
    sweep_count.
    """
    h, w = world.height, world.width
    if spec.sweep_count == 0:
        return np.ones((h, w), dtype=bool)
    tr = traversable_mask(world, palette)
    cells = np.argwhere(tr)
    if len(cells) == 0:
        raise NoTraversableCells("world has no traversable cells to walk on")
    rng = random.Random(f"mask:{spec.seed}")
    r, c = (int(v) for v in cells[rng.randrange(len(cells))])
    heading = Heading(rng.randrange(4))
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(spec.sweep_count):
        rr, cc = visible_arrays(Pose(r, c, heading), spec.sensor, (h, w))
        mask[rr, cc] = True
        moves = []
        for hd in Heading:
            dr, dc = hd.vector
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and tr[nr, nc]:
                moves.append((nr, nc, hd))
        if moves:
            r, c, heading = moves[rng.randrange(len(moves))]
        else:
            heading = Heading(rng.randrange(4))
    return mask


@dataclass
class TrainingPair:
    input_path: str
    target_path: str
    world: str
    mask: str
    goal: tuple[int, int]


def build_training_set(
    worlds: list[tuple[SemanticGrid, tuple[int, int]]],
    masks_per_world: int,
    out_dir,
    palette: Palette | None = None,
    sensor: SensorConfig = SensorConfig(),
    seed: int = 0,
    sweeps_max: int = 24,
    render_size: int = 256,
    split_assign: list[str] | None = None,
) -> dict:
    """Emit |worlds| x masks_per_world training pairs plus manifest.json.

    Mask 0 of each world is the fully observed map; the rest use seeded
    random sweep walks. Pair PNGs are upscaled to render_size with
    nearest-neighbor so cell boundaries stay crisp.
    """
    palette = palette or Palette.default()
    out = Path(out_dir)
    splits = split_assign or ["train"] * len(worlds)
    pairs = []
    for i, (world, goal) in enumerate(worlds):
        world_id = f"w{i:04d}"
        split = splits[i]
        (out / split).mkdir(parents=True, exist_ok=True)
        world_img = world.to_rgb(palette)
        c2g_img = encode_c2g(dijkstra_cost_to_go(traversable_mask(world, palette), goal))
        for j in range(masks_per_world):
            mask_id = f"m{j:03d}"
            if j == 0:
                sweeps = 0
            else:
                sweeps = random.Random(f"sweeps:{seed}:{i}:{j}").randint(1, sweeps_max)
            mask_seed = random.Random(f"maskseed:{seed}:{i}:{j}").randrange(2**31)
            mask = generate_mask(world, palette, MaskSpec(seed=mask_seed, sweep_count=sweeps, sensor=sensor))
            masked_map = apply_mask(world_img, mask)
            masked_c2g = apply_mask(c2g_img, mask)
            if render_size and (world.width, world.height) != (render_size, render_size):
                masked_map = resize_nearest(masked_map, render_size, render_size)
                masked_c2g = resize_nearest(masked_c2g, render_size, render_size)
            rel_in = f"{split}/{world_id}_{mask_id}_map.png"
            rel_out = f"{split}/{world_id}_{mask_id}_c2g.png"
            (out / rel_in).write_bytes(rgb_to_png_bytes(masked_map))
            (out / rel_out).write_bytes(rgb_to_png_bytes(masked_c2g))
            pairs.append(
                {
                    "input": rel_in,
                    "target": rel_out,
                    "world": world_id,
                    "mask": mask_id,
                    "goal": [int(goal[0]), int(goal[1])],
                }
            )
    (out / "palette.json").write_text(palette.to_json())
    manifest = {
        "pairs": pairs,
        "palette": "palette.json",
        "render_size": render_size,
        "native_dims": [worlds[0][0].height, worlds[0][0].width] if worlds else None,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def split_counts(n_worlds: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    train = round(n_worlds * fractions[0])
    val = round(n_worlds * fractions[1])
    train = min(train, n_worlds)
    val = min(val, n_worlds - train)
    return train, val, n_worlds - train - val


def gen_data(
    out_dir,
    n_worlds: int,
    masks_per_world: int,
    dims: tuple[int, int] = (50, 50),
    seed: int = 0,
    split: tuple[float, float, float] = (0.8, 0.1, 0.1),
    palette: Palette | None = None,
    sensor: SensorConfig = SensorConfig(),
    sweeps_max: int = 24,
    render_size: int = 256,
) -> dict:
    """Generate worlds, split them train/val/test, and emit the dataset."""
    palette = palette or Palette.default()
    worlds = [generate_world(WorldSpec(seed=seed + i, height=dims[0], width=dims[1]), palette) for i in range(n_worlds)]
    n_train, n_val, _ = split_counts(n_worlds, split)
    assign = ["train"] * n_train + ["val"] * n_val + ["test"] * (n_worlds - n_train - n_val)
    return build_training_set(
        worlds,
        masks_per_world,
        out_dir,
        palette=palette,
        sensor=sensor,
        seed=seed,
        sweeps_max=sweeps_max,
        render_size=render_size,
        split_assign=assign,
    )
