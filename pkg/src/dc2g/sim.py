"""Gridworld agent model: discrete pose, 3-action dynamics, wedge sensor, belief map.

The sensor reveals every cell whose center lies within `range` cells of the
agent (Euclidean) and within fov/2 of the heading direction, with both
boundaries inclusive and no occlusion. The agent's own cell is always
visible. The belief map accumulates everything seen since episode start.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from dc2g.semantic import Palette, SemanticGrid


class Heading(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3

    @property
    def vector(self) -> tuple[int, int]:
        return _HEAD_VEC[self]

    @property
    def letter(self) -> str:
        return self.name

    @staticmethod
    def from_letter(letter: str) -> "Heading":
        return Heading[letter.upper()]


_HEAD_VEC = {Heading.N: (-1, 0), Heading.E: (0, 1), Heading.S: (1, 0), Heading.W: (0, -1)}


class PlannerAction(Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"


class Pose(NamedTuple):
    row: int
    col: int
    heading: Heading


@dataclass(frozen=True)
class SensorConfig:
    fov: float = 90.0
    range: int = 8

    def __post_init__(self):
        if not (0 < self.fov <= 360):
            raise ValueError("fov must be in (0, 360]")
        if self.range < 1:
            raise ValueError("range must be >= 1")


def _angle_ok(fov: float, hdr: int, hdc: int, dr: int, dc: int) -> bool:
    # Exact integer tests for the inclusive angle <= fov/2 predicate at the
    # fovs the 4-heading gridworld can produce boundary ties for; floats
    # elsewhere.
    dot = hdr * dr + hdc * dc
    cross = hdr * dc - hdc * dr
    if fov >= 360.0:
        return True
    if fov == 180.0:
        return dot >= 0
    if fov == 90.0:
        return dot >= 0 and cross * cross <= dot * dot
    if fov == 270.0:
        return dot >= 0 or cross * cross >= dot * dot
    half = math.radians(fov) / 2.0
    norm = math.sqrt(dr * dr + dc * dc)
    return dot >= norm * math.cos(half) - 1e-12


@lru_cache(maxsize=None)
def wedge_offsets(heading: Heading, fov: float, range_cells: int) -> tuple[np.ndarray, np.ndarray]:
    """(dr, dc) offset arrays of all cells visible under the given heading."""
    hdr, hdc = _HEAD_VEC[heading]
    rr, cc = [], []
    r2 = range_cells * range_cells
    for dr in range(-range_cells, range_cells + 1):
        for dc in range(-range_cells, range_cells + 1):
            if dr == 0 and dc == 0:
                rr.append(dr)
                cc.append(dc)
                continue
            if dr * dr + dc * dc > r2:
                continue
            if _angle_ok(fov, hdr, hdc, dr, dc):
                rr.append(dr)
                cc.append(dc)
    return np.array(rr, dtype=np.int64), np.array(cc, dtype=np.int64)


@lru_cache(maxsize=None)
def sweep_footprint(fov: float, range_cells: int) -> np.ndarray:
    """Union of the four heading wedges as a centered (2R+1)^2 bool stamp.

    A cell is in the stamp iff it is visible from the center under some
    heading; for fov >= 90 this is the whole Euclidean disk.
    """
    size = 2 * range_cells + 1
    stamp = np.zeros((size, size), dtype=bool)
    for heading in Heading:
        rr, cc = wedge_offsets(heading, fov, range_cells)
        stamp[rr + range_cells, cc + range_cells] = True
    return stamp


@lru_cache(maxsize=None)
def sweep_offsets(fov: float, range_cells: int) -> tuple[np.ndarray, np.ndarray]:
    """(dr, dc) offsets of the sweep footprint, for stamping visibility unions."""
    stamp = sweep_footprint(fov, range_cells)
    rr, cc = np.nonzero(stamp)
    return rr - range_cells, cc - range_cells


def visible_cells(pose: Pose, cfg: SensorConfig, dims: tuple[int, int]) -> set[tuple[int, int]]:
    """In-bounds cells the sensor reveals from the given pose."""
    rr, cc = visible_arrays(pose, cfg, dims)
    return {(int(r), int(c)) for r, c in zip(rr, cc)}


def visible_arrays(pose: Pose, cfg: SensorConfig, dims: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    h, w = dims
    rr, cc = wedge_offsets(pose.heading, cfg.fov, cfg.range)
    rr = rr + pose.row
    cc = cc + pose.col
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    return rr[keep], cc[keep]


def step(world: SemanticGrid, palette: Palette, pose: Pose, action: PlannerAction) -> Pose:
    """Apply one action; a blocked or out-of-bounds Forward is a silent no-op."""
    if action is PlannerAction.TURN_LEFT:
        return Pose(pose.row, pose.col, Heading((pose.heading - 1) % 4))
    if action is PlannerAction.TURN_RIGHT:
        return Pose(pose.row, pose.col, Heading((pose.heading + 1) % 4))
    dr, dc = pose.heading.vector
    nr, nc = pose.row + dr, pose.col + dc
    if 0 <= nr < world.height and 0 <= nc < world.width:
        if palette.classes[world.cells[nr, nc]].traversable:
            return Pose(nr, nc, pose.heading)
    return pose


def new_belief(dims: tuple[int, int], palette: Palette) -> SemanticGrid:
    """All-unobserved belief map."""
    h, w = dims
    return SemanticGrid(np.full((h, w), palette.unobserved_id, dtype=np.uint8))


def observe(world: SemanticGrid, belief: SemanticGrid, pose: Pose, cfg: SensorConfig) -> SemanticGrid:
    """Overwrite every visible belief cell with the true world class (in place)."""
    rr, cc = visible_arrays(pose, cfg, (world.height, world.width))
    belief.cells[rr, cc] = world.cells[rr, cc]
    return belief


def observed_mask(belief: SemanticGrid, palette: Palette) -> np.ndarray:
    return belief.cells != palette.unobserved_id


class TraceWriter:
    """JSON-lines episode trace: one record per simulation step."""

    def __init__(self, path):
        self._fh = open(path, "w")

    def record(self, t, pose: Pose, action, subgoal, frontier_count, observed_count):
        rec = {
            "t": t,
            "pose": [pose.row, pose.col, pose.heading.letter],
            "action": action.value if action is not None else None,
            "subgoal": list(subgoal) if subgoal is not None else None,
            "frontier_count": frontier_count,
            "observed_count": observed_count,
        }
        self._fh.write(json.dumps(rec) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
