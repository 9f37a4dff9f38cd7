"""Ground-truth cost-to-go fields and their image encoding.

The cost-to-go of a cell is its 4-connected unit-cost shortest-path distance
to the goal over traversable cells. Fields render to a tri-modal RGB image:
grayscale on reachable cells (lighter closer to the goal), pure red on cells
that cannot be used (untraversable, or traversable but cut off), and black
reserved for unobserved cells introduced by masking.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from dc2g.errors import DimensionMismatch, GoalNotTraversable, NoFiniteCells
from dc2g.semantic import Palette, SemanticGrid, resize_nearest, saturation_value

UNREACHABLE = -1
UNTRAVERSABLE = -2

RED = np.array([255, 0, 0], dtype=np.uint8)

# Saturation at or above this marks a pixel as non-grayscale, i.e. not usable
# as a cost-to-go score (matches the traversability classification threshold).
GRAY_SATURATION_MAX = 0.3


@dataclass
class CostField:
    """Per-cell distance to goal; negative sentinels mark unusable cells."""

    dist: np.ndarray

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=np.int32)

    @property
    def height(self) -> int:
        return self.dist.shape[0]

    @property
    def width(self) -> int:
        return self.dist.shape[1]

    def finite_mask(self) -> np.ndarray:
        return self.dist >= 0


def traversable_mask(grid: SemanticGrid, palette: Palette) -> np.ndarray:
    """(H, W) bool, true where the cell's class is traversable (unobserved is not)."""
    return palette.traversable_table()[grid.cells]


def dijkstra_cost_to_go(traversable: np.ndarray, goal: tuple[int, int]) -> CostField:
    """Shortest-path steps from every traversable cell to the goal.

    4-connected, unit edge cost. Traversable cells with no path to the goal
    get UNREACHABLE; non-traversable cells get UNTRAVERSABLE.
    """
    tr = np.asarray(traversable, dtype=bool)
    h, w = tr.shape
    gr, gc = int(goal[0]), int(goal[1])
    if not (0 <= gr < h and 0 <= gc < w) or not tr[gr, gc]:
        raise GoalNotTraversable(f"goal cell {goal} is not traversable")

    dist = np.full((h, w), UNREACHABLE, dtype=np.int32)
    dist[~tr] = UNTRAVERSABLE
    flat_tr = tr.ravel()
    flat_dist = dist.ravel()
    start = gr * w + gc
    flat_dist[start] = 0
    heap = [(0, start)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > flat_dist[u]:
            continue
        r, c = divmod(u, w)
        nd = d + 1
        if r > 0:
            v = u - w
            if flat_tr[v] and (flat_dist[v] < 0 or nd < flat_dist[v]):
                flat_dist[v] = nd
                heapq.heappush(heap, (nd, v))
        if r < h - 1:
            v = u + w
            if flat_tr[v] and (flat_dist[v] < 0 or nd < flat_dist[v]):
                flat_dist[v] = nd
                heapq.heappush(heap, (nd, v))
        if c > 0:
            v = u - 1
            if flat_tr[v] and (flat_dist[v] < 0 or nd < flat_dist[v]):
                flat_dist[v] = nd
                heapq.heappush(heap, (nd, v))
        if c < w - 1:
            v = u + 1
            if flat_tr[v] and (flat_dist[v] < 0 or nd < flat_dist[v]):
                flat_dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return CostField(dist)


def encode_c2g(field: CostField) -> np.ndarray:
    """Render a cost field as an (H, W, 3) uint8 image.

    Finite distance d maps to gray round(255 * (1 - d / (d_max + 1))) with
    half-away-from-zero rounding, so the farthest reachable cell stays
    strictly brighter than black. Unusable cells render pure red.
    """
    finite = field.finite_mask()
    if not finite.any():
        raise NoFiniteCells("cost field has no finite cells to encode")
    d_max = int(field.dist[finite].max())
    # integer numerator keeps exact .5 cases exact, so the half-away-from-zero
    # rounding cannot be tipped by float error
    scaled = (255.0 * (d_max + 1 - field.dist.astype(np.float64))) / (d_max + 1.0)
    gray = np.floor(scaled + 0.5).astype(np.uint8)
    img = np.empty(field.dist.shape + (3,), dtype=np.uint8)
    img[...] = RED
    img[finite] = gray[finite, None]
    return img


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Keep pixels where the mask bit is set; zero (black) elsewhere."""
    mask = np.asarray(mask, dtype=bool)
    if img.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {img.shape[:2]} vs mask {mask.shape}")
    out = img.copy()
    out[~mask] = 0
    return out


def decode_c2g(img: np.ndarray, grid_w: int, grid_h: int) -> np.ndarray:
    """Turn an estimated cost-to-go image into per-cell planner scores.

    Resizes to (grid_h, grid_w) with nearest-neighbor sampling, then keeps the
    HSV value of grayscale pixels as the score; pixels with saturation >=
    GRAY_SATURATION_MAX (e.g. red) are filtered and come back as NaN.
    """
    small = resize_nearest(img, grid_w, grid_h)
    s, v = saturation_value(small)
    scores = v.copy()
    scores[s >= GRAY_SATURATION_MAX] = np.nan
    return scores
