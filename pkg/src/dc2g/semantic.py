"""Terrain palette, semantic grids, PNG round-tripping, and shared image ops.

A semantic map is an HxW grid of terrain-class ids backed by a palette that
maps each class to a unique RGB color. The class named "unobserved" is the
distinguished black class used for cells an agent has not yet seen.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from PIL import Image, UnidentifiedImageError

from dc2g._kernels import gather_rgb
from dc2g.errors import DimensionMismatch, MalformedPng, UnknownColor


@dataclass(frozen=True)
class TerrainClass:
    id: int
    name: str
    color: tuple[int, int, int]
    traversable: bool


@dataclass(frozen=True)
class Palette:
    """Ordered terrain classes with bijective id<->color lookup."""

    classes: tuple[TerrainClass, ...]
    _by_color: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = [c.id for c in self.classes]
        if ids != list(range(len(self.classes))):
            raise ValueError("class ids must be contiguous from 0 and in order")
        colors = [c.color for c in self.classes]
        if len(set(colors)) != len(colors):
            raise ValueError("palette colors must be pairwise distinct")
        goals = [c for c in self.classes if c.name == "goal"]
        if len(goals) != 1 or not goals[0].traversable:
            raise ValueError("palette needs exactly one traversable 'goal' class")
        unseen = [c for c in self.classes if c.name == "unobserved"]
        if len(unseen) != 1 or unseen[0].color != (0, 0, 0) or unseen[0].traversable:
            raise ValueError("palette needs exactly one non-traversable black 'unobserved' class")
        object.__setattr__(self, "_by_color", {c.color: c.id for c in self.classes})
        object.__setattr__(self, "_color_tab", np.array([c.color for c in self.classes], dtype=np.uint8))
        object.__setattr__(self, "_trav_tab", np.array([c.traversable for c in self.classes], dtype=bool))

    def __len__(self):
        return len(self.classes)

    def by_name(self, name: str) -> TerrainClass:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def goal_id(self) -> int:
        return self.by_name("goal").id

    @property
    def unobserved_id(self) -> int:
        return self.by_name("unobserved").id

    def id_for_color(self, color: tuple[int, int, int]) -> int | None:
        return self._by_color.get(tuple(color))

    def color_table(self) -> np.ndarray:
        """(n_classes, 3) uint8 table indexed by class id."""
        return self._color_tab

    def traversable_table(self) -> np.ndarray:
        """(n_classes,) bool table indexed by class id."""
        return self._trav_tab

    @staticmethod
    def from_json(text: str) -> "Palette":
        spec = json.loads(text)
        classes = tuple(
            TerrainClass(int(c["id"]), c["name"], tuple(int(v) for v in c["color"]), bool(c["traversable"]))
            for c in spec["classes"]
        )
        return Palette(classes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "classes": [
                    {"id": c.id, "name": c.name, "color": list(c.color), "traversable": c.traversable}
                    for c in self.classes
                ]
            },
            indent=2,
        )

    @staticmethod
    def default() -> "Palette":
        text = resources.files("dc2g").joinpath("data/palette.json").read_text()
        return Palette.from_json(text)


@dataclass
class SemanticGrid:
    """HxW grid of terrain-class ids (row-major, uint8)."""

    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2 or self.cells.shape[0] < 1 or self.cells.shape[1] < 1:
            raise ValueError("grid must be 2-D with positive dimensions")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def copy(self) -> "SemanticGrid":
        return SemanticGrid(self.cells.copy())

    def to_rgb(self, palette: Palette) -> np.ndarray:
        """Render to an (H, W, 3) uint8 image using the palette colors."""
        return palette.color_table()[self.cells]


def load_semantic_png(data: bytes, palette: Palette) -> SemanticGrid:
    """Decode an 8-bit RGB PNG whose every pixel color is a palette color.

    Raises UnknownColor at the first (row-major) pixel whose color is not in
    the palette, and MalformedPng when the bytes do not decode as RGB PNG.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode != "RGB":
                raise MalformedPng(f"expected 8-bit RGB image, got mode {im.mode!r}")
            rgb = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedPng(str(exc)) from exc
    return grid_from_rgb(rgb, palette)


def grid_from_rgb(rgb: np.ndarray, palette: Palette) -> SemanticGrid:
    """Map an (H, W, 3) uint8 image to class ids, pixel color must match exactly."""
    keys = _pack_colors(rgb)
    table = palette.color_table()
    pal_keys = _pack_colors(table.reshape(1, -1, 3)).ravel()
    order = np.argsort(pal_keys)
    sorted_keys = pal_keys[order]
    idx = np.searchsorted(sorted_keys, keys)
    idx = np.clip(idx, 0, len(sorted_keys) - 1)
    matched = sorted_keys[idx] == keys
    if not matched.all():
        r, c = np.argwhere(~matched)[0]
        raise UnknownColor(int(r), int(c), rgb[r, c])
    return SemanticGrid(order[idx].astype(np.uint8))


def save_semantic_png(grid: SemanticGrid, palette: Palette) -> bytes:
    """Encode a semantic grid as an 8-bit RGB PNG (lossless inverse of load)."""
    return rgb_to_png_bytes(grid.to_rgb(palette))


def rgb_to_png_bytes(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_rgb(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode != "RGB":
                raise MalformedPng(f"expected 8-bit RGB image, got mode {im.mode!r}")
            return np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedPng(str(exc)) from exc


def _pack_colors(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.uint32)
    return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def rgb_to_hsv(rgb) -> tuple[float, float, float]:
    """Standard hexcone HSV: h in degrees [0, 360), s and v in [0, 1].

    Gray pixels (r==g==b) have saturation exactly 0; black is (0, 0, 0).
    """
    r, g, b = (float(v) / 255.0 for v in rgb)
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx
    s = 0.0 if mx == 0.0 else delta / mx
    if delta == 0.0:
        h = 0.0
    elif mx == r:
        h = 60.0 * (((g - b) / delta) % 6.0)
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    return h % 360.0, s, v


def saturation_value(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (s, v) channels for an (..., 3) uint8 image."""
    arr = rgb.astype(np.float64) / 255.0
    mx = arr.max(axis=-1)
    mn = arr.min(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(mx > 0.0, (mx - mn) / mx, 0.0)
    return s, mx


@lru_cache(maxsize=256)
def nearest_index_map(src: int, dst: int) -> np.ndarray:
    """Pixel-center nearest-neighbor source indices for resizing src -> dst."""
    d = np.arange(dst, dtype=np.int64)
    return (2 * d + 1) * src // (2 * dst)


def resize_nearest(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Nearest-neighbor resize with pixel-center sampling; introduces no new colors."""
    if out_w < 1 or out_h < 1:
        raise DimensionMismatch("output dimensions must be positive")
    h, w = img.shape[:2]
    rows = nearest_index_map(h, out_h)
    cols = nearest_index_map(w, out_w)
    if img.ndim == 3 and img.dtype == np.uint8 and img.shape[2] == 3:
        return gather_rgb(img, rows, cols)
    return img[np.ix_(rows, cols)]
