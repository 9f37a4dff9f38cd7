"""Hot-loop kernels, jitted with numba when available.

Each kernel has identical numpy semantics; the jitted versions only exist to
keep per-step planning cheap at benchmark scale on the 256x256 image path.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a normal install
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


@njit(cache=True)
def _classify_lut_jit(img, a, b, c, lut, out):
    h, w = img.shape[0], img.shape[1]
    for i in range(h):
        for j in range(w):
            key = (img[i, j, 0] * a + img[i, j, 1] * b + img[i, j, 2] * c) % 256
            out[i, j, 0] = lut[key, 0]
            out[i, j, 1] = lut[key, 1]
            out[i, j, 2] = lut[key, 2]


def classify_lut(img: np.ndarray, a: int, b: int, c: int, lut: np.ndarray) -> np.ndarray:
    """Map every pixel through a byte-hash color table."""
    out = np.empty_like(img)
    if HAVE_NUMBA:
        _classify_lut_jit(img, np.int64(a), np.int64(b), np.int64(c), lut, out)
        return out
    key = img[..., 0] * np.uint8(a) + img[..., 1] * np.uint8(b) + img[..., 2] * np.uint8(c)
    return lut[key]


@njit(cache=True)
def _masked_copy_jit(belief, world, c2g, out):
    mismatch = False
    h, w = belief.shape[0], belief.shape[1]
    for i in range(h):
        for j in range(w):
            b0, b1, b2 = belief[i, j, 0], belief[i, j, 1], belief[i, j, 2]
            if b0 == 0 and b1 == 0 and b2 == 0:
                out[i, j, 0] = 0
                out[i, j, 1] = 0
                out[i, j, 2] = 0
            else:
                if b0 != world[i, j, 0] or b1 != world[i, j, 1] or b2 != world[i, j, 2]:
                    mismatch = True
                out[i, j, 0] = c2g[i, j, 0]
                out[i, j, 1] = c2g[i, j, 1]
                out[i, j, 2] = c2g[i, j, 2]
    return mismatch


def masked_copy(belief: np.ndarray, world: np.ndarray, c2g: np.ndarray) -> tuple[np.ndarray, bool]:
    """c2g where the belief pixel is observed (non-black), black elsewhere.

    Also reports whether any observed belief pixel disagrees with the world.
    """
    out = np.empty_like(c2g)
    if HAVE_NUMBA:
        mismatch = _masked_copy_jit(belief, world, c2g, out)
        return out, bool(mismatch)
    observed = belief.any(axis=2)
    mismatch = not ((belief == world).all(axis=2) | ~observed).all()
    out[...] = c2g
    out[~observed] = 0
    return out, mismatch


@njit(cache=True)
def _gather2d_u8_jit(src, rows, cols, out):
    for i in range(rows.shape[0]):
        r = rows[i]
        for j in range(cols.shape[0]):
            c = cols[j]
            out[i, j, 0] = src[r, c, 0]
            out[i, j, 1] = src[r, c, 1]
            out[i, j, 2] = src[r, c, 2]


def gather_rgb(src: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """src[rows][:, cols] for (H, W, 3) uint8 images."""
    if HAVE_NUMBA and src.dtype == np.uint8 and src.ndim == 3:
        out = np.empty((rows.shape[0], cols.shape[0], 3), dtype=np.uint8)
        _gather2d_u8_jit(src, rows, cols, out)
        return out
    return src[np.ix_(rows, cols)]
