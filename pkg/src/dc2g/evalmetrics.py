"""Pixel metrics, map-similarity scoring, and the planner time metric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.cluster import KMeans

from dc2g.errors import DimensionMismatch, TooFewBlocks, ZeroOracle
from dc2g.semantic import Palette, SemanticGrid, saturation_value

VOCAB_SIZE = 20


@dataclass(frozen=True)
class PixelClassTask:
    """Binary pixel classification by an HSV predicate."""

    name: str
    predicate: Callable[[np.ndarray, np.ndarray], np.ndarray]


# traversable: grayscale enough. low cost-to-go: grayscale and bright.
TRAVERSABLE_TASK = PixelClassTask("traversable", lambda s, v: s < 0.3)
LOW_C2G_TASK = PixelClassTask("low_c2g", lambda s, v: (v > 0.9) & (s < 0.3))


def pixel_l1(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean per-pixel, per-channel absolute error, normalized to [0, 1]."""
    if pred.shape != target.shape:
        raise DimensionMismatch(f"{pred.shape} vs {target.shape}")
    diff = np.abs(pred.astype(np.float64) - target.astype(np.float64))
    return float(diff.mean() / 255.0)


def classify_pixels(img: np.ndarray, task: PixelClassTask) -> np.ndarray:
    s, v = saturation_value(img)
    return task.predicate(s, v)


def precision_recall(pred: np.ndarray, truth: np.ndarray) -> tuple[float | None, float | None]:
    """(precision, recall); None where the denominator is empty."""
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"{pred.shape} vs {truth.shape}")
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    return precision, recall


def extra_time_pct(steps: int, oracle_steps: int) -> float:
    """Percent of extra steps beyond the full-prior-map optimum."""
    if oracle_steps < 1:
        raise ZeroOracle("oracle step count must be >= 1")
    return (steps - oracle_steps) / oracle_steps * 100.0


@dataclass
class SimilarityModel:
    """Bag-of-words over per-block terrain histograms."""

    block: int
    vocabulary: np.ndarray  # (VOCAB_SIZE, n_classes) centroid histograms
    train_hists: np.ndarray  # (n_maps, VOCAB_SIZE), rows sum to 1
    _kmeans: KMeans


def _block_histograms(grid: SemanticGrid, n_classes: int, block: int) -> np.ndarray:
    feats = []
    for r0 in range(0, grid.height, block):
        for c0 in range(0, grid.width, block):
            tile = grid.cells[r0 : r0 + block, c0 : c0 + block]
            hist = np.bincount(tile.ravel(), minlength=n_classes).astype(np.float64)
            feats.append(hist / hist.sum())
    return np.array(feats)


def _word_histogram(kmeans: KMeans, feats: np.ndarray) -> np.ndarray:
    words = kmeans.predict(feats)
    hist = np.bincount(words, minlength=VOCAB_SIZE).astype(np.float64)
    return hist / hist.sum()


def build_similarity_model(
    train_maps: list[SemanticGrid], palette: Palette, block: int = 8, seed: int = 0
) -> SimilarityModel:
    """Cluster per-block terrain histograms into a 20-word vocabulary."""
    n_classes = len(palette)
    per_map = [_block_histograms(m, n_classes, block) for m in train_maps]
    all_feats = np.vstack(per_map) if per_map else np.empty((0, n_classes))
    if all_feats.shape[0] < VOCAB_SIZE:
        raise TooFewBlocks(f"{all_feats.shape[0]} blocks < vocabulary size {VOCAB_SIZE}")
    kmeans = KMeans(n_clusters=VOCAB_SIZE, n_init=5, max_iter=50, random_state=seed)
    kmeans.fit(all_feats)
    train_hists = np.array([_word_histogram(kmeans, feats) for feats in per_map])
    return SimilarityModel(block=block, vocabulary=kmeans.cluster_centers_, train_hists=train_hists, _kmeans=kmeans)


def similarity_score(model: SimilarityModel, test_map: SemanticGrid, palette: Palette) -> float:
    """Distance in [0, 1] to the closest training map; 0 means most similar."""
    feats = _block_histograms(test_map, len(palette), model.block)
    hist = _word_histogram(model._kmeans, feats)
    l1 = np.abs(model.train_hists - hist).sum(axis=1)
    return float(l1.min() / 2.0)
