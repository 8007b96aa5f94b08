"""Minority-class rebalancing by SMOTE interpolation.

Synthetic rows are x_new = x + lambda * (x_nn - x) with lambda drawn
uniformly from [0, 1); x cycles round-robin over the minority rows in
index order and x_nn is chosen uniformly among x's k nearest minority
neighbors (Euclidean distance, ties broken by lower row index).  The draw
order per synthetic row is fixed: first the neighbor position
(rng.integers(k)), then lambda (rng.uniform()), so any output replays
exactly from the seed.  Generation stops at class parity; original rows
are retained untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_X_y

PROVENANCE_REAL = "real"
PROVENANCE_SYNTHETIC = "synthetic"


@dataclass
class FeatureDataset:
    """Index-aligned feature rows, binary labels, and row provenance."""

    X: np.ndarray
    y: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=int)
        self.provenance = np.asarray(self.provenance, dtype=object)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D row matrix")
        if len(self.y) != len(self.X) or len(self.provenance) != len(self.X):
            raise ValueError("X, y, and provenance must be index-aligned")

    @classmethod
    def from_arrays(cls, X, y) -> "FeatureDataset":
        X = np.asarray(X, dtype=np.float64)
        return cls(X=X, y=y, provenance=np.full(len(X), PROVENANCE_REAL,
                                                dtype=object))


def knn_minority(X_min: np.ndarray, i: int, k: int) -> np.ndarray:
    """Indices of the k nearest rows to row i, excluding i itself.

    Euclidean distance; equal distances resolve to the lower row index.
    """
    X_min = np.asarray(X_min, dtype=np.float64)
    n = len(X_min)
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < minority count, got k={k}, count={n}")
    if not 0 <= i < n:
        raise ValueError(f"row index {i} out of range")
    distances = cdist(X_min[i:i + 1], X_min)[0]
    distances[i] = np.inf
    order = np.argsort(distances, kind="stable")  # stable sort = lower index wins ties
    return order[:k]


def _neighbor_table(X_min: np.ndarray, k: int) -> np.ndarray:
    distances = cdist(X_min, X_min)
    np.fill_diagonal(distances, np.inf)
    return np.argsort(distances, axis=1, kind="stable")[:, :k]


def _interpolate(x: np.ndarray, x_nn: np.ndarray, lam: float) -> np.ndarray:
    return x + lam * (x_nn - x)


def smote(dataset: FeatureDataset, k: int = 5, seed: int = 0) -> FeatureDataset:
    """Oversample the minority class to exact parity with the majority.

    Returns a new dataset: original rows first (bit-identical), synthetic
    minority rows appended.  Raises on single-class input or when the
    minority class has at most k rows.  Equal class counts return the
    dataset unchanged.
    """
    classes, counts = np.unique(dataset.y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("SMOTE needs both classes present")
    if len(classes) > 2:
        raise ValueError("SMOTE supports binary labels only")
    if counts[0] == counts[1]:
        return FeatureDataset(X=dataset.X.copy(), y=dataset.y.copy(),
                              provenance=dataset.provenance.copy())
    minority = classes[int(np.argmin(counts))]
    need = int(abs(counts[0] - counts[1]))
    X_min = dataset.X[dataset.y == minority]
    if len(X_min) <= k:
        raise ValueError(f"minority class has {len(X_min)} rows; needs more "
                         f"than k={k}")

    neighbors = _neighbor_table(X_min, k)
    rng = np.random.default_rng(seed)
    synthetic = np.empty((need, dataset.X.shape[1]))
    for s in range(need):
        base = s % len(X_min)
        nn = neighbors[base, rng.integers(k)]
        lam = rng.uniform()
        synthetic[s] = _interpolate(X_min[base], X_min[nn], lam)

    return FeatureDataset(
        X=np.vstack([dataset.X, synthetic]),
        y=np.concatenate([dataset.y, np.full(need, minority, dtype=int)]),
        provenance=np.concatenate([dataset.provenance,
                                   np.full(need, PROVENANCE_SYNTHETIC,
                                           dtype=object)]))


class SmoteOversampler(BaseEstimator):
    """Estimator-style wrapper around smote with a fit_resample interface."""

    def __init__(self, k_neighbors: int = 5, random_state: int = 0):
        self.k_neighbors = k_neighbors
        self.random_state = random_state

    def fit_resample(self, X, y) -> tuple[np.ndarray, np.ndarray]:
        X, y = check_X_y(X, y, dtype=np.float64)
        balanced = smote(FeatureDataset.from_arrays(X, y),
                         k=self.k_neighbors, seed=self.random_state)
        return balanced.X, balanced.y
