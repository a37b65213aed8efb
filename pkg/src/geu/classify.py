"""Brute-force k-nearest-neighbour classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptyModel, LengthMismatch

_CHUNK = 4096


@dataclass(frozen=True)
class KnnModel:
    train_points: np.ndarray
    train_labels: np.ndarray
    k: int = 1

    def __post_init__(self):
        pts = np.asarray(self.train_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        labels = np.asarray(self.train_labels)
        if pts.shape[0] == 0:
            raise EmptyModel("no training points")
        if labels.shape != (pts.shape[0],):
            raise LengthMismatch(f"{labels.shape[0]} labels for {pts.shape[0]} points")
        if not 1 <= self.k <= pts.shape[0]:
            raise ValueError(f"k must be in 1..{pts.shape[0]}, got {self.k}")
        object.__setattr__(self, "train_points", pts)
        object.__setattr__(self, "train_labels", labels)


def knn_predict(model: KnnModel, queries) -> np.ndarray:
    """Majority vote among the ``k`` nearest training points.

    Distance ties go to the smaller training index. Vote ties go to the
    label whose nearest member is closest, then to the smaller label.
    """
    return knn_predict_many(model.train_points, model.train_labels, queries, [model.k])[model.k]


def knn_predict_many(train_points, train_labels, queries, ks) -> dict:
    """Predictions for several ``k`` from a single neighbour search."""
    pts = np.asarray(train_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise EmptyModel("no training points")
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q[:, None] if pts.shape[1] == 1 else q[None, :]
    if q.shape[1] != pts.shape[1]:
        raise DimensionMismatch(f"queries have {q.shape[1]} dims, model has {pts.shape[1]}")
    ks = [int(k) for k in ks]
    kmax = max(ks)
    if min(ks) < 1 or kmax > pts.shape[0]:
        raise ValueError(f"k must be in 1..{pts.shape[0]}")
    classes, codes = np.unique(np.asarray(train_labels), return_inverse=True)
    out = {k: np.empty(q.shape[0], dtype=np.intp) for k in ks}
    for start in range(0, q.shape[0], _CHUNK):
        block = q[start:start + _CHUNK]
        nn, nn_dist = nearest_neighbors(pts, block, kmax)
        for k in ks:
            out[k][start:start + _CHUNK] = _vote(codes[nn[:, :k]], nn_dist[:, :k], classes.size)
    return {k: classes[v] for k, v in out.items()}


def nearest_neighbors(points, queries, k):
    """Indices and distances of the ``k`` nearest points, ordered by (distance, index)."""
    dist = cdist(queries, points)
    n = dist.shape[1]
    if k == n:
        nn = np.argsort(dist, axis=1, kind="stable")
        return nn, np.take_along_axis(dist, nn, axis=1)
    kth = np.partition(dist, k - 1, axis=1)[:, k - 1:k]
    below = dist < kth
    tied = dist == kth
    room = k - below.sum(axis=1, keepdims=True)
    chosen = below | (tied & (np.cumsum(tied, axis=1) <= room))
    # nonzero walks row-major, so each row yields exactly k indices in index order
    nn = np.nonzero(chosen)[1].reshape(-1, k)
    d = np.take_along_axis(dist, nn, axis=1)
    order = np.argsort(d, axis=1, kind="stable")
    return np.take_along_axis(nn, order, axis=1), np.take_along_axis(d, order, axis=1)


def _vote(nn_code, nn_dist, n_classes):
    m = nn_code.shape[0]
    rows = np.broadcast_to(np.arange(m)[:, None], nn_code.shape)
    counts = np.zeros((m, n_classes), dtype=np.intp)
    np.add.at(counts, (rows, nn_code), 1)
    nearest = np.full((m, n_classes), np.inf)
    np.minimum.at(nearest, (rows, nn_code), nn_dist)
    top = counts == counts.max(axis=1, keepdims=True)
    cand = np.where(top, nearest, np.inf)
    best = cand == cand.min(axis=1, keepdims=True)
    return np.argmax(best & top, axis=1)


def accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise LengthMismatch(f"{predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise LengthMismatch("cannot score an empty prediction")
    return float(np.mean(predicted == truth))
