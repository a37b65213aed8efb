"""Intrinsic and penalty graphs for LDA and MFA.

Weights are stored as dense ``N x N`` arrays with a zero diagonal. A graph
pair also carries the degree vectors and Laplacians ``L = D - W`` used to
build scatter matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, KTooLarge, SingleClass

DEFAULT_K1 = 5
DEFAULT_K2 = 20


def laplacian(w):
    w = np.asarray(w, dtype=float)
    return np.diag(w.sum(axis=1)) - w


@dataclass(frozen=True)
class GraphPair:
    intrinsic: np.ndarray
    penalty: np.ndarray
    degrees: np.ndarray = field(init=False)
    penalty_degrees: np.ndarray = field(init=False)
    laplacian: np.ndarray = field(init=False)
    penalty_laplacian: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("intrinsic", "penalty"):
            w = np.array(getattr(self, name), dtype=float)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise DimensionMismatch(f"{name} weights must be square, got {w.shape}")
            if np.any(np.diag(w) != 0):
                raise ValueError(f"{name} weights must have a zero diagonal")
            if not np.array_equal(w, w.T):
                raise ValueError(f"{name} weights must be symmetric")
            w.setflags(write=False)
            object.__setattr__(self, name, w)
        if self.intrinsic.shape != self.penalty.shape:
            raise DimensionMismatch("intrinsic and penalty graphs differ in size")
        object.__setattr__(self, "degrees", self.intrinsic.sum(axis=1))
        object.__setattr__(self, "penalty_degrees", self.penalty.sum(axis=1))
        object.__setattr__(self, "laplacian", laplacian(self.intrinsic))
        object.__setattr__(self, "penalty_laplacian", laplacian(self.penalty))

    @property
    def n_samples(self) -> int:
        return self.intrinsic.shape[0]


def _class_index(labels):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionMismatch("labels must be one-dimensional")
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    return classes, inverse, counts


def lda_graphs(labels) -> GraphPair:
    """LDA as a graph pair.

    Intrinsic weights are ``1/N_c`` between distinct members of a class.
    Penalty weights are ``1/N - 1/N_c`` inside a class and ``1/N`` across
    classes, so that ``X L^p X^T`` is the between-class scatter.
    """
    classes, inverse, counts = _class_index(labels)
    n = inverse.size
    if n < 2:
        raise SingleClass("need at least two samples")
    if classes.size < 2:
        raise SingleClass("LDA needs at least two distinct classes")
    same = inverse[:, None] == inverse[None, :]
    inv_size = 1.0 / counts[inverse]
    w = np.where(same, inv_size[:, None], 0.0)
    wp = np.where(same, 1.0 / n - inv_size[:, None], 1.0 / n)
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(wp, 0.0)
    return GraphPair(w, wp)


def mfa_graphs(features, labels, k1: int = DEFAULT_K1, k2: int = DEFAULT_K2) -> GraphPair:
    """MFA intrinsic (same-class k1-NN) and penalty (k2 closest marginal pairs) graphs.

    A pair ``(i, j)`` is connected in the penalty graph when it is among the
    ``k2`` shortest between-class pairs touching the class of ``i`` or the
    class of ``j``. Distance ties go to the smaller sample indices.
    """
    x = np.asarray(features, dtype=float)
    classes, inverse, counts = _class_index(labels)
    if x.ndim != 2 or x.shape[0] != inverse.size:
        raise DimensionMismatch(f"features {x.shape} do not match {inverse.size} labels")
    if classes.size < 2:
        raise SingleClass("MFA needs at least two distinct classes")
    k1, k2 = int(k1), int(k2)
    if k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be positive")
    # singleton classes have no same-class neighbours and are left out of the intrinsic graph
    multi = counts[counts > 1]
    if multi.size == 0 or k1 >= multi.min():
        smallest = multi.min() if multi.size else 1
        raise KTooLarge(f"k1={k1} must be smaller than the smallest class size {smallest}")
    n = inverse.size
    dist = cdist(x, x)
    w = np.zeros((n, n))
    members = [np.flatnonzero(inverse == c) for c in range(classes.size)]
    for idx in members:
        if idx.size == 1:
            continue
        block = dist[np.ix_(idx, idx)]
        np.fill_diagonal(block, np.inf)
        # column j holds the neighbours of idx[j]; stable sort keeps index order on ties
        nearest = np.argsort(block, axis=0, kind="stable")[:k1]
        w[idx[nearest], np.broadcast_to(idx, nearest.shape)] = 1.0
    w = np.maximum(w, w.T)

    wp = np.zeros((n, n))
    for c, idx in enumerate(members):
        outside = np.flatnonzero(inverse != c)
        if k2 > idx.size * outside.size:
            raise KTooLarge(
                f"k2={k2} exceeds the {idx.size * outside.size} between-class pairs of class {classes[c]}"
            )
        ii, jj = np.meshgrid(idx, outside, indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        lo, hi = np.minimum(ii, jj), np.maximum(ii, jj)
        # primary key distance, then (smaller index, larger index)
        order = np.lexsort((hi, lo, dist[ii, jj]))[:k2]
        wp[ii[order], jj[order]] = 1.0
        wp[jj[order], ii[order]] = 1.0
    return GraphPair(w, wp)


def graph_sum_identity_check(y, w) -> float:
    """``|sum_{i!=j} (y_i - y_j)^2 W_ij - 2 y^T L y|`` for a weight matrix ``w``."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (y.size, y.size):
        raise DimensionMismatch(f"weights {w.shape} do not match vector of length {y.size}")
    off = ~np.eye(y.size, dtype=bool)
    pairwise = np.sum(((y[:, None] - y[None, :]) ** 2 * w)[off])
    quad = 2.0 * y @ laplacian(w) @ y
    return float(abs(pairwise - quad))
