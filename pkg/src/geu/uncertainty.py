"""Per-sample diagonal Gaussian uncertainty.

Each sample ``x_i`` is modelled as ``N(x_i, Sigma_i)`` with a diagonal
covariance. The two estimators set

    Sigma_i = sigma * diag(x_i - x_i*)^2

where ``x_i*`` is the nearest other training sample (unsupervised) or the
nearest other sample of the same class (supervised).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NegativeVariance, ParseError, ShapeMismatch, TooFewSamples

FLOOR_FACTOR = 1e-8


@dataclass(frozen=True)
class UncertaintyModel:
    """Row ``i`` of ``diag_covs`` is the variance vector of sample ``i``."""

    diag_covs: np.ndarray
    sigma_scale: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        covs = np.array(self.diag_covs, dtype=float)
        if covs.ndim != 2:
            raise ShapeMismatch(f"diag_covs must be 2-D, got shape {covs.shape}")
        if not np.all(np.isfinite(covs)):
            raise NegativeVariance("variances must be finite")
        if np.any(covs < 0):
            raise NegativeVariance("variances must be non-negative")
        covs.setflags(write=False)
        object.__setattr__(self, "diag_covs", covs)

    @property
    def shape(self):
        return self.diag_covs.shape

    def to_csv(self, path) -> None:
        save_csv(self, path)


def auto_floor(variances) -> float:
    """``1e-8`` times the median non-zero variance (0 when all are zero)."""
    nz = np.asarray(variances)[np.asarray(variances) > 0]
    if nz.size == 0:
        return 0.0
    return FLOOR_FACTOR * float(np.median(nz))


def _nearest_other(x, candidates_mask=None):
    """Index of the nearest other sample, optionally restricted per row."""
    dist = cdist(x, x)
    np.fill_diagonal(dist, np.inf)
    if candidates_mask is not None:
        dist = np.where(candidates_mask, dist, np.inf)
    # argmin returns the first minimum, i.e. the smaller index on ties
    return np.argmin(dist, axis=1)


def _finish(x, partner, sigma_scale, floor):
    sigma_scale = float(sigma_scale)
    if sigma_scale < 0:
        raise ValueError("sigma_scale must be non-negative")
    var = sigma_scale * (x - x[partner]) ** 2
    if floor is None:
        floor = auto_floor(var)
    floor = float(floor)
    if floor < 0:
        raise ValueError("floor must be non-negative")
    return UncertaintyModel(np.maximum(var, floor), sigma_scale, floor)


def _as_samples(features):
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch(f"features must be 2-D, got shape {x.shape}")
    if x.shape[0] < 2:
        raise TooFewSamples("uncertainty estimation needs at least two samples")
    return x


def estimate_unsupervised(features, sigma_scale: float = 1.0, floor=None) -> UncertaintyModel:
    """Variance from the squared difference to the nearest other sample.

    ``floor=None`` selects :func:`auto_floor`.
    """
    x = _as_samples(features)
    return _finish(x, _nearest_other(x), sigma_scale, floor)


def estimate_supervised(features, labels, sigma_scale: float = 1.0, floor=None) -> UncertaintyModel:
    """Like :func:`estimate_unsupervised` but the partner must share the class.

    Samples that are alone in their class fall back to the unsupervised
    partner.
    """
    x = _as_samples(features)
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise ShapeMismatch(f"{labels.shape[0]} labels for {x.shape[0]} samples")
    same = labels[:, None] == labels[None, :]
    partner = _nearest_other(x, same)
    singleton = same.sum(axis=1) == 1
    if np.any(singleton):
        partner[singleton] = _nearest_other(x)[singleton]
    return _finish(x, partner, sigma_scale, floor)


def from_explicit(diag_covs, n_samples=None, n_features=None) -> UncertaintyModel:
    covs = np.asarray(diag_covs, dtype=float)
    if covs.ndim != 2:
        raise ShapeMismatch(f"diag_covs must be 2-D, got shape {covs.shape}")
    if n_samples is not None and covs.shape[0] != n_samples:
        raise ShapeMismatch(f"expected {n_samples} rows, got {covs.shape[0]}")
    if n_features is not None and covs.shape[1] != n_features:
        raise ShapeMismatch(f"expected {n_features} columns, got {covs.shape[1]}")
    return UncertaintyModel(covs, sigma_scale=1.0, floor=0.0)


def save_csv(model: UncertaintyModel, path) -> None:
    d = model.diag_covs.shape[1]
    header = ",".join(f"var_{j}" for j in range(d))
    np.savetxt(path, model.diag_covs, delimiter=",", header=header, comments="", fmt="%.17g")


def load_csv(path) -> UncertaintyModel:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    expected = [f"var_{j}" for j in range(len(header))]
    if header != expected:
        raise ParseError(f"unexpected header {header[:3]}..., want var_0..var_{{D-1}}", 1)
    try:
        covs = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return from_explicit(covs, n_features=len(header))
