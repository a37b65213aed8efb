"""Graph embedding with and without data uncertainty.

Samples are stored row-wise (``N x D``). With ``X`` the ``D x N`` matrix of
centered samples the two scatters are

    A = X L X^T   + sum_i D_ii  Sigma_i
    B = X L^p X^T + sum_i D^p_ii Sigma_i

and the projection keeps the generalized eigenvectors of ``(A, B)`` with
the smallest positive eigenvalues. Without uncertainty the regularizers
vanish and this is plain graph embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import graph as graphs
from .eigsolve import SymmetricPencil, relative_ridge, resolve_ridge, solve_pencil
from .errors import (
    DimensionMismatch,
    InsufficientPositiveEigenvalues,
    ParseError,
    ShapeMismatch,
)
from .uncertainty import UncertaintyModel

METHODS = ("LDA", "MFA")
TAGS = ("LDA", "MFA", "GEU-LDA", "GEU-MFA")
POSITIVITY_RTOL = 1e-10


@dataclass(frozen=True)
class ScatterAssembly:
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class EmbeddingModel:
    projection: np.ndarray
    spectrum: np.ndarray
    method_tag: str
    train_mean: np.ndarray
    sigma: float = 0.0
    ridge: float = 0.0
    k1: int | None = None
    k2: int | None = None
    # eigenvalues of the kept columns, same order as ``projection``
    kept_eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def n_features(self) -> int:
        return self.projection.shape[0]

    @property
    def d(self) -> int:
        return self.projection.shape[1]

    def truncated(self, d: int) -> "EmbeddingModel":
        """Same model keeping only the first ``d`` directions."""
        if not 1 <= d <= self.d:
            raise InsufficientPositiveEigenvalues(f"model has {self.d} directions, asked for {d}")
        kept = None if self.kept_eigenvalues is None else self.kept_eigenvalues[:d]
        return replace(self, projection=self.projection[:, :d], kept_eigenvalues=kept)

    def save(self, path) -> None:
        save_model(self, path)


def _centered(features, mean=None):
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {x.shape}")
    if mean is None:
        mean = x.mean(axis=0)
    return x - mean, mean


def scatter_from_graph(features, lap) -> np.ndarray:
    """``X L X^T`` for row-wise samples; centering is left to the caller."""
    x = np.asarray(features, dtype=float)
    lap = np.asarray(lap, dtype=float)
    if lap.shape != (x.shape[0], x.shape[0]):
        raise ShapeMismatch(f"Laplacian {lap.shape} does not match {x.shape[0]} samples")
    s = x.T @ lap @ x
    return 0.5 * (s + s.T)


def uncertainty_regularizer(u, degrees) -> np.ndarray:
    """Diagonal matrix ``sum_i degrees[i] * Sigma_i``."""
    covs = u.diag_covs if isinstance(u, UncertaintyModel) else np.asarray(u, dtype=float)
    degrees = np.asarray(degrees, dtype=float)
    if covs.ndim != 2 or covs.shape[0] != degrees.size:
        raise ShapeMismatch(f"{covs.shape} variances for {degrees.size} degrees")
    return np.diag(degrees @ covs)


def build_graphs(features, labels, method: str, k1=graphs.DEFAULT_K1, k2=graphs.DEFAULT_K2):
    if method == "LDA":
        return graphs.lda_graphs(labels)
    if method == "MFA":
        return graphs.mfa_graphs(features, labels, k1, k2)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def assemble_scatters(features, graph_pair, u=None) -> ScatterAssembly:
    """Both scatters, with the uncertainty regularizers when ``u`` is given.

    ``features`` should already be centered.
    """
    a = scatter_from_graph(features, graph_pair.laplacian)
    b = scatter_from_graph(features, graph_pair.penalty_laplacian)
    if u is not None:
        covs = u.diag_covs if isinstance(u, UncertaintyModel) else np.asarray(u)
        if covs.shape != np.shape(features):
            raise ShapeMismatch(f"uncertainty {covs.shape} does not match data {np.shape(features)}")
        a = a + uncertainty_regularizer(covs, graph_pair.degrees)
        b = b + uncertainty_regularizer(covs, graph_pair.penalty_degrees)
    return ScatterAssembly(a, b)


def positive_mask(eigenvalues) -> np.ndarray:
    """Eigenvalues treated as strictly positive."""
    top = max(1.0, float(np.max(eigenvalues)))
    return eigenvalues > POSITIVITY_RTOL * top


def fit_scatters(a, b, d=None, ridge="auto", *, ridge_factor=None, method_tag="LDA",
                 train_mean=None, sigma=0.0, k1=None, k2=None) -> EmbeddingModel:
    """Solve a precomputed pencil and keep the ``d`` smallest positive directions.

    This is the low-level entry point for callers that assemble their own
    regularizers (e.g. from full covariance matrices). ``d=None`` keeps
    every positive direction. ``ridge_factor`` overrides ``ridge`` with
    ``ridge_factor * trace(b) / D``.
    """
    pencil = SymmetricPencil(a, b)
    if ridge_factor is not None:
        ridge = relative_ridge(pencil.b, ridge_factor)
    sol = solve_pencil(pencil, resolve_ridge(ridge, pencil.b))
    keep = np.flatnonzero(positive_mask(sol.eigenvalues))
    if d is None:
        d = keep.size
    d = int(d)
    if d < 1 or d > pencil.dim:
        raise ValueError(f"d must be in 1..{pencil.dim}, got {d}")
    if keep.size < d:
        raise InsufficientPositiveEigenvalues(
            f"only {keep.size} positive eigenvalues, {d} directions requested"
        )
    cols = keep[:d]
    if train_mean is None:
        train_mean = np.zeros(pencil.dim)
    return EmbeddingModel(
        projection=sol.eigenvectors[:, cols],
        spectrum=sol.eigenvalues,
        method_tag=method_tag,
        train_mean=np.asarray(train_mean, dtype=float),
        sigma=float(sigma),
        ridge=sol.ridge,
        k1=k1,
        k2=k2,
        kept_eigenvalues=sol.eigenvalues[cols],
    )


def fit(features, labels, method: str = "LDA", u=None, d=None, *,
        k1=graphs.DEFAULT_K1, k2=graphs.DEFAULT_K2, ridge="auto", ridge_factor=None,
        graph_pair=None) -> EmbeddingModel:
    """Fit LDA/MFA, or their uncertainty-aware variants when ``u`` is given.

    Parameters
    ----------
    features : (N, D) array
    labels : (N,) array
    method : {"LDA", "MFA"}
    u : UncertaintyModel, optional
        Per-sample variances aligned with ``features``.
    d : int, optional
        Number of directions; all positive directions when omitted.
    k1, k2 : int
        MFA neighbourhood sizes (ignored for LDA).
    ridge : float or "auto"
        Diagonal loading of the constraint matrix.
    ridge_factor : float, optional
        Loading relative to ``trace(B) / D``; takes precedence over ``ridge``.
    graph_pair : GraphPair, optional
        Reuse graphs already built for these samples with ``method``.
    """
    x, mean = _centered(features)
    pair = graph_pair if graph_pair is not None else build_graphs(x, labels, method, k1, k2)
    if pair.n_samples != x.shape[0]:
        raise ShapeMismatch(f"graphs cover {pair.n_samples} samples, data has {x.shape[0]}")
    if d is not None and d > x.shape[1]:
        raise ValueError(f"d={d} exceeds the feature dimension {x.shape[1]}")
    s = assemble_scatters(x, pair, u)
    tag = method if u is None else f"GEU-{method}"
    sigma = 0.0 if u is None else u.sigma_scale
    mfa = method == "MFA"
    return fit_scatters(s.a, s.b, d, ridge, ridge_factor=ridge_factor, method_tag=tag,
                        train_mean=mean, sigma=sigma,
                        k1=k1 if mfa else None, k2=k2 if mfa else None)


def project(model: EmbeddingModel, features) -> np.ndarray:
    """Mean projection ``V^T (x - mean)`` of every row."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {x.shape[1]}")
    return (x - model.train_mean) @ model.projection


def project_with_variance(model: EmbeddingModel, features, u):
    """Projected means and per-direction variances ``v^T Sigma_i v``."""
    means = project(model, features)
    covs = u.diag_covs if isinstance(u, UncertaintyModel) else np.asarray(u, dtype=float)
    if covs.shape != (means.shape[0], model.n_features):
        raise ShapeMismatch(f"uncertainty {covs.shape} does not match data")
    return means, covs @ model.projection**2


def augmentation_scatter_oracle(features, u, lap, degrees, samples_per_point: int, seed: int) -> np.ndarray:
    """Monte-Carlo scatter over Gaussian replicates of every sample.

    Each sample gets ``M`` draws from ``N(x_i, Sigma_i)``; replicate pairs of
    parents ``i != j`` inherit the weight ``W_ij / M^2``. The weighted
    pairwise scatter of the replicate set is returned. Its expectation is
    the uncertainty-regularized scatter, so it serves as an independent
    check on :func:`assemble_scatters`. ``M = 0`` uses the original points.
    """
    x = np.asarray(features, dtype=float)
    covs = u.diag_covs if isinstance(u, UncertaintyModel) else np.asarray(u, dtype=float)
    lap = np.asarray(lap, dtype=float)
    degrees = np.asarray(degrees, dtype=float)
    n, dim = x.shape
    if covs.shape != x.shape or lap.shape != (n, n) or degrees.shape != (n,):
        raise ShapeMismatch("features, uncertainty, Laplacian and degrees disagree")
    m = int(samples_per_point)
    if m < 0:
        raise ValueError("samples_per_point must be non-negative")
    if m == 0:
        return scatter_from_graph(x, lap)
    w = np.diag(degrees) - lap
    np.fill_diagonal(w, 0.0)
    rng = np.random.default_rng(seed)
    sums = np.empty((n, dim))
    second = np.zeros((dim, dim))
    std = np.sqrt(covs)
    for i in range(n):
        reps = x[i] + rng.standard_normal((m, dim)) * std[i]
        sums[i] = reps.sum(axis=0)
        second += degrees[i] * (reps.T @ reps)
    # 1/2 sum_{i!=j} W_ij/M^2 sum_{r,s} (x_ir - x_js)(x_ir - x_js)^T
    s = second / m - (sums.T @ w @ sums) / m**2
    return 0.5 * (s + s.T)


def fit_augmented(features, labels, u, samples_per_point: int, seed: int, d=None, *,
                  method="MFA", k1=graphs.DEFAULT_K1, k2=graphs.DEFAULT_K2,
                  ridge="auto") -> EmbeddingModel:
    """Plain graph embedding on replicate-augmented data.

    Graphs are built on the original samples and inherited by their
    replicates, so the scatters are the Monte-Carlo ones of
    :func:`augmentation_scatter_oracle`.
    """
    x, mean = _centered(features)
    pair = build_graphs(x, labels, method, k1, k2)
    ss = np.random.SeedSequence(seed).spawn(2)
    a = augmentation_scatter_oracle(x, u, pair.laplacian, pair.degrees, samples_per_point,
                                    ss[0])
    b = augmentation_scatter_oracle(x, u, pair.penalty_laplacian, pair.penalty_degrees,
                                    samples_per_point, ss[1])
    tag = method if samples_per_point == 0 else f"{method}-{samples_per_point}"
    mfa = method == "MFA"
    return fit_scatters(a, b, d, ridge, method_tag=tag, train_mean=mean,
                        k1=k1 if mfa else None, k2=k2 if mfa else None)


# --- text serialization -------------------------------------------------

_HEADER_KEYS = ("method", "D", "d", "sigma", "ridge", "k1", "k2")


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_model(model: EmbeddingModel, path) -> None:
    """Header line, one line per projection column, train mean, spectrum."""
    head = {
        "method": model.method_tag,
        "D": model.n_features,
        "d": model.d,
        "sigma": repr(float(model.sigma)),
        "ridge": repr(float(model.ridge)),
        "k1": "-" if model.k1 is None else model.k1,
        "k2": "-" if model.k2 is None else model.k2,
    }
    lines = [" ".join(f"{k}={v}" for k, v in head.items())]
    lines += [_fmt(col) for col in model.projection.T]
    lines.append(_fmt(model.train_mean))
    lines.append(_fmt(model.spectrum))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> EmbeddingModel:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty model file", 1)
    try:
        head = dict(tok.split("=", 1) for tok in lines[0].split())
    except ValueError as exc:
        raise ParseError("malformed header", 1) from exc
    missing = [k for k in _HEADER_KEYS if k not in head]
    if missing:
        raise ParseError(f"header lacks {missing}", 1)
    dim, d = int(head["D"]), int(head["d"])
    if len(lines) != d + 3:
        raise ParseError(f"expected {d + 3} lines, found {len(lines)}")

    def row(i, size):
        try:
            vals = np.array([float(t) for t in lines[i].split()])
        except ValueError as exc:
            raise ParseError(str(exc), i + 1) from exc
        if vals.size != size:
            raise ParseError(f"expected {size} values, found {vals.size}", i + 1)
        return vals

    proj = np.column_stack([row(1 + c, dim) for c in range(d)]) if d else np.zeros((dim, 0))
    mean = row(d + 1, dim)
    spectrum = row(d + 2, dim)
    k1 = None if head["k1"] == "-" else int(head["k1"])
    k2 = None if head["k2"] == "-" else int(head["k2"])
    return EmbeddingModel(proj, spectrum, head["method"], mean, float(head["sigma"]),
                          float(head["ridge"]), k1, k2)
