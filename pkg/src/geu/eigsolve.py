"""Symmetric-definite generalized eigenproblems ``A v = lambda B v``.

Every method in the package ends in one of these. The pencil is reduced
to a standard symmetric problem through a Cholesky factor of ``B``:

    B = L L^T,   C = L^{-1} A L^{-T},   C u = lambda u,   v = L^{-T} u

which keeps ``V^T B V = I`` exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

SYMMETRY_RTOL = 1e-10
AUTO_RIDGE_FACTOR = 1e-8


def _check_symmetric(m, name):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise DimensionMismatch(f"{name} is not symmetric")
    return m


@dataclass(frozen=True)
class SymmetricPencil:
    """Pair ``(a, b)``: ``a`` is minimized, ``b`` is the constraint."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _check_symmetric(self.a, "a")
        b = _check_symmetric(self.b, "b")
        if a.shape != b.shape:
            raise DimensionMismatch(f"pencil shapes differ: {a.shape} vs {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ridge: float = 0.0


def relative_ridge(b, factor: float) -> float:
    """``factor * trace(b) / D``."""
    b = np.asarray(b, dtype=float)
    return float(factor) * max(float(np.trace(b)), 0.0) / b.shape[0]


def auto_ridge(b) -> float:
    """Scale-relative ridge ``1e-8 * trace(b) / D``."""
    return relative_ridge(b, AUTO_RIDGE_FACTOR)


def resolve_ridge(ridge, b) -> float:
    if isinstance(ridge, str):
        if ridge != "auto":
            raise ValueError(f"ridge must be a non-negative number or 'auto', got {ridge!r}")
        return auto_ridge(b)
    ridge = float(ridge)
    if not ridge >= 0:
        raise ValueError(f"ridge must be non-negative, got {ridge}")
    return ridge


def _fix_signs(vectors):
    # largest-magnitude entry of each column made positive; first index wins ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def solve_pencil(pencil: SymmetricPencil, ridge=0.0) -> EigenSolution:
    """All eigenpairs of ``(a, b + ridge*I)`` in ascending order.

    Parameters
    ----------
    pencil : SymmetricPencil
    ridge : float or ``"auto"``
        Added to the diagonal of ``b`` before factorization.

    Raises
    ------
    NotPositiveDefinite
        If ``b + ridge*I`` has no Cholesky factor; the caller should raise
        the ridge.
    """
    if not isinstance(pencil, SymmetricPencil):
        pencil = SymmetricPencil(*pencil)
    ridge = resolve_ridge(ridge, pencil.b)
    n = pencil.dim
    b = pencil.b + ridge * np.eye(n)
    try:
        chol = scipy.linalg.cholesky(b, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            f"b + {ridge:g}*I is not positive definite; increase the ridge"
        ) from exc
    # C = L^{-1} A L^{-T}
    tmp = scipy.linalg.solve_triangular(chol, pencil.a, lower=True)
    c = scipy.linalg.solve_triangular(chol, tmp.T, lower=True)
    c = 0.5 * (c + c.T)
    values, u = np.linalg.eigh(c)
    vectors = scipy.linalg.solve_triangular(chol.T, u, lower=False)
    return EigenSolution(values, _fix_signs(vectors), ridge)


def numeric_rank(m, rel_tol: float = 1e-10) -> int:
    """Number of eigenvalues of symmetric ``m`` above ``rel_tol * max|eig|``."""
    m = _check_symmetric(m, "m")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    values = np.linalg.eigvalsh(0.5 * (m + m.T))
    top = np.max(np.abs(values))
    if top == 0:
        return 0
    return int(np.sum(values > rel_tol * top))
