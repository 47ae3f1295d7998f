"""Sample covariance construction and symmetric eigendecomposition.

The estimation pipeline starts here: an n x p observation matrix is turned
into the p x p second-moment matrix ``(1/n) * sum_i x_i x_i^T`` (divisor n,
no Bessel correction), whose eigenvalues, sorted in descending order, feed
the sequential rank test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = ["Spectrum", "sample_covariance", "symmetric_eigen", "as_data_matrix"]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a symmetric matrix, sorted in descending order.

    Attributes
    ----------
    eigenvalues : np.ndarray
        Length-p vector, ``eigenvalues[0] >= ... >= eigenvalues[p-1]``.
    eigenvectors : np.ndarray or None
        Orthonormal p x p matrix whose columns match the eigenvalue order,
        or None when vectors were not requested.
    clamp_count : int
        Number of eigenvalues snapped to exact zero because their magnitude
        was below the clamp tolerance.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    clamp_count: int

    @property
    def p(self) -> int:
        return self.eigenvalues.shape[0]


def as_data_matrix(data) -> np.ndarray:
    """Validate and return an n x p observation matrix as float64.

    Requires n >= 2 rows, p >= 2 columns, and finite entries.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"data must be a 2-d matrix, got ndim={arr.ndim}")
    n, p = arr.shape
    if n < 2 or p < 2:
        raise ValidationError(f"data must be at least 2x2, got {n}x{p}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("data contains non-finite entries (NaN or Inf)")
    return arr


def sample_covariance(data, center: bool = False) -> np.ndarray:
    """Second-moment matrix ``(1/n) * sum_i x_i x_i^T`` of the rows of ``data``.

    Parameters
    ----------
    data : array_like, shape (n, p)
        Observation matrix, one row per observation.
    center : bool
        Subtract the column sample mean first. The simulation designs assume
        mean-zero variables, so the harness uses ``center=False``; on field
        data centering is the safe choice.

    Returns
    -------
    np.ndarray, shape (p, p)
        Exactly symmetric matrix (the two triangles are averaged so that
        ``C[i, j] == C[j, i]`` bit for bit). Divisor is n, not n - 1.
    """
    x = as_data_matrix(data)
    if center:
        x = x - x.mean(axis=0)
    n = x.shape[0]
    t = x.T @ x
    # dgemm output is symmetric only up to rounding; averaging the triangles
    # makes symmetry exact.
    return (t + t.T) / (2.0 * n)


def symmetric_eigen(m, want_vectors: bool = False, clamp_tol: float | None = None) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix, descending order.

    Eigenvalues with ``|lam| <= clamp_tol`` are snapped to exact zero and
    counted in ``clamp_count``. Exact zeros matter downstream: trailing
    eigenvalues of covariance matrices built from exactly low-rank data must
    come out as 0.0, not 1e-16 noise, so that the degenerate-scale rule of
    the test statistic can fire deterministically.

    Parameters
    ----------
    m : array_like, shape (p, p)
        Symmetric matrix with finite entries. Symmetry must hold exactly as
        stored (build inputs via :func:`sample_covariance` or symmetrize
        explicitly).
    want_vectors : bool
        Also return the orthonormal eigenvector matrix.
    clamp_tol : float, optional
        Snap threshold; defaults to ``1e-12 * max(|m|)``. Must be >= 0.

    Raises
    ------
    ValidationError
        Non-square, non-symmetric, or non-finite input; negative clamp_tol.
    NumericalError
        The underlying solver failed to converge.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite entries")
    if not np.array_equal(a, a.T):
        raise ValidationError("matrix is not exactly symmetric")
    if clamp_tol is None:
        clamp_tol = 1e-12 * float(np.max(np.abs(a))) if a.size else 0.0
    if clamp_tol < 0:
        raise ValidationError(f"clamp_tol must be >= 0, got {clamp_tol}")

    try:
        if want_vectors:
            vals, vecs = np.linalg.eigh(a)
        else:
            vals = np.linalg.eigvalsh(a)
            vecs = None
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigendecomposition failed to converge for p={a.shape[0]}: {exc}"
        ) from exc

    vals = vals[::-1].copy()
    if vecs is not None:
        vecs = np.ascontiguousarray(vecs[:, ::-1])

    snap = (np.abs(vals) <= clamp_tol) & (vals != 0.0)
    clamp_count = int(np.count_nonzero(snap))
    if clamp_count:
        vals[snap] = 0.0
    return Spectrum(eigenvalues=vals, eigenvectors=vecs, clamp_count=clamp_count)
