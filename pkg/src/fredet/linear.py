"""Linear subspace models: PCA fitting, projection, reconstruction error.

The uncertainty score is the feature reconstruction error: the l2 norm of
the difference between a vector and its reconstruction through the fitted
subspace (project with the orthonormal component map, reconstruct with its
Moore-Penrose pseudo-inverse, which for an orthonormal map is simply the
transpose).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, FitError, ThinDataWarning, ZeroVarianceError
from .features import FeatureMatrix

DEFAULT_VARIANCE_RETENTION = 0.995

# Slack when comparing cumulative variance ratios against the retention
# threshold, so retention=1.0 is reachable despite rounding in the cumsum.
_RETENTION_EPS = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Mean, orthonormal component rows, and the retained spectrum.

    ``components`` has shape (m, d) with orthonormal rows; projecting is
    ``components @ (x - mean)`` and reconstructing is the transpose map.
    """

    mean: np.ndarray                     # (d,)
    components: np.ndarray               # (m, d)
    singular_values: np.ndarray          # (m,) non-increasing
    explained_variance_ratio: np.ndarray  # (m,) fractions of total variance

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def _apply_sign_convention(components: np.ndarray) -> np.ndarray:
    """Make each row's largest-magnitude entry positive (ties: lowest index)."""
    out = components.copy()
    for row in out:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return out


def fit_pca(
    train: FeatureMatrix, variance_retention: float = DEFAULT_VARIANCE_RETENTION
) -> PcaModel:
    """Fit a PCA subspace by thin SVD of the mean-centered training matrix.

    The retained dimension m is the smallest k whose cumulative explained
    variance ratio reaches `variance_retention`, never exceeding
    min(M - 1, d).

    Args:
        train: training matrix, M >= 2 rows.
        variance_retention: target fraction of variance in (0, 1].

    Raises:
        FitError: fewer than 2 rows.
        ZeroVarianceError: all rows identical.
        ValueError: variance_retention outside (0, 1].
    """
    if not 0.0 < variance_retention <= 1.0:
        raise ValueError(
            f"variance_retention must be in (0, 1], got {variance_retention}"
        )
    n, d = train.n_samples, train.n_features
    if n < 2:
        raise FitError(f"PCA needs at least 2 samples, got {n}")

    x = train.data.astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean

    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    limit = min(n - 1, d)
    svals = svals[:limit]
    vt = vt[:limit]

    total = float(np.dot(svals, svals))
    if total <= 0.0:
        raise ZeroVarianceError("training data has zero variance")
    ratios = svals**2 / total
    cumulative = np.cumsum(ratios)

    m = int(np.searchsorted(cumulative, variance_retention - _RETENTION_EPS)) + 1
    if m > limit:
        warnings.warn(
            f"retention {variance_retention} needs more than {limit} components; "
            f"clamping to {limit}",
            ThinDataWarning,
            stacklevel=2,
        )
        m = limit

    return PcaModel(
        mean=mean,
        components=_apply_sign_convention(vt[:m]),
        singular_values=svals[:m].copy(),
        explained_variance_ratio=ratios[:m].copy(),
    )


def _check_dim(model: PcaModel, x: np.ndarray, expected: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != expected:
        raise DimensionMismatchError(
            f"expected vectors of length {expected}, got {x.shape[-1]}"
        )
    return x


def transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project onto the subspace: components @ (x - mean).

    Accepts a single d-vector or an (n, d) batch.
    """
    x = _check_dim(model, x, model.n_features)
    return (x - model.mean) @ model.components.T


def inverse_transform(model: PcaModel, z: np.ndarray) -> np.ndarray:
    """Reconstruct from subspace coordinates: mean + components^T @ z."""
    z = _check_dim(model, z, model.n_components)
    return model.mean + z @ model.components


def fre_score(model: PcaModel, x: np.ndarray) -> np.ndarray | float:
    """Feature reconstruction error: ||x - reconstruct(project(x))||_2.

    Equals the norm of the residual orthogonal to the fitted subspace.
    Accepts a single d-vector (returns float) or an (n, d) batch.
    """
    x = _check_dim(model, x, model.n_features)
    residual = x - inverse_transform(model, transform(model, x))
    norms = np.linalg.norm(residual, axis=-1)
    return float(norms) if x.ndim == 1 else norms


def numerical_rank(matrix: FeatureMatrix) -> int:
    """Count singular values of the raw (uncentered) data matrix above
    max(M, d) * eps * sigma_max.

    Computed on the uncentered matrix; centering would lower the count by
    at most one.
    """
    svals = np.linalg.svd(matrix.data.astype(np.float64), compute_uv=False)
    if svals.size == 0:
        return 0
    tol = max(matrix.n_samples, matrix.n_features) * np.finfo(np.float64).eps * svals[0]
    return int(np.count_nonzero(svals > tol))
