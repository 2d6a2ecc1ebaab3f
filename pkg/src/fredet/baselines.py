"""Comparison baselines: tied-covariance Mahalanobis distance and the
softmax confidence score.

Both are oriented like the reconstruction-error scores: larger means more
out-of-distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ClassTooSmallError,
    DimensionMismatchError,
    MissingLabelsError,
    SingularCovarianceError,
)
from .features import FeatureMatrix

DEFAULT_RIDGE_SCALE = 1e-6


@dataclass(frozen=True)
class MahalanobisModel:
    """Class means and the inverse of the covariance tied across classes."""

    class_means: np.ndarray       # (N, d)
    shared_precision: np.ndarray  # (d, d) symmetric positive-definite
    ridge: float                  # regularization actually added to the diagonal
    class_ids: np.ndarray         # (N,) label of each mean row

    @property
    def n_features(self) -> int:
        return self.class_means.shape[1]


def fit_mahalanobis(
    train: FeatureMatrix, ridge_scale: float = DEFAULT_RIDGE_SCALE
) -> MahalanobisModel:
    """Fit per-class means and a covariance shared across classes.

    The tied covariance is the within-class scatter averaged over all M
    samples; a ridge of ridge_scale * trace / d keeps it invertible for
    thin data.

    Raises:
        MissingLabelsError: training matrix has no labels.
        ClassTooSmallError: some class has fewer than 2 samples.
        SingularCovarianceError: covariance not invertible even with ridge.
    """
    if train.labels is None:
        raise MissingLabelsError("Mahalanobis baseline needs class labels")

    x = train.data.astype(np.float64)
    d = train.n_features
    ids = train.class_ids()
    means = np.empty((len(ids), d))
    scatter = np.zeros((d, d))
    for row, c in enumerate(ids):
        members = x[train.rows_for(c)]
        if members.shape[0] < 2:
            raise ClassTooSmallError(
                f"class {c} has {members.shape[0]} sample(s); need at least 2"
            )
        means[row] = members.mean(axis=0)
        centered = members - means[row]
        scatter += centered.T @ centered
    cov = scatter / train.n_samples

    ridge = ridge_scale * float(np.trace(cov)) / d
    regularized = cov + ridge * np.eye(d)
    try:
        chol = scipy.linalg.cho_factor(regularized, lower=True)
        precision = scipy.linalg.cho_solve(chol, np.eye(d))
    except scipy.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            "tied covariance is singular even after ridge regularization"
        ) from exc
    precision = 0.5 * (precision + precision.T)

    residual = np.abs(precision @ regularized - np.eye(d)).max()
    if residual > 1e-6:
        raise SingularCovarianceError(
            f"precision check failed (||P Sigma - I||_max = {residual:.3e})"
        )

    return MahalanobisModel(
        class_means=means,
        shared_precision=precision,
        ridge=ridge,
        class_ids=np.asarray(ids, dtype=np.int32),
    )


def mahalanobis_score(model: MahalanobisModel, x: np.ndarray) -> np.ndarray | float:
    """Squared Mahalanobis distance to the nearest class mean.

    Accepts a single d-vector (returns float) or an (n, d) batch.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected vectors of length {model.n_features}, got {rows.shape[1]}"
        )
    # (n, N) squared distances via the quadratic form per class
    dists = np.empty((rows.shape[0], model.class_means.shape[0]))
    for j, mu in enumerate(model.class_means):
        diff = rows - mu
        dists[:, j] = np.einsum("ij,jk,ik->i", diff, model.shared_precision, diff)
    out = np.maximum(dists.min(axis=1), 0.0)
    return float(out[0]) if single else out


def softmax_score(logits: np.ndarray) -> np.ndarray | float:
    """1 - max softmax probability, computed with max-subtraction.

    Accepts a single N-vector of logits (returns float) or an (n, N) batch.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("logits must be non-empty")
    single = logits.ndim == 1
    rows = np.atleast_2d(logits)
    shifted = rows - rows.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    confidence = expd.max(axis=1) / expd.sum(axis=1)
    out = 1.0 - confidence
    return float(out[0]) if single else out
