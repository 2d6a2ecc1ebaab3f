"""Kernel subspace models: RBF kernel PCA, pre-images, and the kernel
feature reconstruction error.

Fitting eigendecomposes the double-centered Gram matrix of the training
rows. Test points are projected through the stored centering statistics.
Two reconstruction-error variants are offered:

* ``rkhs``: residual distance in the kernel-induced space between the
  embedded point and its projection onto the retained eigenspace. Cheap
  (one kernel row per query).
* ``preimage``: map the projection back to input space with the classic
  fixed-point iteration for RBF kernels and take the input-space l2
  distance. Roughly 50x costlier per sample but directly comparable to
  the linear score.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import (
    DegenerateKernelError,
    DimensionMismatchError,
    FitError,
    NonConvergenceWarning,
    NumericalConsistencyError,
    PreimageError,
)
from .features import FeatureMatrix
from .linear import DEFAULT_VARIANCE_RETENTION, _RETENTION_EPS, _apply_sign_convention

KERNEL_RBF = "rbf"
KERNEL_LINEAR = "linear"  # test hook: reduces kernel PCA to linear PCA

DEFAULT_PREIMAGE_MAX_ITER = 100
DEFAULT_PREIMAGE_TOL = 1e-6

# Eigenvalues below this fraction of the largest are numerically-zero modes
# of the centered Gram matrix (which has rank <= M-1 by construction).
_EIGENVALUE_FLOOR = 1e-12

# Training sets above this size would need an O(M^3) dense eigensolve;
# reject and ask the caller to subsample instead of silently approximating.
MAX_TRAIN_ROWS = 10_000

_MEDIAN_PAIR_SAMPLE = 2000
_MEDIAN_SAMPLE_SEED = 0


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatchError(
            f"rbf_kernel expects equal-length vectors, got {x.shape} and {y.shape}"
        )
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    diff = x - y
    return float(np.exp(-gamma * np.dot(diff, diff)))


def median_heuristic_gamma(points: np.ndarray, seed: int = _MEDIAN_SAMPLE_SEED) -> float:
    """gamma = 1 / (2 * median^2) over pairwise training distances.

    Exact over all pairs up to 2000 rows; above that, a seeded sample of
    2000 pairs. Falls back to 1.0 when the median distance is zero
    (duplicate-dominated data), where any width gives the same Gram matrix.
    """
    n = points.shape[0]
    if n <= _MEDIAN_PAIR_SAMPLE:
        dists = pdist(points)
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=_MEDIAN_PAIR_SAMPLE)
        jj = rng.integers(0, n - 1, size=_MEDIAN_PAIR_SAMPLE)
        jj = np.where(jj >= ii, jj + 1, jj)  # distinct pairs
        dists = np.linalg.norm(points[ii] - points[jj], axis=1)
    med = float(np.median(dists))
    if med <= 0.0:
        return 1.0
    return 1.0 / (2.0 * med * med)


def _kernel_matrix(x: np.ndarray, y: np.ndarray, gamma: float, kind: str) -> np.ndarray:
    if kind == KERNEL_RBF:
        return np.exp(-gamma * cdist(x, y, "sqeuclidean"))
    if kind == KERNEL_LINEAR:
        return x @ y.T
    raise ValueError(f"unknown kernel {kind!r}")


def _kernel_self(x: np.ndarray, kind: str) -> np.ndarray:
    """k(x, x) per row."""
    if kind == KERNEL_RBF:
        return np.ones(x.shape[0], dtype=np.float64)
    return np.einsum("ij,ij->i", x, x)


@dataclass(frozen=True)
class KpcaModel:
    """Retained training rows plus the centered-Gram eigensystem.

    ``alphas`` holds one coefficient row per retained component, scaled so
    eigenvalue_k * ||alphas_k||^2 == 1; with that normalization the
    projection of a query is its inner product with unit principal axes in
    the kernel-induced space.
    """

    train_points: np.ndarray   # (M, d) float64
    gamma: float               # RBF width; ignored for the linear hook
    alphas: np.ndarray         # (m, M)
    eigenvalues: np.ndarray    # (m,) positive, non-increasing
    row_means: np.ndarray      # (M,) row means of the uncentered Gram matrix
    total_mean: float          # grand mean of the uncentered Gram matrix
    kernel: str = KERNEL_RBF

    @property
    def n_train(self) -> int:
        return self.train_points.shape[0]

    @property
    def n_features(self) -> int:
        return self.train_points.shape[1]

    @property
    def n_components(self) -> int:
        return self.alphas.shape[0]


def fit_kpca(
    train: FeatureMatrix,
    variance_retention: float = DEFAULT_VARIANCE_RETENTION,
    gamma: float | None = None,
    kernel: str = KERNEL_RBF,
) -> KpcaModel:
    """Fit kernel PCA on the training rows.

    Builds the Gram matrix, double-centers it, eigendecomposes, floors out
    numerically-zero eigenvalues, and keeps the smallest leading set whose
    eigenvalue mass reaches `variance_retention`. When `gamma` is omitted
    the RBF width comes from the median heuristic.

    Raises:
        FitError: fewer than 2 rows, or more than MAX_TRAIN_ROWS.
        DegenerateKernelError: no eigenvalue survives the floor.
        ValueError: bad retention, gamma, or kernel name.
    """
    if not 0.0 < variance_retention <= 1.0:
        raise ValueError(
            f"variance_retention must be in (0, 1], got {variance_retention}"
        )
    if kernel not in (KERNEL_RBF, KERNEL_LINEAR):
        raise ValueError(f"unknown kernel {kernel!r}")
    n = train.n_samples
    if n < 2:
        raise FitError(f"kernel PCA needs at least 2 samples, got {n}")
    if n > MAX_TRAIN_ROWS:
        raise FitError(
            f"{n} training rows exceeds the dense-eigendecomposition cap of "
            f"{MAX_TRAIN_ROWS}; subsample the training set first"
        )

    x = train.data.astype(np.float64)
    if kernel == KERNEL_RBF:
        if gamma is None:
            gamma = median_heuristic_gamma(x)
        elif gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
    else:
        gamma = 0.0  # unused by the linear hook

    gram = _kernel_matrix(x, x, gamma, kernel)
    row_means = gram.mean(axis=1)
    total_mean = float(gram.mean())
    centered = gram - row_means[None, :] - row_means[:, None] + total_mean
    centered = 0.5 * (centered + centered.T)

    evals, evecs = np.linalg.eigh(centered)  # ascending
    evals = evals[::-1]
    evecs = evecs[:, ::-1]

    floor = max(float(evals[0]), 0.0) * _EIGENVALUE_FLOOR
    keep = evals > max(floor, 0.0)
    if not keep.any():
        raise DegenerateKernelError(
            "centered Gram matrix has no eigenvalue above the floor "
            "(all training rows may be identical)"
        )
    evals = evals[keep]
    evecs = evecs[:, keep]

    mass = np.cumsum(evals) / evals.sum()
    m = int(np.searchsorted(mass, variance_retention - _RETENTION_EPS)) + 1
    m = min(m, evals.size)

    # lambda_k ||alpha_k||^2 == 1 with unit-norm eigenvectors
    alphas = (evecs[:, :m] / np.sqrt(evals[:m])).T
    alphas = _apply_sign_convention(alphas)

    return KpcaModel(
        train_points=x,
        gamma=float(gamma),
        alphas=np.ascontiguousarray(alphas),
        eigenvalues=evals[:m].copy(),
        row_means=row_means,
        total_mean=total_mean,
        kernel=kernel,
    )


def _check_query(model: KpcaModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected vectors of length {model.n_features}, got {rows.shape[1]}"
        )
    return rows, single


def _centered_cross(model: KpcaModel, rows: np.ndarray) -> np.ndarray:
    """Centered kernel rows k~(x, x_i) for a batch of queries, shape (n, M)."""
    kv = _kernel_matrix(rows, model.train_points, model.gamma, model.kernel)
    return kv - kv.mean(axis=1, keepdims=True) - model.row_means[None, :] + model.total_mean


def _centered_self(model: KpcaModel, rows: np.ndarray) -> np.ndarray:
    """Centered self-similarity k~(x, x) per query row."""
    kv = _kernel_matrix(rows, model.train_points, model.gamma, model.kernel)
    return _kernel_self(rows, model.kernel) - 2.0 * kv.mean(axis=1) + model.total_mean


def kpca_project(model: KpcaModel, x: np.ndarray) -> np.ndarray:
    """Coordinates of the query in the retained kernel eigenspace.

    Accepts a single d-vector or an (n, d) batch.
    """
    rows, single = _check_query(model, x)
    beta = _centered_cross(model, rows) @ model.alphas.T
    return beta[0] if single else beta


def retained_mass(model: KpcaModel) -> float:
    """Fraction of centered-Gram eigenvalue mass the model kept.

    The denominator is the trace of the centered Gram matrix, recovered
    from the stored centering statistics. The trace also counts the tiny
    eigenvalues floored out during fitting, so the result can sit a hair
    under the cumulative fraction seen at fit time.
    """
    k_self = _kernel_self(model.train_points, model.kernel)
    trace = float(np.sum(k_self - 2.0 * model.row_means + model.total_mean))
    if trace <= 0.0:
        return 1.0
    return min(1.0, float(model.eigenvalues.sum()) / trace)


def rkhs_residual(model: KpcaModel, x: np.ndarray) -> np.ndarray | float:
    """Distance in the kernel-induced space between the embedded query and
    its projection: sqrt(k~(x,x) - sum_k beta_k^2).

    The radicand is clamped at zero against rounding; a value below -1e-6
    signals an inconsistent model and raises.
    """
    rows, single = _check_query(model, x)
    beta = _centered_cross(model, rows) @ model.alphas.T
    radicand = _centered_self(model, rows) - np.einsum("ij,ij->i", beta, beta)
    if (radicand < -1e-6).any():
        raise NumericalConsistencyError(
            f"projection energy exceeds self-similarity by {-radicand.min():.3e}"
        )
    out = np.sqrt(np.maximum(radicand, 0.0))
    return float(out[0]) if single else out


def _expansion_weights(model: KpcaModel, beta: np.ndarray) -> np.ndarray:
    """Weights w_i expressing the reconstructed embedding as sum_i w_i phi(x_i).

    The projection onto the retained eigenspace contributes
    sum_k beta_k alpha_k[i]; adding back the kernel-space mean contributes
    the uniform term (1 - sum_i c_i) / M. The weights sum to 1.
    """
    c = beta @ model.alphas
    return c + (1.0 - c.sum()) / model.n_train


def preimage(
    model: KpcaModel,
    x: np.ndarray,
    max_iter: int = DEFAULT_PREIMAGE_MAX_ITER,
    tol: float = DEFAULT_PREIMAGE_TOL,
) -> np.ndarray:
    """Input-space point whose embedding best matches the query's projection.

    Runs the fixed-point update for RBF kernels,

        z <- sum_i w_i k(z, x_i) x_i / sum_i w_i k(z, x_i),

    starting at z0 = x and stopping when the step is below
    tol * (1 + ||z||) or after `max_iter` rounds. The iterate with the best
    objective seen (including z0) is returned, so the result never scores
    worse than the starting point. A collapsed denominator triggers one
    restart from the training point nearest x, then raises.

    Raises:
        ValueError: model was fit with the linear test hook, or max_iter < 1.
        PreimageError: denominator collapsed even after the restart.

    Warns:
        NonConvergenceWarning: iteration cap reached; last iterate used.
    """
    if model.kernel != KERNEL_RBF:
        raise ValueError("pre-image iteration requires an RBF-kernel model")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    rows, _ = _check_query(model, x)
    if rows.shape[0] != 1:
        raise DimensionMismatchError("preimage expects a single d-vector")
    query = rows[0]

    train = model.train_points
    weights = _expansion_weights(model, kpca_project(model, query))

    def kernel_row(z: np.ndarray) -> np.ndarray:
        diff = train - z
        return np.exp(-model.gamma * np.einsum("ij,ij->i", diff, diff))

    z = query.copy()
    best_z = query.copy()
    best_rho = float(weights @ kernel_row(query))
    restarted = False
    converged = False

    for _ in range(max_iter):
        kv = kernel_row(z)
        wk = weights * kv
        rho = float(wk.sum())
        if rho > best_rho:
            best_rho, best_z = rho, z.copy()
        if not np.isfinite(rho) or abs(rho) <= 1e-14 * np.abs(wk).sum():
            if restarted:
                raise PreimageError(
                    "pre-image denominator collapsed after restarting"
                )
            restarted = True
            nearest = int(np.argmin(np.linalg.norm(train - query, axis=1)))
            z = train[nearest].copy()
            continue
        z_next = wk @ train / rho
        step = float(np.linalg.norm(z_next - z))
        z = z_next
        if step <= tol * (1.0 + float(np.linalg.norm(z_next))):
            converged = True
            break

    final_rho = float(weights @ kernel_row(z))
    if final_rho > best_rho:
        best_rho, best_z = final_rho, z.copy()
    if not converged:
        warnings.warn(
            f"pre-image iteration did not converge within {max_iter} rounds",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return best_z


def kfre_score(
    model: KpcaModel,
    x: np.ndarray,
    variant: str = "preimage",
    max_iter: int = DEFAULT_PREIMAGE_MAX_ITER,
    tol: float = DEFAULT_PREIMAGE_TOL,
) -> np.ndarray | float:
    """Kernel feature reconstruction error.

    variant "preimage" returns ||x - preimage(x)||_2 in input space;
    variant "rkhs" returns the kernel-space residual instead.
    Accepts a single d-vector (returns float) or an (n, d) batch.
    """
    if variant == "rkhs":
        return rkhs_residual(model, x)
    if variant != "preimage":
        raise ValueError(f"unknown kfre variant {variant!r}")
    rows, single = _check_query(model, x)
    out = np.empty(rows.shape[0], dtype=np.float64)
    for i, row in enumerate(rows):
        out[i] = np.linalg.norm(row - preimage(model, row, max_iter, tol))
    return float(out[0]) if single else out
