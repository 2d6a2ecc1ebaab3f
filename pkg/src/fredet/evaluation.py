"""ROC/AUROC evaluation, experiment running, the training-fraction
robustness sweep, and seeded synthetic data generators for desk-scale
verification.

Scores follow the package-wide convention: larger = more out-of-
distribution, with OOD as the positive class and false positive rate
computed on the in-distribution set.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .bank import BankConfig, ModelBank, fit_bank, score_bank
from .baselines import MahalanobisModel, mahalanobis_score
from .errors import DimensionMismatchError
from .features import FeatureMatrix, ScoreVector, subsample

DEFAULT_SWEEP_FRACTIONS = (1.0, 0.8, 0.6, 0.4, 0.2)


@dataclass(frozen=True)
class EvalReport:
    """AUROC plus the ROC curve for one (in-distribution, OOD) score pair."""

    auroc: float
    roc_points: np.ndarray  # (K, 2) of (fpr, tpr), from (0,0) to (1,1)
    n_id: int
    n_ood: int
    method_tag: str = ""


@dataclass(frozen=True)
class SweepReport:
    """AUROC as a function of the training fraction retained."""

    fractions: tuple[float, ...]
    aurocs: tuple[float, ...]
    seed: int

    def __post_init__(self) -> None:
        if len(self.fractions) != len(self.aurocs):
            raise ValueError("fractions and aurocs must have equal length")
        if any(b >= a for a, b in zip(self.fractions, self.fractions[1:])):
            raise ValueError("fractions must be strictly decreasing")


def _as_scores(scores: ScoreVector | np.ndarray) -> np.ndarray:
    if isinstance(scores, ScoreVector):
        return scores.scores
    return np.asarray(scores, dtype=np.float64)


def auroc(
    id_scores: ScoreVector | np.ndarray,
    ood_scores: ScoreVector | np.ndarray,
    method_tag: str = "",
) -> EvalReport:
    """Mann-Whitney AUROC with 0.5 credit for ties, plus the ROC curve.

    AUROC = (#pairs with ood > id  +  0.5 * #tied pairs) / (n_id * n_ood),
    computed from midranks. The ROC curve sweeps thresholds descending over
    the merged score set.

    Raises:
        ValueError: either score set is empty.
    """
    ids = _as_scores(id_scores)
    oods = _as_scores(ood_scores)
    if ids.size == 0 or oods.size == 0:
        raise ValueError("both score sets must be non-empty")

    pooled = np.concatenate([ids, oods])
    ranks = rankdata(pooled)  # midranks; half-integers, exact in float64
    rank_sum = float(ranks[ids.size :].sum())
    u_stat = rank_sum - oods.size * (oods.size + 1) / 2.0
    value = u_stat / (ids.size * oods.size)

    # ROC by descending threshold over the distinct pooled scores:
    # at threshold t, predict OOD when score >= t.
    thresholds = np.unique(pooled)[::-1]
    id_sorted = np.sort(ids)
    ood_sorted = np.sort(oods)
    fpr = 1.0 - np.searchsorted(id_sorted, thresholds, side="left") / ids.size
    tpr = 1.0 - np.searchsorted(ood_sorted, thresholds, side="left") / oods.size
    points = np.concatenate([[[0.0, 0.0]], np.column_stack([fpr, tpr]), [[1.0, 1.0]]])

    return EvalReport(
        auroc=value,
        roc_points=points,
        n_id=int(ids.size),
        n_ood=int(oods.size),
        method_tag=method_tag,
    )


Scorer = Callable[[FeatureMatrix], ScoreVector]


def _as_scorer(obj) -> tuple[Scorer, str]:
    if isinstance(obj, ModelBank):
        tag = f"{obj.method}:{obj.mode}"
        if obj.method == "kpca":
            tag += f":{obj.config.kfre_variant}"
        return (lambda fm: score_bank(obj, fm)), tag
    if isinstance(obj, MahalanobisModel):
        def scorer(fm: FeatureMatrix) -> ScoreVector:
            if fm.n_features != obj.n_features:
                raise DimensionMismatchError(
                    f"model expects {obj.n_features} features, matrix has "
                    f"{fm.n_features}"
                )
            return ScoreVector(
                scores=np.atleast_1d(mahalanobis_score(obj, fm.data.astype(np.float64))),
                tag="mahalanobis",
            )
        return scorer, "mahalanobis"
    if callable(obj):
        def wrapped(fm: FeatureMatrix) -> ScoreVector:
            out = obj(fm)
            if isinstance(out, ScoreVector):
                return out
            return ScoreVector(scores=np.asarray(out, dtype=np.float64))
        return wrapped, getattr(obj, "tag", "custom")
    raise TypeError(f"cannot score with object of type {type(obj).__name__}")


def run_experiment(scorer, id_test: FeatureMatrix, ood_test: FeatureMatrix) -> EvalReport:
    """Score both sets with a bank, baseline model, or callable, and report AUROC."""
    if id_test.n_features != ood_test.n_features:
        raise DimensionMismatchError(
            f"feature dimensions differ: {id_test.n_features} vs {ood_test.n_features}"
        )
    score_fn, tag = _as_scorer(scorer)
    id_scores = score_fn(id_test)
    ood_scores = score_fn(ood_test)
    return auroc(id_scores, ood_scores, method_tag=id_scores.tag or tag)


def robustness_sweep(
    train: FeatureMatrix,
    id_test: FeatureMatrix,
    ood_test: FeatureMatrix,
    fractions: Sequence[float] = DEFAULT_SWEEP_FRACTIONS,
    seed: int = 0,
    mode: str = "global",
    method: str = "pca",
    config: BankConfig | None = None,
) -> SweepReport:
    """Refit and evaluate on stratified subsamples of the training set.

    Fractions must start at 1.0 and decrease strictly; every refit uses the
    same bank configuration, and the same seed drives every subsample, so
    the sweep is deterministic.
    """
    fractions = tuple(float(f) for f in fractions)
    if not fractions or fractions[0] != 1.0:
        raise ValueError("fractions must start with 1.0")
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")

    aurocs = []
    for f in fractions:
        bank = fit_bank(subsample(train, f, seed), mode, method, config)
        aurocs.append(run_experiment(bank, id_test, ood_test).auroc)
    return SweepReport(fractions=fractions, aurocs=tuple(aurocs), seed=seed)


# -- synthetic data --------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the seeded synthetic generators.

    kind selects the OOD construction:

    * "off-subspace": labeled classes living on one low-dimensional linear
      subspace (dimension `intrinsic_dim`) plus isotropic noise; OOD rows
      are isotropic Gaussian with scale `ood_noise`.
    * "shifted-mean": anisotropic labeled clusters, each spread along its
      own axis; OOD rows are in-distribution samples shifted by `shift`
      along the spread axis of the *next* class, so only per-class models
      see them as off-subspace. Needs dim >= 2 * n_classes.
    * "nonlinear-manifold": a noisy circle of radius `radius` in the first
      two coordinates; OOD rows sit at radii scaled by a factor drawn
      uniformly from `ood_radius_range`. Unlabeled.
    """

    kind: str
    dim: int = 20
    intrinsic_dim: int = 5
    n_classes: int = 4
    n_train: int = 1000
    n_id: int = 500
    n_ood: int = 500
    noise: float = 0.01
    ood_noise: float = 1.0
    mean_spread: float = 4.0
    shift: float = 3.0
    radius: float = 1.0
    ood_radius_range: tuple[float, float] = (1.3, 1.7)


def generate_synthetic(
    spec: SyntheticSpec, seed: int
) -> tuple[FeatureMatrix, FeatureMatrix, FeatureMatrix]:
    """Seeded (train, id_test, ood_test) triple for the given construction.

    Raises:
        ValueError: unknown kind or inconsistent dimensions.
    """
    if spec.dim < 1 or spec.n_train < 1 or spec.n_id < 1 or spec.n_ood < 1:
        raise ValueError("dimensions and sample counts must be positive")
    rng = np.random.default_rng(seed)
    if spec.kind == "off-subspace":
        return _gen_off_subspace(spec, rng)
    if spec.kind == "shifted-mean":
        return _gen_shifted_mean(spec, rng)
    if spec.kind == "nonlinear-manifold":
        return _gen_manifold(spec, rng)
    raise ValueError(f"unknown synthetic kind {spec.kind!r}")


def _split_counts(total: int, n_classes: int) -> list[int]:
    base, extra = divmod(total, n_classes)
    return [base + (1 if c < extra else 0) for c in range(n_classes)]


def _gen_off_subspace(spec: SyntheticSpec, rng: np.random.Generator):
    if not 1 <= spec.intrinsic_dim < spec.dim:
        raise ValueError("off-subspace requires 1 <= intrinsic_dim < dim")
    if spec.n_classes < 1:
        raise ValueError("need at least one class")
    # orthonormal basis of the shared subspace, rows span it
    basis, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.intrinsic_dim)))
    basis = basis.T
    latent_means = spec.mean_spread * rng.standard_normal(
        (spec.n_classes, spec.intrinsic_dim)
    )

    def draw(counts):
        rows, labels = [], []
        for c, n_c in enumerate(counts):
            latent = latent_means[c] + rng.standard_normal((n_c, spec.intrinsic_dim))
            ambient = latent @ basis + spec.noise * rng.standard_normal((n_c, spec.dim))
            rows.append(ambient)
            labels.append(np.full(n_c, c))
        return FeatureMatrix(
            data=np.concatenate(rows), labels=np.concatenate(labels)
        )

    train = draw(_split_counts(spec.n_train, spec.n_classes))
    id_test = draw(_split_counts(spec.n_id, spec.n_classes))
    ood = FeatureMatrix(
        data=spec.ood_noise * rng.standard_normal((spec.n_ood, spec.dim))
    )
    return train, id_test, ood


def _gen_shifted_mean(spec: SyntheticSpec, rng: np.random.Generator):
    c_n = spec.n_classes
    if spec.dim < 2 * c_n:
        raise ValueError(f"shifted-mean requires dim >= {2 * c_n} for {c_n} classes")
    # class c sits at mean_spread * e_c and spreads along e_{n_classes + c}
    means = np.zeros((c_n, spec.dim))
    axes = np.zeros((c_n, spec.dim))
    for c in range(c_n):
        means[c, c] = spec.mean_spread
        axes[c, c_n + c] = 1.0

    def draw(counts, shift_axes=False):
        rows, labels = [], []
        for c, n_c in enumerate(counts):
            along = rng.standard_normal((n_c, 1)) * axes[c]
            noise = spec.noise * rng.standard_normal((n_c, spec.dim))
            block = means[c] + along + noise
            if shift_axes:
                block = block + spec.shift * axes[(c + 1) % c_n]
            rows.append(block)
            labels.append(np.full(n_c, c))
        return FeatureMatrix(data=np.concatenate(rows), labels=np.concatenate(labels))

    train = draw(_split_counts(spec.n_train, c_n))
    id_test = draw(_split_counts(spec.n_id, c_n))
    ood = draw(_split_counts(spec.n_ood, c_n), shift_axes=True)
    return train, id_test, FeatureMatrix(data=ood.data)  # OOD rows unlabeled


def _gen_manifold(spec: SyntheticSpec, rng: np.random.Generator):
    if spec.dim < 2:
        raise ValueError("nonlinear-manifold requires dim >= 2")
    lo, hi = spec.ood_radius_range
    if not 0 < lo <= hi:
        raise ValueError(f"bad ood_radius_range {spec.ood_radius_range}")

    def circle(n, radii):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        base = np.zeros((n, spec.dim))
        base[:, 0] = radii * np.cos(theta)
        base[:, 1] = radii * np.sin(theta)
        return base + spec.noise * rng.standard_normal((n, spec.dim))

    train = FeatureMatrix(data=circle(spec.n_train, spec.radius))
    id_test = FeatureMatrix(data=circle(spec.n_id, spec.radius))
    factors = rng.uniform(lo, hi, size=spec.n_ood)
    ood = FeatureMatrix(data=circle(spec.n_ood, spec.radius * factors))
    return train, id_test, ood


# -- report output ---------------------------------------------------------


def write_roc_csv(report: EvalReport, path: str | Path) -> None:
    """Write the ROC curve as ``fpr,tpr`` CSV."""
    with open(path, "w", newline="") as fh:
        fh.write("fpr,tpr\n")
        for fpr, tpr in report.roc_points:
            fh.write(f"{float(fpr)!r},{float(tpr)!r}\n")


def write_sweep_csv(report: SweepReport, path: str | Path) -> None:
    """Write sweep results as ``fraction,auroc`` CSV."""
    with open(path, "w", newline="") as fh:
        fh.write("fraction,auroc\n")
        for f, a in zip(report.fractions, report.aurocs):
            fh.write(f"{float(f)!r},{float(a)!r}\n")


def summary_line(report: EvalReport) -> str:
    """One-line experiment summary for standard output."""
    return (
        f"method={report.method_tag or 'unknown'} n_id={report.n_id} "
        f"n_ood={report.n_ood} auroc={report.auroc!r}"
    )
