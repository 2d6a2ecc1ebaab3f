"""Out-of-distribution and anomaly detection from deep-feature vectors.

The detector models the low-dimensional subspace that in-distribution
features occupy (linear or kernel PCA) and scores a sample by how badly
that subspace reconstructs it. Mahalanobis and softmax baselines plus an
AUROC harness round out the toolkit; the `fredet` command exposes the
fit / score / eval / rank / sweep pipeline on FMX feature files.
"""

from .bank import (
    BankConfig,
    ModelBank,
    fit_bank,
    load_artifact,
    load_bank,
    save_bank,
    save_baseline,
    score_bank,
)
from .baselines import (
    MahalanobisModel,
    fit_mahalanobis,
    mahalanobis_score,
    softmax_score,
)
from .errors import (
    BadMagicError,
    BankFileError,
    ClassEmptiedError,
    ClassTooSmallError,
    CorruptBankError,
    DegenerateKernelError,
    DimensionMismatchError,
    EmptyMatrixError,
    FeatureFileError,
    FitError,
    FredetError,
    LabelLengthError,
    LabelValueError,
    MissingLabelsError,
    NonConvergenceWarning,
    NonFiniteValueError,
    NumericalConsistencyError,
    PreimageError,
    SingularCovarianceError,
    ThinDataWarning,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    VersionMismatchError,
    ZeroVarianceError,
)
from .evaluation import (
    EvalReport,
    SweepReport,
    SyntheticSpec,
    auroc,
    generate_synthetic,
    robustness_sweep,
    run_experiment,
    summary_line,
    write_roc_csv,
    write_sweep_csv,
)
from .features import (
    FeatureMatrix,
    ScoreVector,
    read_features,
    read_scores,
    subsample,
    write_features,
    write_scores,
)
from .kernel import (
    KpcaModel,
    fit_kpca,
    kfre_score,
    kpca_project,
    median_heuristic_gamma,
    preimage,
    rbf_kernel,
    retained_mass,
    rkhs_residual,
)
from .linear import (
    DEFAULT_VARIANCE_RETENTION,
    PcaModel,
    fit_pca,
    fre_score,
    inverse_transform,
    numerical_rank,
    transform,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "BankConfig",
    "BankFileError",
    "ClassEmptiedError",
    "ClassTooSmallError",
    "CorruptBankError",
    "DEFAULT_VARIANCE_RETENTION",
    "DegenerateKernelError",
    "DimensionMismatchError",
    "EmptyMatrixError",
    "EvalReport",
    "FeatureFileError",
    "FeatureMatrix",
    "FitError",
    "FredetError",
    "KpcaModel",
    "LabelLengthError",
    "LabelValueError",
    "MahalanobisModel",
    "MissingLabelsError",
    "ModelBank",
    "NonConvergenceWarning",
    "NonFiniteValueError",
    "NumericalConsistencyError",
    "PcaModel",
    "PreimageError",
    "ScoreVector",
    "SingularCovarianceError",
    "SweepReport",
    "SyntheticSpec",
    "ThinDataWarning",
    "TruncatedPayloadError",
    "UnsupportedDtypeError",
    "VersionMismatchError",
    "ZeroVarianceError",
    "auroc",
    "fit_bank",
    "fit_kpca",
    "fit_mahalanobis",
    "fit_pca",
    "fre_score",
    "generate_synthetic",
    "inverse_transform",
    "kfre_score",
    "kpca_project",
    "load_artifact",
    "load_bank",
    "mahalanobis_score",
    "median_heuristic_gamma",
    "numerical_rank",
    "preimage",
    "rbf_kernel",
    "read_features",
    "read_scores",
    "retained_mass",
    "rkhs_residual",
    "robustness_sweep",
    "run_experiment",
    "save_bank",
    "save_baseline",
    "score_bank",
    "softmax_score",
    "subsample",
    "summary_line",
    "transform",
    "write_features",
    "write_roc_csv",
    "write_scores",
    "write_sweep_csv",
]
