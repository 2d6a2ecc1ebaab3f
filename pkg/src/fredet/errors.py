"""Exception and warning types shared across the package.

Argument-domain violations (a fraction outside (0, 1], a negative gamma)
raise plain ``ValueError``; everything that depends on file contents or
data conditions gets a named class below so callers can react precisely.
"""


class FredetError(Exception):
    """Base class for all package-specific errors."""


# -- feature file (FMX) errors ------------------------------------------

class FeatureFileError(FredetError):
    """A feature file could not be read or failed validation."""


class BadMagicError(FeatureFileError):
    """File does not start with the FMX1 magic."""


class UnsupportedDtypeError(FeatureFileError):
    """Header declares a dtype code this reader does not know."""


class TruncatedPayloadError(FeatureFileError):
    """Payload is shorter (or longer) than the header promises."""


class NonFiniteValueError(FeatureFileError):
    """A NaN or Inf was found in feature or score data."""


class LabelLengthError(FeatureFileError):
    """Label block length does not match the number of rows."""


class LabelValueError(FeatureFileError):
    """A label is negative or otherwise outside the valid id range."""


class EmptyMatrixError(FeatureFileError):
    """Header declares zero rows or zero columns."""


# -- model bank (FREB) file errors --------------------------------------

class BankFileError(FredetError):
    """A model bank file could not be read or failed validation."""


class VersionMismatchError(BankFileError):
    """Bank file version is not supported by this reader."""


class CorruptBankError(BankFileError):
    """Bank file magic, header, or payload is damaged."""


# -- fitting / scoring errors -------------------------------------------

class FitError(FredetError):
    """Model fitting failed on the given training data."""


class ZeroVarianceError(FitError):
    """Training data carries no variance to model."""


class DegenerateKernelError(FitError):
    """Centered kernel matrix has no eigenvalue above the floor."""


class MissingLabelsError(FitError):
    """Per-class operation requested on an unlabeled matrix."""


class ClassTooSmallError(FitError):
    """A class has fewer samples than the operation requires."""


class ClassEmptiedError(FredetError):
    """Subsampling fraction would leave a class without samples."""


class DimensionMismatchError(FredetError):
    """Input vector length does not match the model's feature dimension."""


class SingularCovarianceError(FitError):
    """Tied covariance stayed singular even after ridge regularization."""


class PreimageError(FredetError):
    """Pre-image iteration collapsed even after the single restart."""


class NumericalConsistencyError(FredetError):
    """An identity that must hold numerically was violated badly."""


# -- warnings ------------------------------------------------------------

class ThinDataWarning(UserWarning):
    """Retained dimension was clamped because there are too few samples."""


class NonConvergenceWarning(UserWarning):
    """Pre-image iteration hit the iteration cap before converging."""
