"""Exception hierarchy for the extractor."""


class ExtractorError(Exception):
    """Base class for extraction failures."""


class UnknownBackboneError(ExtractorError):
    """Requested backbone has no registered layer presets."""


class UnknownLayerError(ExtractorError):
    """Layer selector outside the backbone's labeled presets."""


class ShapeMismatchError(ExtractorError):
    """Pooled feature width disagrees with the recipe's expected_dim."""


class DatasetError(ExtractorError):
    """Dataset directory missing, empty, or unreadable."""


class WeightsError(ExtractorError):
    """Weights file missing or incompatible with the backbone."""
