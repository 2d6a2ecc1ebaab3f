"""Deep-feature extraction for the subspace scoring tools.

Runs images through a convolutional backbone, pools the activations of a
chosen layer, and writes the rows as an FMX feature matrix with an optional
JSON sidecar describing how they were produced.
"""

from .backbones import (
    LAYER_PRESETS,
    RANDOM_INIT_SEED,
    available_backbones,
    build_backbone,
    layer_module_name,
)
from .data import IMAGE_SUFFIXES, IMAGENET_MEAN, IMAGENET_STD, discover, load_batch
from .errors import (
    DatasetError,
    ExtractorError,
    ShapeMismatchError,
    UnknownBackboneError,
    UnknownLayerError,
    WeightsError,
)
from .extract import ExtractionRecipe, extract, extract_logits
from .fmx import write_fmx

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "ExtractionRecipe",
    "ExtractorError",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "IMAGE_SUFFIXES",
    "LAYER_PRESETS",
    "RANDOM_INIT_SEED",
    "ShapeMismatchError",
    "UnknownBackboneError",
    "UnknownLayerError",
    "WeightsError",
    "available_backbones",
    "build_backbone",
    "discover",
    "extract",
    "extract_logits",
    "layer_module_name",
    "load_batch",
    "write_fmx",
]
