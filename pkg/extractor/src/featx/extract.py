"""Feature and logit extraction into FMX files.

A recipe names the backbone, the labeled layer to tap, and the dataset;
extraction runs the images through in sorted order, pools convolutional
maps to vectors by global average pooling, and writes one float32 row per
image. A JSON sidecar (`<output>.meta.json`) records the recipe fields so
downstream reports can cite where the features came from; the FMX format
itself has no metadata slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .backbones import build_backbone, layer_module_name
from .data import discover, load_batch
from .errors import ExtractorError, ShapeMismatchError
from .fmx import write_fmx


@dataclass(frozen=True)
class ExtractionRecipe:
    """What to run, where to tap it, and where the rows go.

    `split` selects a subdirectory of `data_dir` (train/test style
    layouts); None uses `data_dir` itself. `expected_dim`, when given,
    asserts the pooled feature width up front.
    """

    data_dir: str | Path
    output: str | Path
    backbone: str = "resnet18"
    layer: int = 0
    pooling: str = "gap"
    split: str | None = None
    batch_size: int = 32
    image_size: int = 64
    weights: str | Path = "none"
    expected_dim: int | None = None

    def __post_init__(self) -> None:
        if self.pooling != "gap":
            raise ValueError(f"unsupported pooling rule {self.pooling!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.image_size < 32:
            raise ValueError(f"image_size must be at least 32, got {self.image_size}")

    @property
    def root(self) -> Path:
        base = Path(self.data_dir)
        return base / self.split if self.split else base


def _pool(activation: torch.Tensor) -> torch.Tensor:
    if activation.ndim == 4:
        return activation.mean(dim=(2, 3))
    if activation.ndim == 2:
        return activation
    raise ExtractorError(
        f"cannot pool activation of shape {tuple(activation.shape)} to vectors"
    )


def _run(recipe: ExtractionRecipe, forward) -> tuple[np.ndarray, np.ndarray | None]:
    paths, labels, _ = discover(recipe.root)
    chunks = []
    with torch.no_grad():
        for start in range(0, len(paths), recipe.batch_size):
            batch = load_batch(paths[start : start + recipe.batch_size], recipe.image_size)
            chunks.append(forward(batch).numpy().astype(np.float32))
    features = np.concatenate(chunks)
    if not np.isfinite(features).all():
        raise ExtractorError("backbone produced non-finite features")
    return features, labels


def _write(recipe: ExtractionRecipe, features: np.ndarray, labels: np.ndarray | None, tap: str) -> None:
    write_fmx(features, recipe.output, labels)
    meta = {
        "backbone": recipe.backbone,
        "tap": tap,
        "pooling": recipe.pooling,
        "weights": str(recipe.weights),
        "data_dir": str(recipe.data_dir),
        "split": recipe.split,
        "image_size": recipe.image_size,
        "n_samples": int(features.shape[0]),
        "n_features": int(features.shape[1]),
        "labeled": labels is not None,
    }
    sidecar = Path(str(recipe.output) + ".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def extract(recipe: ExtractionRecipe) -> tuple[np.ndarray, np.ndarray | None]:
    """Pooled features of the recipe's labeled layer, written to FMX.

    Returns the (M, d) float32 features and the labels (None for flat
    directories) after writing the file and its metadata sidecar.
    """
    node_name = layer_module_name(recipe.backbone, recipe.layer)
    model = build_backbone(recipe.backbone, recipe.weights)
    node = getattr(model, node_name)

    captured: dict[str, torch.Tensor] = {}
    handle = node.register_forward_hook(
        lambda module, inputs, output: captured.__setitem__("activation", output)
    )

    def forward(batch: torch.Tensor) -> torch.Tensor:
        model(batch)
        return _pool(captured.pop("activation"))

    try:
        features, labels = _run(recipe, forward)
    finally:
        handle.remove()

    if recipe.expected_dim is not None and features.shape[1] != recipe.expected_dim:
        raise ShapeMismatchError(
            f"layer {recipe.layer} of {recipe.backbone} pools to "
            f"{features.shape[1]} features, recipe expects {recipe.expected_dim}"
        )
    _write(recipe, features, labels, tap=f"layer {recipe.layer} ({node_name})")
    return features, labels


def extract_logits(recipe: ExtractionRecipe) -> tuple[np.ndarray, np.ndarray | None]:
    """Pre-softmax classifier outputs, one row per image, written to FMX."""
    model = build_backbone(recipe.backbone, recipe.weights)
    features, labels = _run(recipe, model)
    _write(recipe, features, labels, tap="logits")
    return features, labels
