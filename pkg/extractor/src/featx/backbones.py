"""Backbone construction and the labeled layer presets.

Layer labels follow the 0/1/2 convention, counted from the head down:
label 0 taps the final pooled pre-logit features, labels 1 and 2 tap
successively earlier residual stages, pooled to vectors. Which concrete
blocks the labels map to is this project's documented choice; the presets
space three taps along the network path.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn
from torchvision import models

from .errors import UnknownBackboneError, UnknownLayerError, WeightsError

RANDOM_INIT_SEED = 0

_BUILDERS = {
    "resnet18": models.resnet18,
    "resnet34": models.resnet34,
    "resnet50": models.resnet50,
    "wide_resnet50_2": models.wide_resnet50_2,
}

# label -> module attribute holding the tapped activation
LAYER_PRESETS: dict[str, dict[int, str]] = {
    name: {0: "avgpool", 1: "layer3", 2: "layer2"} for name in _BUILDERS
}


def available_backbones() -> list[str]:
    return sorted(_BUILDERS)


def layer_module_name(backbone: str, layer: int) -> str:
    """Module attribute tapped by a labeled layer selector."""
    try:
        presets = LAYER_PRESETS[backbone]
    except KeyError:
        raise UnknownBackboneError(
            f"unknown backbone {backbone!r}; available: {', '.join(available_backbones())}"
        ) from None
    try:
        return presets[layer]
    except KeyError:
        raise UnknownLayerError(
            f"backbone {backbone!r} labels layers {sorted(presets)}, got {layer}"
        ) from None


def build_backbone(backbone: str, weights: str | Path = "none") -> nn.Module:
    """Construct the backbone in eval mode.

    `weights` is either the string "none" for a randomly initialized
    network (seeded, so repeated builds are identical) or a path to a
    state-dict file saved with torch.save.
    """
    if backbone not in _BUILDERS:
        raise UnknownBackboneError(
            f"unknown backbone {backbone!r}; available: {', '.join(available_backbones())}"
        )
    if str(weights) == "none":
        # fork the RNG so seeding the init does not disturb callers
        with torch.random.fork_rng():
            torch.manual_seed(RANDOM_INIT_SEED)
            model = _BUILDERS[backbone](weights=None)
    else:
        path = Path(weights)
        if not path.is_file():
            raise WeightsError(f"weights file not found: {path}")
        model = _BUILDERS[backbone](weights=None)
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        except Exception as exc:  # corrupt files surface arbitrary parser errors
            raise WeightsError(f"cannot load weights from {path}: {exc}") from exc
    return model.eval()
